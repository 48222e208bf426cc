"""
Tabular views of a SimulationLog.

Each function returns a pandas DataFrame; the CLI writes them as CSV, the
PDF record prints them and the dashboard plots them.
"""

from typing import Sequence

import pandas as pd

from active_loop import SimulationLog, dice_curve_area, queries_to_reach
from boundary_effort import TISSUE_CLASSES
from tensor_io import CLASS_NAMES


def to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def dice_curve_frame(log: SimulationLog) -> pd.DataFrame:
    """Test Dice per class after 0, 1, 2, ... queries."""
    reports = [log.initial_test_dice] + [r.test_dice for r in log.records]
    labeled = [len(log.initial_labeled_ids)] + [r.labeled_count for r in log.records]
    rows = [
        {
            "iteration": iteration,
            "labeled_count": count,
            **{f"dice_{name}": value for name, value in zip(CLASS_NAMES, report.per_class)},
            "mean_foreground": report.mean_foreground,
        }
        for iteration, (report, count) in enumerate(zip(reports, labeled))
    ]
    return pd.DataFrame(rows)


def iterations_frame(log: SimulationLog) -> pd.DataFrame:
    """One row per query: what was picked, its score, and the effort it saved."""
    columns = [
        "iteration", "selected_id", "selected_score", "pool_size", "labeled_count", "train_epochs",
        "mean_foreground", *(f"effort_{CLASS_NAMES[c]}" for c in TISSUE_CLASSES),
    ]
    rows = [
        (
            r.iteration,
            r.selected_id,
            r.selected_score,
            len(r.candidate_scores),
            r.labeled_count,
            r.train_epochs,
            r.test_dice.mean_foreground,
            *(r.effort.pct(c) for c in TISSUE_CLASSES),
        )
        for r in log.records
    ]
    return pd.DataFrame(rows, columns=columns)


def candidate_scores_frame(log: SimulationLog) -> pd.DataFrame:
    """Long format: every pool score at every iteration, selected case flagged."""
    rows = [
        (r.iteration, case_id, score, case_id == r.selected_id)
        for r in log.records
        for case_id, score in r.candidate_scores.items()
    ]
    return pd.DataFrame(rows, columns=["iteration", "case_id", "avg_bvsb", "selected"])


def effort_summary(log: SimulationLog) -> pd.DataFrame:
    """Saved effort (%) with tissue classes as rows and Iteration1..n plus mean as columns."""
    table = pd.DataFrame(
        {
            f"Iteration{r.iteration}": [r.effort.pct(c) for c in TISSUE_CLASSES]
            for r in log.records
        },
        index=pd.Index([CLASS_NAMES[c] for c in TISSUE_CLASSES], name="class"),
    )
    table["mean"] = table.mean(axis=1) if log.records else float("nan")
    return table.reset_index()


def strategy_summary(logs: Sequence[SimulationLog], target: float) -> pd.DataFrame:
    """Per run: queries made, final Dice, curve area and queries needed to reach `target`."""
    rows = []
    for log in logs:
        curve = log.mean_dice_curve()
        rows.append(
            {
                "strategy": log.config.strategy,
                "queries": len(log.records),
                "stop_reason": log.stop_reason,
                "initial_mean_dice": curve[0],
                "final_mean_dice": curve[-1],
                "curve_area": dice_curve_area(curve),
                "queries_to_target": queries_to_reach(log, target),
            }
        )
    return pd.DataFrame(rows)
