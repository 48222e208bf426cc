"""
Suggestive annotation simulation
=================================

    train -> evaluate on test -> (stop?) -> score pool by Average BvSB
          -> query the most uncertain case -> annotate from ground truth
          -> warm-start retrain -> ...

A random-query baseline runs through the same loop. Each query records the
pool scores, the effort report of the model's prediction on the queried case
against its ground truth, and the test Dice after retraining.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import pandas as pd
from scipy.integrate import trapezoid

from boundary_effort import ClassEffort, EffortReport, effort_report
from errors import ConfigError, InvariantError, PoolError, PredictionError, WorkbenchError
from metrics import DiceReport, average_bvsb, describe, dice_report, mean_dice_report
from prng import SplitMix64
from segmenter import (
    LinearSoftmaxSegmenter,
    ModelParams,
    Segmenter,
    TrainConfig,
    predict_labels,
    predict_probmaps,
    save_model,
)
from tensor_io import CLASS_NAMES, DatasetManifest, LabelMap, Volume, load_tensor

logger = logging.getLogger(__name__)

STRATEGIES = ("bvsb", "random")
STOP_REASONS = ("budget", "target_reached", "pool_exhausted")
MODEL_FILE_NAME = "model.sgm"
LOG_FILE_NAME = "simulation_log.json"


# ─────────────────────────────────────────────────────────────────────
# Configuration and records
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SimulationConfig:
    strategy: str = "bvsb"
    seed: int = 0
    # None: every case of the manifest's labeled split
    initial_labeled_ids: Optional[tuple[str, ...]] = None
    # None: query until the pool is exhausted
    budget: Optional[int] = None
    target_mean_dice: Optional[float] = None
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    effort_tol: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.budget is not None and self.budget < 0:
            raise ConfigError(f"budget must be >= 0, got {self.budget}")
        if self.target_mean_dice is not None and not 0.0 < self.target_mean_dice <= 1.0:
            raise ConfigError(f"target_mean_dice must lie in (0, 1], got {self.target_mean_dice}")
        if self.effort_tol < 0:
            raise ConfigError(f"effort_tol must be >= 0, got {self.effort_tol}")
        if self.initial_labeled_ids is not None:
            object.__setattr__(self, "initial_labeled_ids", tuple(self.initial_labeled_ids))

    def as_dict(self) -> dict:
        document = asdict(self)
        if self.initial_labeled_ids is not None:
            document["initial_labeled_ids"] = list(self.initial_labeled_ids)
        return document


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    selected_id: str
    candidate_scores: Mapping[str, float]
    test_dice: DiceReport
    effort: EffortReport
    labeled_count: int
    train_epochs: int

    @property
    def selected_score(self) -> float:
        return self.candidate_scores[self.selected_id]


@dataclass(frozen=True)
class SimulationLog:
    config: SimulationConfig
    initial_labeled_ids: tuple[str, ...]
    initial_test_dice: DiceReport
    records: tuple[IterationRecord, ...]
    final_model_path: Optional[str]
    stop_reason: str

    def __post_init__(self):
        if self.stop_reason not in STOP_REASONS:
            raise InvariantError(f"unknown stop reason {self.stop_reason!r}")
        expected = len(self.initial_labeled_ids)
        for position, record in enumerate(self.records, start=1):
            expected += 1
            if record.iteration != position or record.labeled_count != expected:
                raise InvariantError(f"record {position} is out of sequence")

    def mean_dice_curve(self) -> list[float]:
        """Mean foreground test Dice after 0, 1, 2, ... queries."""
        return [self.initial_test_dice.mean_foreground] + [
            r.test_dice.mean_foreground for r in self.records
        ]

    # ── serialization ──

    def to_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "initial_labeled_ids": list(self.initial_labeled_ids),
            "initial_test_dice": self.initial_test_dice.as_dict(),
            "records": [
                {
                    "iteration": r.iteration,
                    "selected_id": r.selected_id,
                    "candidate_scores": dict(r.candidate_scores),
                    "test_dice": r.test_dice.as_dict(),
                    "effort": r.effort.as_dict(),
                    "labeled_count": r.labeled_count,
                    "train_epochs": r.train_epochs,
                }
                for r in self.records
            ],
            "final_model_path": self.final_model_path,
            "stop_reason": self.stop_reason,
        }

    def to_json(self) -> str:
        return stable_json(self.to_dict())

    @classmethod
    def from_dict(cls, document: dict) -> "SimulationLog":
        config = dict(document["config"])
        config["train_cfg"] = TrainConfig(**config["train_cfg"])
        return cls(
            config=SimulationConfig(**config),
            initial_labeled_ids=tuple(document["initial_labeled_ids"]),
            initial_test_dice=_dice_from_dict(document["initial_test_dice"]),
            records=tuple(
                IterationRecord(
                    iteration=r["iteration"],
                    selected_id=r["selected_id"],
                    candidate_scores={k: float(v) for k, v in r["candidate_scores"].items()},
                    test_dice=_dice_from_dict(r["test_dice"]),
                    effort=_effort_from_dict(r["effort"]),
                    labeled_count=r["labeled_count"],
                    train_epochs=r["train_epochs"],
                )
                for r in document["records"]
            ),
            final_model_path=document["final_model_path"],
            stop_reason=document["stop_reason"],
        )

    @classmethod
    def from_json(cls, text: str) -> "SimulationLog":
        return cls.from_dict(json.loads(text))


def _dice_from_dict(document: dict) -> DiceReport:
    return DiceReport(
        tuple(float(v) for v in document["per_class"]), float(document["mean_foreground"])
    )


def _effort_from_dict(document: dict) -> EffortReport:
    return EffortReport(
        tuple(
            ClassEffort(
                CLASS_NAMES.index(name),
                row["gt_boundary_len"],
                row["overlap_len"],
                float(row["saved_effort_pct"]),
            )
            for name, row in document.items()
        )
    )


def stable_json(value, indent: int = 2) -> str:
    """JSON with insertion-ordered keys and floats written with 17 significant digits."""

    def encode(item, level: int) -> str:
        if item is None or isinstance(item, bool):
            return json.dumps(item)
        if isinstance(item, float):
            if not math.isfinite(item):
                raise ValueError(f"cannot serialize non-finite float {item}")
            return format(item, ".17g")
        if isinstance(item, int):
            return str(item)
        if isinstance(item, str):
            return json.dumps(item)
        inner = " " * (indent * (level + 1))
        outer = " " * (indent * level)
        if isinstance(item, dict):
            if not item:
                return "{}"
            body = ",\n".join(
                f"{inner}{json.dumps(str(k))}: {encode(v, level + 1)}" for k, v in item.items()
            )
            return "{\n" + body + "\n" + outer + "}"
        if isinstance(item, (list, tuple)):
            if not item:
                return "[]"
            body = ",\n".join(f"{inner}{encode(v, level + 1)}" for v in item)
            return "[\n" + body + "\n" + outer + "]"
        raise TypeError(f"cannot serialize {type(item).__name__}")

    return encode(value, 0) + "\n"


# ─────────────────────────────────────────────────────────────────────
# Cases
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Case:
    id: str
    volume: Volume
    labels: Optional[LabelMap]


def load_cases(manifest: DatasetManifest, ids: Sequence[str]) -> dict[str, Case]:
    cases = {}
    for case_id in ids:
        entry = manifest.case(case_id)
        labels = load_tensor(entry.label_path, expect=LabelMap) if entry.label_path else None
        cases[case_id] = Case(case_id, load_tensor(entry.volume_path, expect=Volume), labels)
    return cases


def _labeled_pairs(cases: Sequence[Case]) -> list[tuple[Volume, LabelMap]]:
    return [(c.volume, c.labels) for c in cases]


def evaluate(model: ModelParams, cases: Sequence[Case], segmenter: Segmenter) -> DiceReport:
    """Mean over cases of the per-case Dice report."""
    return mean_dice_report(
        dice_report(predict_labels(model, c.volume, segmenter.predict), c.labels) for c in cases
    )


# ─────────────────────────────────────────────────────────────────────
# Scoring and selection
# ─────────────────────────────────────────────────────────────────────

def score_pool(
    model: ModelParams,
    pool: Sequence[Case],
    segmenter: Optional[Segmenter] = None,
) -> dict[str, float]:
    """Average BvSB per case (mean over its 2D slices), keyed by id in sorted order."""
    if not pool:
        raise PoolError("cannot score an empty pool")
    segmenter = segmenter or LinearSoftmaxSegmenter()
    scores = {}
    for case in sorted(pool, key=lambda c: c.id):
        try:
            maps = predict_probmaps(model, case.volume, segmenter.predict)
        except WorkbenchError as exc:
            raise PredictionError(case.id, exc) from exc
        scores[case.id] = math.fsum(average_bvsb(pm) for pm in maps) / len(maps)
    return scores


def select_candidate(
    scores: Mapping[str, float], strategy: str, rng: SplitMix64
) -> tuple[str, SplitMix64]:
    """
    bvsb: lowest score, ties to the lexicographically smallest id.
    random: uniform draw over the id-sorted pool; scores are ignored.
    """
    if not scores:
        raise PoolError("cannot select from an empty pool")
    if strategy == "bvsb":
        return min(sorted(scores), key=lambda case_id: scores[case_id]), rng
    if strategy == "random":
        ids = sorted(scores)
        index, rng = rng.uniform_int(len(ids))
        return ids[index], rng
    raise ConfigError(f"unknown strategy {strategy!r}")


# ─────────────────────────────────────────────────────────────────────
# Simulation
# ─────────────────────────────────────────────────────────────────────

def _initial_split(manifest: DatasetManifest, cfg: SimulationConfig) -> tuple[list[str], list[str], list[str]]:
    labeled_split = [c.id for c in manifest.pool("labeled")]
    if cfg.initial_labeled_ids is None:
        initial = labeled_split
    else:
        initial = list(cfg.initial_labeled_ids)
        unknown = [i for i in initial if i not in labeled_split]
        if unknown:
            raise PoolError(f"initial ids {unknown} are not in the manifest's labeled pool")
        if len(set(initial)) != len(initial):
            raise PoolError("initial_labeled_ids contains duplicates")
    if not initial:
        raise PoolError("the initial labeled set is empty")

    # labeled-split cases left out of the seed set join the pool
    pool = sorted([c.id for c in manifest.pool("unlabeled")] + [i for i in labeled_split if i not in initial])
    test = [c.id for c in manifest.pool("test")]
    if not pool:
        raise PoolError("the unlabeled pool is empty")
    if not test:
        raise PoolError("the test pool is empty")
    unlabeled_without_oracle = [c.id for c in manifest.pool("unlabeled") if c.label_path is None]
    if unlabeled_without_oracle:
        raise PoolError(f"pool cases {unlabeled_without_oracle} have no ground truth for the annotation oracle")
    return initial, pool, test


def run_simulation(
    manifest: DatasetManifest,
    cfg: SimulationConfig,
    out_dir: Optional[Union[str, Path]] = None,
    segmenter: Optional[Segmenter] = None,
) -> SimulationLog:
    segmenter = segmenter or LinearSoftmaxSegmenter()
    initial_ids, pool_ids, test_ids = _initial_split(manifest, cfg)
    cases = load_cases(manifest, [*initial_ids, *pool_ids, *test_ids])
    labeled = [cases[i] for i in initial_ids]
    pool = [cases[i] for i in pool_ids]
    test = [cases[i] for i in test_ids]
    rng = SplitMix64.seeded(cfg.seed)

    logger.info(
        "simulation (%s, seed %d): %d labeled, %d pool, %d test",
        cfg.strategy, cfg.seed, len(labeled), len(pool), len(test),
    )
    model = segmenter.fit(segmenter.fresh(cfg.train_cfg.seed), _labeled_pairs(labeled), cfg.train_cfg).params
    current = initial_dice = evaluate(model, test, segmenter)
    logger.info("initial test Dice: %s", describe(current))

    records: list[IterationRecord] = []
    while True:
        if cfg.target_mean_dice is not None and current.mean_foreground >= cfg.target_mean_dice:
            stop_reason = "target_reached"
            break
        if not pool:
            stop_reason = "pool_exhausted"
            break
        if cfg.budget is not None and len(records) >= cfg.budget:
            stop_reason = "budget"
            break

        scores = score_pool(model, pool, segmenter)
        selected_id, rng = select_candidate(scores, cfg.strategy, rng)
        selected = cases[selected_id]
        prediction = predict_labels(model, selected.volume, segmenter.predict)
        effort = effort_report(selected.labels, prediction, cfg.effort_tol)

        pool = [c for c in pool if c.id != selected_id]
        labeled.append(selected)
        run = segmenter.fit(model, _labeled_pairs(labeled), cfg.train_cfg)
        model = run.params
        current = evaluate(model, test, segmenter)

        records.append(
            IterationRecord(
                iteration=len(records) + 1,
                selected_id=selected_id,
                candidate_scores=scores,
                test_dice=current,
                effort=effort,
                labeled_count=len(labeled),
                train_epochs=run.epochs_run,
            )
        )
        logger.info(
            "iteration %d: queried %s (score %.6f), test Dice %s",
            len(records), selected_id, scores[selected_id], describe(current),
        )

    final_model_path = None
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        final_model_path = str(Path(out_dir) / MODEL_FILE_NAME)
        save_model(model, final_model_path)
    logger.info("simulation stopped: %s after %d queries", stop_reason, len(records))
    return SimulationLog(
        config=cfg,
        initial_labeled_ids=tuple(initial_ids),
        initial_test_dice=initial_dice,
        records=tuple(records),
        final_model_path=final_model_path,
        stop_reason=stop_reason,
    )


# ─────────────────────────────────────────────────────────────────────
# Comparison and derived quantities
# ─────────────────────────────────────────────────────────────────────

COMPARISON_COLUMNS = ["iteration", "bvsb_mean_dice", "random_mean_dice"]


@dataclass(frozen=True)
class StrategyComparison:
    table: pd.DataFrame
    logs: tuple[SimulationLog, SimulationLog]

    def to_csv(self) -> str:
        return self.table.to_csv(index=False, lineterminator="\n")


def _padded(curve: list[float], length: int) -> list[float]:
    # a stopped run keeps its last model, so its Dice stays put
    return curve + [curve[-1]] * (length - len(curve))


def compare_strategies(
    manifest: DatasetManifest,
    cfg_pair: Sequence[SimulationConfig],
    out_dirs: Optional[Sequence[Union[str, Path]]] = None,
    segmenter: Optional[Segmenter] = None,
) -> StrategyComparison:
    """
    Run both configs and align their mean test Dice by iteration.

    A bvsb/random pair is reordered bvsb first; `out_dirs` follows that order.
    """
    if len(cfg_pair) != 2:
        raise ConfigError("compare_strategies needs exactly two configs")
    first, second = cfg_pair
    if replace(first, strategy=second.strategy) != second:
        raise ConfigError("compared configs may differ only in strategy")

    ordered = sorted(cfg_pair, key=lambda c: STRATEGIES.index(c.strategy))
    logs = tuple(
        run_simulation(manifest, cfg, None if out_dirs is None else out_dirs[position], segmenter)
        for position, cfg in enumerate(ordered)
    )
    curves = [log.mean_dice_curve() for log in logs]

    length = max(len(c) for c in curves)
    columns = {name: _padded(curve, length) for name, curve in zip(COMPARISON_COLUMNS[1:], curves)}
    table = pd.DataFrame({"iteration": range(length), **columns}, columns=COMPARISON_COLUMNS)
    return StrategyComparison(table, logs)


def full_pool_baseline(
    manifest: DatasetManifest,
    cfg: SimulationConfig,
    segmenter: Optional[Segmenter] = None,
) -> DiceReport:
    """Test Dice of a fresh model trained on the seed set plus the entire pool."""
    segmenter = segmenter or LinearSoftmaxSegmenter()
    initial_ids, pool_ids, test_ids = _initial_split(manifest, cfg)
    cases = load_cases(manifest, [*initial_ids, *pool_ids, *test_ids])
    training = [cases[i] for i in (*initial_ids, *pool_ids)]
    model = segmenter.fit(segmenter.fresh(cfg.train_cfg.seed), _labeled_pairs(training), cfg.train_cfg).params
    return evaluate(model, [cases[i] for i in test_ids], segmenter)


def queries_to_reach(log: SimulationLog, dice: float) -> Optional[int]:
    """Fewest queries after which the mean foreground test Dice is >= `dice`."""
    for queries, value in enumerate(log.mean_dice_curve()):
        if value >= dice:
            return queries
    return None


def dice_curve_area(curve: Sequence[float]) -> float:
    """Trapezoidal area under mean Dice vs number of queries."""
    if len(curve) < 2:
        return 0.0
    return float(trapezoid(curve, dx=1.0))
