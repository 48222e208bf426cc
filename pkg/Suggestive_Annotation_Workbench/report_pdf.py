"""
PDF run record for a simulation: configuration, Dice curve table, queried
cases with their saved effort, and the saved-effort summary.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from fpdf import FPDF
from fpdf.enums import XPos, YPos

from active_loop import SimulationLog
from log_tables import dice_curve_frame, effort_summary, iterations_frame
from tensor_io import atomic_write_bytes

logger = logging.getLogger(__name__)

# Workbench palette
INK_R, INK_G, INK_B = 28, 46, 74
ACCENT_R, ACCENT_G, ACCENT_B = 214, 122, 36

PAGE_WIDTH = 210
# document CreationDate when no generated_at stamp is given
FIXED_CREATION_DATE = datetime(2000, 1, 1, tzinfo=timezone.utc)
MAX_TABLE_COLUMNS = 9


class RunRecordPDF(FPDF):
    """A4 portrait record with a coloured header bar and page footer.

    Without `generated_at` the footer carries no timestamp and the document
    metadata uses a fixed date.
    """

    def __init__(self, generated_at: Optional[datetime] = None):
        super().__init__()
        self.generated_at = generated_at
        self.set_creation_date(generated_at or FIXED_CREATION_DATE)

    def header(self):
        self.set_fill_color(INK_R, INK_G, INK_B)
        self.rect(0, 0, PAGE_WIDTH, 12, "F")
        self.set_fill_color(ACCENT_R, ACCENT_G, ACCENT_B)
        self.rect(0, 12, PAGE_WIDTH, 1.5, "F")

        self.set_y(18)
        self.set_font("Helvetica", "B", 11)
        self.set_text_color(INK_R, INK_G, INK_B)
        self.cell(0, 6, "Suggestive Annotation Workbench", new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="C")
        self.set_font("Helvetica", "", 9)
        self.set_text_color(100, 100, 100)
        self.cell(0, 5, "Active-learning simulation record", new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="C")
        self.ln(3)

    def footer(self):
        self.set_y(-20)
        self.set_fill_color(ACCENT_R, ACCENT_G, ACCENT_B)
        self.rect(10, self.get_y(), 190, 0.5, "F")
        self.ln(3)
        self.set_font("Helvetica", "I", 7)
        self.set_text_color(130, 130, 130)
        text = f"Page {self.page_no()}/{{nb}}"
        if self.generated_at is not None:
            text += f"    |    Generated {self.generated_at.strftime('%Y-%m-%d %H:%M UTC')}"
        self.cell(0, 4, text, align="C")

    def section_title(self, title: str):
        self.ln(3)
        self.set_font("Helvetica", "B", 11)
        self.set_text_color(INK_R, INK_G, INK_B)
        self.cell(0, 7, title, new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.set_draw_color(ACCENT_R, ACCENT_G, ACCENT_B)
        self.set_line_width(0.4)
        self.line(10, self.get_y(), 200, self.get_y())
        self.ln(3)

    def label_value(self, label: str, value: str):
        self.set_font("Helvetica", "B", 9)
        self.set_text_color(60, 60, 60)
        self.cell(55, 6, label + ":", align="R")
        self.cell(3, 6, "")
        self.set_font("Helvetica", "", 9)
        self.set_text_color(30, 30, 30)
        self.cell(0, 6, value or "N/A", new_x=XPos.LMARGIN, new_y=YPos.NEXT)

    def table(self, frame: pd.DataFrame, empty_note: str):
        if frame.empty:
            self.set_font("Helvetica", "I", 9)
            self.set_text_color(130, 130, 130)
            self.cell(0, 6, "    " + empty_note, new_x=XPos.LMARGIN, new_y=YPos.NEXT)
            return
        # wide tables are split into column blocks that keep the first column
        key, rest = frame.columns[0], list(frame.columns[1:])
        for start in range(0, max(len(rest), 1), MAX_TABLE_COLUMNS - 1):
            block = [key, *rest[start:start + MAX_TABLE_COLUMNS - 1]]
            width = 190 / len(block)
            self.set_fill_color(240, 240, 240)
            self.set_font("Helvetica", "B", 7)
            self.set_text_color(60, 60, 60)
            for column in block:
                self.cell(width, 5, " " + str(column)[:18], fill=True)
            self.ln(5)
            self.set_font("Helvetica", "", 7)
            for row in frame[block].itertuples(index=False):
                for value in row:
                    self.cell(width, 5, " " + _fmt(value))
                self.ln(5)
            self.ln(2)


def _fmt(value) -> str:
    if isinstance(value, float):
        return "-" if pd.isna(value) else f"{value:.4f}"
    return str(value)[:18]


def build_pdf(log: SimulationLog, generated_at: Optional[datetime] = None) -> bytes:
    pdf = RunRecordPDF(generated_at)
    pdf.alias_nb_pages()
    pdf.set_auto_page_break(auto=True, margin=25)
    pdf.add_page()

    # ── Title ──
    cfg = log.config
    pdf.set_font("Helvetica", "B", 16)
    pdf.set_text_color(INK_R, INK_G, INK_B)
    pdf.cell(0, 10, f"Simulation: {cfg.strategy} query", new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="C")
    pdf.set_font("Helvetica", "", 10)
    pdf.set_text_color(100, 100, 100)
    pdf.cell(
        0, 6, f"{len(log.records)} queries, stopped on {log.stop_reason}",
        new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="C",
    )
    pdf.ln(4)

    # ── Configuration ──
    pdf.section_title("Configuration")
    pdf.label_value("Strategy", cfg.strategy)
    pdf.label_value("Seed", str(cfg.seed))
    pdf.label_value("Initial labeled cases", ", ".join(log.initial_labeled_ids))
    pdf.label_value("Budget", "unbounded" if cfg.budget is None else str(cfg.budget))
    pdf.label_value("Target mean Dice", "none" if cfg.target_mean_dice is None else f"{cfg.target_mean_dice:.4f}")
    pdf.label_value("Effort tolerance", f"{cfg.effort_tol} px")
    train = cfg.train_cfg
    pdf.label_value(
        "Training",
        f"lr {train.learning_rate:g}, max {train.max_epochs} epochs, patience {train.patience}",
    )
    pdf.label_value("Final model", log.final_model_path)

    # ── Results ──
    pdf.section_title("Test Dice per iteration")
    pdf.table(dice_curve_frame(log), "No evaluations recorded.")

    pdf.section_title("Queried cases")
    pdf.table(iterations_frame(log), "No cases were queried.")

    pdf.section_title("Saved annotation effort (%)")
    pdf.table(effort_summary(log), "No cases were queried.")

    return bytes(pdf.output())


def write_pdf(log: SimulationLog, path: Union[str, Path], generated_at: Optional[datetime] = None) -> Path:
    path = Path(path)
    atomic_write_bytes(path, build_pdf(log, generated_at))
    logger.info("wrote run record %s", path)
    return path
