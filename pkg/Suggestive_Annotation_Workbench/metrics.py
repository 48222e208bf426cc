"""
Segmentation metrics: hard Dice for evaluation, the soft-Dice training loss
(L = m - sum_i DSC_i, m = 4) with its analytic gradient in logit space,
and the Average BvSB uncertainty score.

All accumulations run in float64 regardless of the storage precision.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from errors import DimensionMismatchError, InvariantError
from tensor_io import CLASS_NAMES, NUM_CLASSES, LabelMap, ProbMap

logger = logging.getLogger(__name__)

SOFT_DICE_EPS = 1e-6
DICE_CSV_HEADER = "class_0,class_1,class_2,class_3,mean_foreground"


# ─────────────────────────────────────────────────────────────────────
# Report types
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DiceReport:
    per_class: tuple[float, float, float, float]
    mean_foreground: float

    def __post_init__(self):
        if len(self.per_class) != NUM_CLASSES:
            raise InvariantError(f"DiceReport needs {NUM_CLASSES} ratios")
        if any(not 0.0 <= r <= 1.0 for r in self.per_class):
            raise InvariantError(f"Dice ratios must lie in [0, 1]: {self.per_class}")
        if abs(self.mean_foreground - _foreground_mean(self.per_class)) > 1e-12:
            raise InvariantError("mean_foreground must be the mean of classes 1..3")

    @classmethod
    def from_ratios(cls, ratios: Sequence[float]) -> "DiceReport":
        per_class = tuple(float(r) for r in ratios)
        return cls(per_class, _foreground_mean(per_class))

    def to_csv_row(self) -> str:
        return ",".join(repr(v) for v in (*self.per_class, self.mean_foreground))

    def as_dict(self) -> dict:
        return {"per_class": list(self.per_class), "mean_foreground": self.mean_foreground}


@dataclass(frozen=True)
class LossValue:
    value: float
    per_class_soft_dsc: tuple[float, float, float, float]


def _foreground_mean(per_class: Sequence[float]) -> float:
    return (per_class[1] + per_class[2] + per_class[3]) / 3.0


def _check_dims(a, b) -> None:
    if a.dims != b.dims:
        raise DimensionMismatchError(f"dims differ: {a.dims} vs {b.dims}")


def one_hot(labels: np.ndarray) -> np.ndarray:
    """(..., ) class ids -> (..., 4) float64 indicator."""
    return np.eye(NUM_CLASSES, dtype=np.float64)[labels]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the trailing channel axis, shifted by the per-pixel max."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


# ─────────────────────────────────────────────────────────────────────
# Hard Dice
# ─────────────────────────────────────────────────────────────────────

def hard_dice(pred: LabelMap, gt: LabelMap, class_id: int) -> float:
    """2|A∩B| / (|A|+|B|) for the class-`class_id` pixel sets; 1.0 when both are empty."""
    _check_dims(pred, gt)
    if class_id not in range(NUM_CLASSES):
        raise ValueError(f"class_id must be in 0..3, got {class_id}")
    a = pred.data == class_id
    b = gt.data == class_id
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def dice_report(pred: LabelMap, gt: LabelMap) -> DiceReport:
    return DiceReport.from_ratios([hard_dice(pred, gt, c) for c in range(NUM_CLASSES)])


def mean_dice_report(reports: Iterable[DiceReport]) -> DiceReport:
    """Per-class mean over several reports (e.g. one per test case)."""
    reports = list(reports)
    if not reports:
        raise ValueError("mean_dice_report needs at least one report")
    table = np.array([r.per_class for r in reports], dtype=np.float64)
    return DiceReport.from_ratios(table.mean(axis=0).tolist())


# ─────────────────────────────────────────────────────────────────────
# Soft Dice loss and gradient
# ─────────────────────────────────────────────────────────────────────

def soft_dice_terms(probs: np.ndarray, onehot: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Loss, per-class soft DSC and dL/dprobs for flattened (n, 4) arrays.

    DSC_c = (2 sum p_c g_c + eps) / (sum p_c + sum g_c + eps)
    """
    intersection = (probs * onehot).sum(axis=0)
    denom = probs.sum(axis=0) + onehot.sum(axis=0) + SOFT_DICE_EPS
    numer = 2.0 * intersection + SOFT_DICE_EPS
    dsc = numer / denom
    loss = NUM_CLASSES - float(dsc.sum())
    grad_probs = -(2.0 * onehot / denom - numer / denom ** 2)
    return loss, dsc, grad_probs


def soft_dice_logit_terms(logits: np.ndarray, onehot: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Same as soft_dice_terms, chained through a per-pixel softmax: returns dL/dlogits."""
    probs = softmax(logits)
    loss, dsc, grad_probs = soft_dice_terms(probs, onehot)
    inner = (probs * grad_probs).sum(axis=-1, keepdims=True)
    return loss, dsc, probs * (grad_probs - inner)


def soft_dice_loss(pred: ProbMap, gt: LabelMap) -> LossValue:
    _check_dims(pred, gt)
    probs = pred.data.reshape(-1, NUM_CLASSES).astype(np.float64)
    loss, dsc, _ = soft_dice_terms(probs, one_hot(gt.data.reshape(-1)))
    return LossValue(loss, tuple(float(d) for d in dsc))


def soft_dice_grad(logits: np.ndarray, gt: LabelMap) -> np.ndarray:
    """dL/dlogits of soft_dice_loss(softmax(logits), gt), same shape as `logits`."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != gt.dims + (NUM_CLASSES,):
        raise DimensionMismatchError(
            f"logits shape {logits.shape} does not match labels {gt.dims} x {NUM_CLASSES}"
        )
    if not np.all(np.isfinite(logits)):
        raise InvariantError("logits contain non-finite values")
    _, _, grad = soft_dice_logit_terms(
        logits.reshape(-1, NUM_CLASSES), one_hot(gt.data.reshape(-1))
    )
    return grad.reshape(logits.shape)


# ─────────────────────────────────────────────────────────────────────
# Uncertainty
# ─────────────────────────────────────────────────────────────────────

def bvsb_margins(pred: ProbMap) -> np.ndarray:
    """Per-pixel best-minus-second-best probability, float64, spatial shape."""
    ordered = np.sort(pred.data.astype(np.float64), axis=-1)
    return ordered[..., -1] - ordered[..., -2]


def average_bvsb(pred: ProbMap) -> float:
    """Mean best-vs-second-best margin over all pixels; lower means more uncertain."""
    return float(bvsb_margins(pred).mean())


def describe(report: DiceReport) -> str:
    return ", ".join(f"{name} {value:.4f}" for name, value in zip(CLASS_NAMES, report.per_class))
