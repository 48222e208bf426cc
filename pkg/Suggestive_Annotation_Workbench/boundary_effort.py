"""
Fine-annotation effort: how much of the ground-truth contour the model
already drew.

    saved effort = C / L x 100%

L is the ground-truth boundary length and C the part of it that the
predicted boundary covers. Boundaries are discrete: a pixel belongs to the
class-c boundary when it carries class c and one of its 4-neighbours lies
outside the image or carries another class. Lengths are pixel counts.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import ndimage

from errors import DimensionMismatchError, InvariantError
from tensor_io import CLASS_NAMES, LabelMap, volume_slices

logger = logging.getLogger(__name__)

TISSUE_CLASSES = (1, 2, 3)
EFFORT_CSV_COLUMNS = ["class", "gt_boundary_len", "overlap_len", "saved_effort_pct"]

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class BoundarySet:
    class_id: int
    mask: np.ndarray
    source_dims: tuple[int, int]

    def __post_init__(self):
        if tuple(self.mask.shape) != tuple(self.source_dims):
            raise InvariantError(f"boundary mask {self.mask.shape} does not match {self.source_dims}")
        mask = np.array(self.mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def pixels(self) -> frozenset:
        return frozenset((int(r), int(c)) for r, c in np.argwhere(self.mask))

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundarySet):
            return NotImplemented
        return (
            self.class_id == other.class_id
            and self.source_dims == other.source_dims
            and np.array_equal(self.mask, other.mask)
        )

    __hash__ = None


@dataclass(frozen=True)
class ClassEffort:
    class_id: int
    gt_boundary_len: int
    overlap_len: int
    saved_effort_pct: float

    @property
    def name(self) -> str:
        return CLASS_NAMES[self.class_id]


@dataclass(frozen=True)
class EffortReport:
    per_class: tuple[ClassEffort, ...]

    def __post_init__(self):
        for row in self.per_class:
            if row.overlap_len > row.gt_boundary_len:
                raise InvariantError(f"{row.name}: overlap exceeds ground-truth boundary")
            if not 0.0 <= row.saved_effort_pct <= 100.0:
                raise InvariantError(f"{row.name}: saved effort {row.saved_effort_pct} outside [0, 100]")

    def pct(self, class_id: int) -> float:
        return next(r.saved_effort_pct for r in self.per_class if r.class_id == class_id)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.name, r.gt_boundary_len, r.overlap_len, r.saved_effort_pct) for r in self.per_class],
            columns=EFFORT_CSV_COLUMNS,
        )

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, lineterminator="\n")

    def as_dict(self) -> dict:
        return {
            r.name: {
                "gt_boundary_len": r.gt_boundary_len,
                "overlap_len": r.overlap_len,
                "saved_effort_pct": r.saved_effort_pct,
            }
            for r in self.per_class
        }


def _require_2d(label_map: LabelMap) -> None:
    if label_map.rank != 2:
        raise DimensionMismatchError(f"expected a 2D label map, got rank {label_map.rank}")


def extract_boundary(label_map: LabelMap, class_id: int) -> BoundarySet:
    _require_2d(label_map)
    region = label_map.data == class_id
    # border_value=0: pixels on the image border always count as boundary
    interior = ndimage.binary_erosion(region, structure=_FOUR_CONNECTED, border_value=0)
    return BoundarySet(class_id, region & ~interior, label_map.dims)


def _dilate(mask: np.ndarray, tol: int) -> np.ndarray:
    if tol == 0 or not mask.any():
        return mask
    square = np.ones((2 * tol + 1, 2 * tol + 1), dtype=bool)
    return ndimage.binary_dilation(mask, structure=square)


def boundary_overlap(gt_b: BoundarySet, pred_b: BoundarySet, tol: int = 0) -> int:
    """Ground-truth boundary pixels within Chebyshev distance `tol` of a predicted one."""
    if gt_b.class_id != pred_b.class_id:
        raise InvariantError(f"class mismatch: {gt_b.class_id} vs {pred_b.class_id}")
    if gt_b.source_dims != pred_b.source_dims:
        raise DimensionMismatchError(f"dims differ: {gt_b.source_dims} vs {pred_b.source_dims}")
    if tol < 0:
        raise ValueError(f"tolerance must be non-negative, got {tol}")
    return int(np.logical_and(gt_b.mask, _dilate(pred_b.mask, tol)).sum())


def _class_counts(gt: LabelMap, pred: LabelMap, class_id: int, tol: int) -> tuple[int, int]:
    """(L, C) summed over axial slices in slice-index order."""
    if gt.dims != pred.dims:
        raise DimensionMismatchError(f"dims differ: {gt.dims} vs {pred.dims}")
    length = covered = 0
    for gt_slice, pred_slice in zip(volume_slices(gt), volume_slices(pred)):
        gt_b = extract_boundary(gt_slice, class_id)
        length += len(gt_b)
        covered += boundary_overlap(gt_b, extract_boundary(pred_slice, class_id), tol)
    return length, covered


def _pct(length: int, covered: int) -> float:
    # no ground-truth curve: nothing is left to draw
    return 100.0 if length == 0 else 100.0 * covered / length


def saved_effort(gt: LabelMap, pred: LabelMap, class_id: int, tol: int = 0) -> float:
    if class_id not in TISSUE_CLASSES:
        raise ValueError(f"class_id must be one of {TISSUE_CLASSES}, got {class_id}")
    return _pct(*_class_counts(gt, pred, class_id, tol))


def effort_report(gt: LabelMap, pred: LabelMap, tol: int = 0) -> EffortReport:
    rows = []
    for class_id in TISSUE_CLASSES:
        length, covered = _class_counts(gt, pred, class_id, tol)
        rows.append(ClassEffort(class_id, length, covered, _pct(length, covered)))
    report = EffortReport(tuple(rows))
    logger.debug("effort report: %s", {r.name: round(r.saved_effort_pct, 2) for r in rows})
    return report


def missing_boundary(gt: LabelMap, pred: LabelMap, class_id: int, tol: int = 0) -> BoundarySet:
    """Ground-truth boundary pixels the prediction misses: what the annotator still draws."""
    _require_2d(gt)
    if gt.dims != pred.dims:
        raise DimensionMismatchError(f"dims differ: {gt.dims} vs {pred.dims}")
    gt_b = extract_boundary(gt, class_id)
    covered = _dilate(extract_boundary(pred, class_id).mask, tol)
    return BoundarySet(class_id, gt_b.mask & ~covered, gt.dims)
