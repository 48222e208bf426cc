"""
Reference segmenter: a linear-softmax pixel classifier over seven hand
features, trained by full-batch gradient descent on the soft-Dice loss.

It honours the contract the rest of the workbench relies on (4-channel
softmax output, Dice-loss training, warm start from previous weights) and
sits behind the `Segmenter` protocol so a heavier model can replace it.
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, Union

import numpy as np
from scipy import ndimage

from errors import (
    DimensionMismatchError,
    DivergenceError,
    InvariantError,
    ModelFormatError,
    PoolError,
)
from metrics import one_hot, soft_dice_logit_terms, softmax
from tensor_io import (
    NUM_CLASSES,
    LabelMap,
    ProbMap,
    Volume,
    atomic_write_bytes,
    volume_slices,
)

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("intensity", "box_r1", "box_r2", "box_r4", "row", "col", "bias")
NUM_FEATURES = len(FEATURE_NAMES)
SMOOTHING_RADII = (1, 2, 4)

MODEL_MAGIC = b"SGM1"

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_MAX_EPOCHS = 200
DEFAULT_PATIENCE = 30
MIN_IMPROVEMENT = 1e-6


# ─────────────────────────────────────────────────────────────────────
# Features
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class FeatureMap:
    """(rows, cols, 7) float64 per-pixel feature vectors."""
    values: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return tuple(int(d) for d in self.values.shape[:2])

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1, NUM_FEATURES)


def normalized_intensity(slice2d: Volume) -> np.ndarray:
    """u8 intensities scale by 1/255; f32 intensities clip to [0, 1]."""
    if slice2d.data.dtype == np.uint8:
        return slice2d.data.astype(np.float64) / 255.0
    values = slice2d.data.astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise InvariantError("volume contains non-finite intensities")
    return np.clip(values, 0.0, 1.0)


def extract_features(slice2d: Volume) -> FeatureMap:
    if slice2d.rank != 2:
        raise DimensionMismatchError(f"features need a 2D slice, got rank {slice2d.rank}")
    intensity = normalized_intensity(slice2d)
    rows, cols = intensity.shape
    smoothed = [
        ndimage.uniform_filter(intensity, size=2 * r + 1, mode="nearest") for r in SMOOTHING_RADII
    ]
    row_coord, col_coord = np.meshgrid(
        np.arange(rows, dtype=np.float64) / rows,
        np.arange(cols, dtype=np.float64) / cols,
        indexing="ij",
    )
    values = np.stack(
        [intensity, *smoothed, row_coord, col_coord, np.ones_like(intensity)], axis=-1
    )
    values.setflags(write=False)
    return FeatureMap(values)


# ─────────────────────────────────────────────────────────────────────
# Parameters and configuration
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray
    trained_epochs: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (NUM_CLASSES, NUM_FEATURES):
            raise InvariantError(f"weights must be {NUM_CLASSES}x{NUM_FEATURES}, got {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise InvariantError("model weights contain non-finite values")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise InvariantError(f"rng_seed must fit in u64, got {self.rng_seed}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def fresh(cls, seed: int = 0) -> "ModelParams":
        """All-zero weights: uniform predictions until trained."""
        return cls(np.zeros((NUM_CLASSES, NUM_FEATURES)), 0, seed)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.weights.tobytes() == other.weights.tobytes()
            and self.trained_epochs == other.trained_epochs
            and self.rng_seed == other.rng_seed
        )

    __hash__ = None


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    patience: int = DEFAULT_PATIENCE
    batch: str = "full"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvariantError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 1:
            raise InvariantError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 1 <= self.patience <= self.max_epochs:
            raise InvariantError(f"patience must lie in 1..max_epochs, got {self.patience}")
        if self.batch != "full":
            raise InvariantError(f"only full-batch updates are supported, got {self.batch!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvariantError(f"seed must fit in u64, got {self.seed}")


@dataclass(frozen=True)
class TrainingRun:
    params: ModelParams
    losses: tuple[float, ...] = field(repr=False)
    best_epoch: int
    stop_reason: str

    @property
    def epochs_run(self) -> int:
        return len(self.losses)

    @property
    def best_loss(self) -> float:
        return self.losses[self.best_epoch]


# ─────────────────────────────────────────────────────────────────────
# Objective
# ─────────────────────────────────────────────────────────────────────

Batch = tuple[np.ndarray, np.ndarray]


def training_batches(labeled: Sequence[tuple[Volume, LabelMap]]) -> list[Batch]:
    """One (features (n, 7), one-hot (n, 4)) pair per 2D slice, in input order."""
    batches = []
    for volume, labels in labeled:
        if volume.dims != labels.dims:
            raise DimensionMismatchError(f"volume {volume.dims} and labels {labels.dims} differ")
        for vol_slice, lab_slice in zip(volume_slices(volume), volume_slices(labels)):
            batches.append(
                (extract_features(vol_slice).flat(), one_hot(lab_slice.data.reshape(-1)))
            )
    return batches


def model_loss_and_grad(weights: np.ndarray, batches: Sequence[Batch]) -> tuple[float, np.ndarray]:
    """Mean soft-Dice loss over slices and its gradient w.r.t. the 4x7 weights."""
    total = 0.0
    grad = np.zeros((NUM_CLASSES, NUM_FEATURES))
    for features, onehot in batches:
        loss, _, grad_logits = soft_dice_logit_terms(features @ weights.T, onehot)
        total += loss
        grad += grad_logits.T @ features
    return total / len(batches), grad / len(batches)


def fit(init: ModelParams, labeled: Sequence[tuple[Volume, LabelMap]], cfg: TrainConfig) -> TrainingRun:
    """
    Full-batch gradient descent from `init`.

    Stops after `max_epochs`, or once the loss has gone `patience` epochs
    without improving by at least 1e-6. Returns the best weights seen.
    """
    if not labeled:
        raise PoolError("cannot train on an empty labeled set")
    batches = training_batches(labeled)

    weights = init.weights.copy()
    best_loss, best_weights, best_epoch = np.inf, weights, 0
    reference, stall = np.inf, 0
    losses: list[float] = []
    stop_reason = "max_epochs"

    for epoch in range(cfg.max_epochs):
        loss, grad = model_loss_and_grad(weights, batches)
        if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
            raise DivergenceError("training loss became non-finite", epoch)
        losses.append(loss)
        if loss < best_loss:
            best_loss, best_weights, best_epoch = loss, weights, epoch
        if loss < reference - MIN_IMPROVEMENT:
            reference, stall = loss, 0
        else:
            stall += 1
            if stall >= cfg.patience:
                stop_reason = "patience"
                break
        weights = weights - cfg.learning_rate * grad

    logger.debug(
        "trained %d epochs on %d slices: best loss %.6f at epoch %d (%s)",
        len(losses), len(batches), best_loss, best_epoch, stop_reason,
    )
    params = ModelParams(best_weights, init.trained_epochs + best_epoch, init.rng_seed)
    return TrainingRun(params, tuple(losses), best_epoch, stop_reason)


def train(init: ModelParams, labeled: Sequence[tuple[Volume, LabelMap]], cfg: TrainConfig) -> ModelParams:
    return fit(init, labeled, cfg).params


# ─────────────────────────────────────────────────────────────────────
# Inference
# ─────────────────────────────────────────────────────────────────────

def predict(model: ModelParams, slice2d: Volume) -> ProbMap:
    if not np.all(np.isfinite(model.weights)):
        raise InvariantError("model weights contain non-finite values")
    features = extract_features(slice2d)
    logits = features.values @ model.weights.T
    return ProbMap(softmax(logits).astype(np.float32))


def reconstruct_labels(pm: ProbMap) -> LabelMap:
    """Per-pixel argmax; ties go to the lowest class id."""
    return LabelMap(np.argmax(pm.data, axis=-1).astype(np.uint8))


def predict_probmaps(model: ModelParams, volume: Volume, predictor=predict) -> list[ProbMap]:
    """One ProbMap per 2D slice (3D volumes: axial slices in order)."""
    return [predictor(model, s) for s in volume_slices(volume)]


def predict_labels(model: ModelParams, volume: Volume, predictor=predict) -> LabelMap:
    """Argmax labels for a 2D or 3D volume, assembled slice by slice."""
    slices = [reconstruct_labels(pm).data for pm in predict_probmaps(model, volume, predictor)]
    return LabelMap(slices[0] if volume.rank == 2 else np.stack(slices, axis=0))


# ─────────────────────────────────────────────────────────────────────
# Model files: "SGM1" | u32 classes | u32 features | f64 weights
#              | u32 trained_epochs | u64 seed   (little-endian)
# ─────────────────────────────────────────────────────────────────────

_HEADER = struct.Struct("<4sII")
_TRAILER = struct.Struct("<IQ")


def encode_model(model: ModelParams) -> bytes:
    return (
        _HEADER.pack(MODEL_MAGIC, NUM_CLASSES, NUM_FEATURES)
        + model.weights.astype("<f8").tobytes()
        + _TRAILER.pack(model.trained_epochs, model.rng_seed)
    )


def decode_model(raw: bytes) -> ModelParams:
    if len(raw) < _HEADER.size:
        raise ModelFormatError("file shorter than the model header", len(raw))
    magic, classes, features = _HEADER.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}", 0)
    if classes != NUM_CLASSES:
        raise ModelFormatError(f"class count {classes}, expected {NUM_CLASSES}", 4)
    if features != NUM_FEATURES:
        raise ModelFormatError(f"feature count {features}, expected {NUM_FEATURES}", 8)
    weights_end = _HEADER.size + 8 * classes * features
    expected = weights_end + _TRAILER.size
    if len(raw) != expected:
        raise ModelFormatError(f"expected {expected} bytes, found {len(raw)}", min(len(raw), expected))
    weights = np.frombuffer(raw, dtype="<f8", count=classes * features, offset=_HEADER.size)
    trained_epochs, seed = _TRAILER.unpack_from(raw, weights_end)
    try:
        return ModelParams(weights.reshape(classes, features), trained_epochs, seed)
    except InvariantError as exc:
        raise ModelFormatError(str(exc), _HEADER.size) from exc


def save_model(model: ModelParams, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, encode_model(model))


def load_model(path: Union[str, Path]) -> ModelParams:
    return decode_model(Path(path).read_bytes())


# ─────────────────────────────────────────────────────────────────────
# Segmenter interface
# ─────────────────────────────────────────────────────────────────────

class Segmenter(Protocol):
    def fresh(self, seed: int) -> ModelParams: ...

    def fit(self, init: ModelParams, labeled: Sequence[tuple[Volume, LabelMap]], cfg: TrainConfig) -> TrainingRun: ...

    def predict(self, model: ModelParams, slice2d: Volume) -> ProbMap: ...


class LinearSoftmaxSegmenter:
    """The desk-scale reference model."""

    def fresh(self, seed: int) -> ModelParams:
        return ModelParams.fresh(seed)

    def fit(self, init, labeled, cfg) -> TrainingRun:
        return fit(init, labeled, cfg)

    def predict(self, model, slice2d) -> ProbMap:
        return predict(model, slice2d)
