"""
Brain-like 2D phantoms with exact labels.

Each case is a set of concentric ellipses, outside in: background, CSF, GM,
WM. Centre and radii are jittered per case; intensities are the class mean
plus a per-case intensity offset plus Gaussian noise, clamped to [0, 1].
The offset stands in for acquisition-site variability: pool and test cases
draw it uniformly from [-intensity_shift, +intensity_shift], while the
labeled seed cases of a benchmark all come from the site at +intensity_shift.
Every random number comes from the splitmix64 stream of (seed, case_index),
so generation is reproducible across platforms.
"""

import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from errors import InvariantError, PhantomGeometryError
from prng import SplitMix64, derive_seed
from tensor_io import (
    NUM_CLASSES,
    CaseEntry,
    DatasetManifest,
    LabelMap,
    Volume,
    save_manifest,
    save_tensor,
)

logger = logging.getLogger(__name__)

DEFAULT_SIZE = (32, 32)
DEFAULT_NOISE_SIGMA = 0.05
DEFAULT_RADII_JITTER = 0.15
DEFAULT_CLASS_MEANS = (0.05, 0.35, 0.65, 0.9)
DEFAULT_INTENSITY_SHIFT = 0.0
MAX_INTENSITY_SHIFT = 0.5

# Outer semi-axis of each tissue ellipse as a fraction of the half-extent.
BASE_RADII = {1: 0.80, 2: 0.58, 3: 0.34}
CENTER_SHIFT = 0.4        # max centre offset, in units of jitter x half-extent
MIN_CLASS_FRACTION = 0.01
MAX_GEOMETRY_RETRIES = 16
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class PhantomSpec:
    size: tuple[int, int] = DEFAULT_SIZE
    seed: int = 0
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    ring_radii_jitter: float = DEFAULT_RADII_JITTER
    class_intensity_means: tuple[float, float, float, float] = DEFAULT_CLASS_MEANS
    intensity_shift: float = DEFAULT_INTENSITY_SHIFT

    def __post_init__(self):
        rows, cols = self.size
        if rows < 8 or cols < 8:
            raise InvariantError(f"phantom size must be at least 8x8, got {self.size}")
        if self.noise_sigma < 0:
            raise InvariantError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if not 0 <= self.ring_radii_jitter < 0.25:
            raise InvariantError(f"ring_radii_jitter must lie in [0, 0.25), got {self.ring_radii_jitter}")
        means = self.class_intensity_means
        if len(means) != NUM_CLASSES or any(not 0.0 <= m <= 1.0 for m in means):
            raise InvariantError(f"need {NUM_CLASSES} class means in [0, 1], got {means}")
        if len(set(means)) != NUM_CLASSES:
            raise InvariantError(f"class means must be distinct, got {means}")
        if not 0.0 <= self.intensity_shift < MAX_INTENSITY_SHIFT:
            raise InvariantError(
                f"intensity_shift must lie in [0, {MAX_INTENSITY_SHIFT}), got {self.intensity_shift}"
            )


def _draw_geometry(spec: PhantomSpec, rng: SplitMix64) -> tuple[dict, SplitMix64]:
    """Centre (row, col) and per-class (row, col) semi-axes in pixels."""
    rows, cols = spec.size
    half_r, half_c = rows / 2.0, cols / 2.0
    jitter = spec.ring_radii_jitter
    draws, rng = rng.f64_block(2 + 2 * len(BASE_RADII))
    signed = 2.0 * draws - 1.0
    center = (
        (rows - 1) / 2.0 + signed[0] * jitter * CENTER_SHIFT * half_r,
        (cols - 1) / 2.0 + signed[1] * jitter * CENTER_SHIFT * half_c,
    )
    axes = {}
    for k, class_id in enumerate(sorted(BASE_RADII)):
        base = BASE_RADII[class_id]
        axes[class_id] = (
            base * half_r * (1.0 + jitter * signed[2 + 2 * k]),
            base * half_c * (1.0 + jitter * signed[3 + 2 * k]),
        )
    return {"center": center, "axes": axes}, rng


def _rasterize(spec: PhantomSpec, geometry: dict) -> np.ndarray:
    rows, cols = spec.size
    r, c = np.meshgrid(np.arange(rows, dtype=np.float64), np.arange(cols, dtype=np.float64), indexing="ij")
    cr, cc = geometry["center"]
    labels = np.zeros(spec.size, dtype=np.uint8)
    # outer ellipses first, inner classes overwrite
    for class_id in sorted(geometry["axes"]):
        ar, ac = geometry["axes"][class_id]
        inside = ((r - cr) / ar) ** 2 + ((c - cc) / ac) ** 2 <= 1.0
        labels[inside] = class_id
    return labels


def _geometry_ok(geometry: dict, labels: np.ndarray) -> bool:
    axes = geometry["axes"]
    nested = all(
        axes[inner][dim] < axes[outer][dim]
        for inner, outer in ((3, 2), (2, 1))
        for dim in (0, 1)
    )
    counts = np.bincount(labels.reshape(-1), minlength=NUM_CLASSES)
    return nested and bool(np.all(counts >= MIN_CLASS_FRACTION * labels.size))


def generate_case(
    spec: PhantomSpec, case_index: int, offset: Optional[float] = None
) -> tuple[Volume, LabelMap]:
    """One case; `offset` pins the intensity offset instead of drawing it."""
    rng = SplitMix64.seeded(derive_seed(spec.seed, case_index))
    for attempt in range(MAX_GEOMETRY_RETRIES):
        geometry, rng = _draw_geometry(spec, rng)
        labels = _rasterize(spec, geometry)
        if _geometry_ok(geometry, labels):
            break
        logger.debug("case %d: degenerate geometry on attempt %d, redrawing", case_index, attempt)
    else:
        raise PhantomGeometryError(
            f"case {case_index}: no valid geometry after {MAX_GEOMETRY_RETRIES} attempts"
        )

    noise, rng = rng.normal_block(labels.size)
    # drawn after the noise so the noise field does not depend on the shift
    draw, rng = rng.f64_block(1)
    if offset is None:
        offset = spec.intensity_shift * (2.0 * float(draw[0]) - 1.0)
    means = np.asarray(spec.class_intensity_means, dtype=np.float64) + offset
    intensity = means[labels] + spec.noise_sigma * noise.reshape(spec.size)
    intensity = np.clip(intensity, 0.0, 1.0)
    return Volume(intensity.astype(np.float32)), LabelMap(labels)


def generate_benchmark(
    spec: PhantomSpec,
    n_labeled_seed: int,
    n_pool: int,
    n_test: int,
    out_dir: Union[str, Path],
) -> DatasetManifest:
    """Write VTF1 cases and `manifest.json`; case indices run labeled, pool, test.

    Files are staged in a hidden sibling directory and moved into `out_dir`
    only once every case has been generated, so a failure leaves no cases behind.
    """
    if min(n_labeled_seed, n_pool, n_test) < 0:
        raise InvariantError("case counts must be non-negative")
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        splits = ["labeled"] * n_labeled_seed + ["unlabeled"] * n_pool + ["test"] * n_test
        staged = []
        for index, split in enumerate(splits):
            case_id = f"case_{index:03d}"
            pinned = spec.intensity_shift if split == "labeled" else None
            volume, labels = generate_case(spec, index, pinned)
            volume_path = staging / f"{case_id}_volume.vtf"
            label_path = staging / f"{case_id}_labels.vtf"
            save_tensor(volume, volume_path)
            save_tensor(labels, label_path)
            staged.append(CaseEntry(case_id, volume_path, label_path, split))
        save_manifest(DatasetManifest(tuple(staged)), staging / MANIFEST_NAME)

        out_dir.mkdir(exist_ok=True)
        for item in sorted(staging.iterdir()):
            os.replace(item, out_dir / item.name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    manifest = DatasetManifest(tuple(
        replace(c, volume_path=out_dir / c.volume_path.name, label_path=out_dir / c.label_path.name)
        for c in staged
    ))
    logger.info(
        "wrote phantom benchmark to %s: %d labeled, %d pool, %d test",
        out_dir, n_labeled_seed, n_pool, n_test,
    )
    return manifest
