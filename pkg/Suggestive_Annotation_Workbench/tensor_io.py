"""
Tensor I/O
==========

Volumes, label maps and probability maps, their VTF1 binary encoding,
8-bit PGM import/export, and dataset manifests.

VTF1 layout (little-endian, no padding, no checksum):

    "VTF1" | dtype u8 (0=u8, 1=f32) | kind u8 (0=volume, 1=labelmap, 2=probmap)
           | rank u8 | rank x u32 spatial dims | row-major payload

Probability maps carry an implicit trailing channel dimension of 4,
stored pixel-interleaved.
"""

import json
import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from errors import (
    DimensionMismatchError,
    InvariantError,
    ManifestError,
    PgmError,
    TensorFormatError,
)

logger = logging.getLogger(__name__)

NUM_CLASSES = 4
CLASS_NAMES = ("background", "CSF", "GM", "WM")

MAGIC = b"VTF1"
DTYPE_U8, DTYPE_F32 = 0, 1
KIND_VOLUME, KIND_LABELMAP, KIND_PROBMAP = 0, 1, 2
KIND_NAMES = {KIND_VOLUME: "volume", KIND_LABELMAP: "labelmap", KIND_PROBMAP: "probmap"}
SUPPORTED_RANKS = (2, 3)
PROB_SUM_TOLERANCE = 1e-5

_NUMPY_DTYPES = {DTYPE_U8: np.dtype("u1"), DTYPE_F32: np.dtype("<f4")}


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True, order="C")
    array.setflags(write=False)
    return array


def _check_rank(shape: tuple) -> None:
    if len(shape) not in SUPPORTED_RANKS:
        raise InvariantError(f"spatial rank must be 2 or 3, got {len(shape)}")
    if any(d < 1 for d in shape):
        raise InvariantError(f"dims must all be >= 1, got {shape}")


# ─────────────────────────────────────────────────────────────────────
# Tensor types
# ─────────────────────────────────────────────────────────────────────

class _Tensor:
    """Shared behaviour: immutable payload, bitwise equality."""

    kind: int
    data: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(d) for d in self.data.shape[: self.rank])

    @property
    def rank(self) -> int:
        return self.data.ndim

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.data.dtype == other.data.dtype
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    def __hash__(self):
        return hash((type(self).__name__, self.data.shape, self.data.tobytes()))


@dataclass(frozen=True, eq=False)
class Volume(_Tensor):
    """Scalar intensity grid, stored as u8 or f32."""
    data: np.ndarray
    kind: int = field(default=KIND_VOLUME, init=False, repr=False)

    def __post_init__(self):
        array = np.asarray(self.data)
        if array.dtype != np.uint8:
            array = array.astype(np.float32)
        _check_rank(array.shape)
        object.__setattr__(self, "data", _frozen(array))


@dataclass(frozen=True, eq=False)
class LabelMap(_Tensor):
    """Integer class grid with values in {0, 1, 2, 3}, stored as u8."""
    data: np.ndarray
    kind: int = field(default=KIND_LABELMAP, init=False, repr=False)

    def __post_init__(self):
        array = np.asarray(self.data)
        _check_rank(array.shape)
        bad = _first_bad_label(array)
        if bad is not None:
            raise InvariantError(
                f"label value {array.reshape(-1)[bad]!r} at flat index {bad} "
                f"is not a class id below {NUM_CLASSES}"
            )
        object.__setattr__(self, "data", _frozen(array.astype(np.uint8)))


@dataclass(frozen=True, eq=False)
class ProbMap(_Tensor):
    """Per-pixel 4-channel probabilities, channel dimension last, f32."""
    data: np.ndarray
    kind: int = field(default=KIND_PROBMAP, init=False, repr=False)

    def __post_init__(self):
        array = np.asarray(self.data, dtype=np.float32)
        if array.ndim < 1 or array.shape[-1] != NUM_CLASSES:
            raise InvariantError(f"probability map needs a trailing channel dim of 4, got {array.shape}")
        _check_rank(array.shape[:-1])
        bad = _first_bad_probability(array)
        if bad is not None:
            raise InvariantError(bad[1])
        object.__setattr__(self, "data", _frozen(array))

    @property
    def rank(self) -> int:
        return self.data.ndim - 1


Tensor = Union[Volume, LabelMap, ProbMap]
_KIND_TYPES = {KIND_VOLUME: Volume, KIND_LABELMAP: LabelMap, KIND_PROBMAP: ProbMap}


def _first_bad_label(array: np.ndarray) -> Optional[int]:
    flat = array.reshape(-1)
    if np.issubdtype(flat.dtype, np.integer):
        bad = (flat < 0) | (flat >= NUM_CLASSES)
    else:
        bad = ~np.isin(flat, np.arange(NUM_CLASSES))
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def _first_bad_probability(array: np.ndarray) -> Optional[tuple[int, str]]:
    """Return (flat element index, message) of the first violation, or None."""
    flat = array.reshape(-1).astype(np.float64)
    out_of_range = np.flatnonzero(~((flat >= 0.0) & (flat <= 1.0)))
    if out_of_range.size:
        i = int(out_of_range[0])
        return i, f"probability {flat[i]!r} at flat index {i} is outside [0, 1]"
    sums = flat.reshape(-1, NUM_CLASSES).sum(axis=1)
    unnormalized = np.flatnonzero(np.abs(sums - 1.0) > PROB_SUM_TOLERANCE)
    if unnormalized.size:
        p = int(unnormalized[0])
        return p * NUM_CLASSES, f"channel sum {sums[p]!r} at pixel {p} is not normalized to 1"
    return None


# ─────────────────────────────────────────────────────────────────────
# VTF1 encode / decode
# ─────────────────────────────────────────────────────────────────────

def encode_tensor(obj: Tensor) -> bytes:
    if isinstance(obj, LabelMap):
        dtype_code = DTYPE_U8
    elif isinstance(obj, ProbMap):
        dtype_code = DTYPE_F32
    elif isinstance(obj, Volume):
        dtype_code = DTYPE_U8 if obj.data.dtype == np.uint8 else DTYPE_F32
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")
    header = MAGIC + struct.pack("<BBB", dtype_code, obj.kind, obj.rank)
    header += struct.pack(f"<{obj.rank}I", *obj.dims)
    payload = np.ascontiguousarray(obj.data, dtype=_NUMPY_DTYPES[dtype_code]).tobytes()
    return header + payload


def decode_tensor(raw: bytes) -> Tensor:
    if len(raw) < 7:
        raise TensorFormatError("file shorter than the fixed header", len(raw))
    if raw[:4] != MAGIC:
        raise TensorFormatError(f"bad magic {raw[:4]!r}", 0)
    dtype_code, kind, rank = raw[4], raw[5], raw[6]
    if dtype_code not in _NUMPY_DTYPES:
        raise TensorFormatError(f"unknown dtype code {dtype_code}", 4)
    if kind not in _KIND_TYPES:
        raise TensorFormatError(f"unknown kind code {kind}", 5)
    if kind == KIND_LABELMAP and dtype_code != DTYPE_U8:
        raise TensorFormatError("label maps must be stored as u8", 4)
    if kind == KIND_PROBMAP and dtype_code != DTYPE_F32:
        raise TensorFormatError("probability maps must be stored as f32", 4)
    if rank not in SUPPORTED_RANKS:
        raise TensorFormatError(f"rank {rank} out of range", 6)

    dims_end = 7 + 4 * rank
    if len(raw) < dims_end:
        raise TensorFormatError("truncated dims", len(raw))
    dims = struct.unpack_from(f"<{rank}I", raw, 7)
    for axis, d in enumerate(dims):
        if d < 1:
            raise TensorFormatError(f"dim {axis} is zero", 7 + 4 * axis)

    shape = dims + ((NUM_CLASSES,) if kind == KIND_PROBMAP else ())
    dtype = _NUMPY_DTYPES[dtype_code]
    expected = math.prod(shape) * dtype.itemsize
    payload = raw[dims_end:]
    if len(payload) < expected:
        raise TensorFormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}", len(raw)
        )
    if len(payload) > expected:
        raise TensorFormatError("trailing bytes after payload", dims_end + expected)

    array = np.frombuffer(payload, dtype=dtype).reshape(shape)
    if kind == KIND_LABELMAP:
        bad = _first_bad_label(array)
        if bad is not None:
            raise TensorFormatError(
                f"label value {int(array.reshape(-1)[bad])} is not below {NUM_CLASSES}",
                dims_end + bad * dtype.itemsize,
            )
    elif kind == KIND_PROBMAP:
        bad = _first_bad_probability(array)
        if bad is not None:
            raise TensorFormatError(bad[1], dims_end + bad[0] * dtype.itemsize)
    return _KIND_TYPES[kind](array)


def load_tensor(path: Union[str, Path], expect: Optional[type] = None) -> Tensor:
    """Read a VTF1 file; with `expect`, reject files holding another kind."""
    raw = Path(path).read_bytes()
    obj = decode_tensor(raw)
    if expect is not None and not isinstance(obj, expect):
        raise TensorFormatError(
            f"{path} holds a {KIND_NAMES[obj.kind]}, expected {expect.__name__}", 5
        )
    logger.debug("loaded %s %s from %s", KIND_NAMES[obj.kind], obj.dims, path)
    return obj


def save_tensor(obj: Tensor, path: Union[str, Path]) -> None:
    # Re-validate: a payload edited behind the dataclass must not reach disk.
    type(obj)(np.array(obj.data))
    atomic_write_bytes(path, encode_tensor(obj))


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write to a temporary sibling, then rename over the destination."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or Path("."))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ─────────────────────────────────────────────────────────────────────
# Slicing
# ─────────────────────────────────────────────────────────────────────

def slice2d(vol: Union[Volume, LabelMap], axis: int, index: int) -> Union[Volume, LabelMap]:
    """2D slice of a 3D volume or label map; remaining dims keep ascending axis order."""
    if vol.rank != 3:
        raise DimensionMismatchError(f"slice2d needs a 3D input, got rank {vol.rank}")
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    if not 0 <= index < vol.dims[axis]:
        raise IndexError(f"slice index {index} out of range for axis {axis} of size {vol.dims[axis]}")
    return type(vol)(np.take(vol.data, index, axis=axis))


def volume_slices(vol: Union[Volume, LabelMap]) -> Iterator[Union[Volume, LabelMap]]:
    """2D objects yield themselves; 3D objects yield their axial (axis 0) slices."""
    if vol.rank == 2:
        yield vol
        return
    for index in range(vol.dims[0]):
        yield slice2d(vol, 0, index)


# ─────────────────────────────────────────────────────────────────────
# PGM (binary P5, maxval 255)
# ─────────────────────────────────────────────────────────────────────

def _pgm_tokens(raw: bytes, count: int) -> tuple[list[int], int]:
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and raw[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise PgmError(f"malformed PGM header at byte {start}")
        tokens.append(int(raw[start:pos]))
    # exactly one whitespace byte separates maxval from the raster
    if not raw[pos:pos + 1].isspace():
        raise PgmError(f"missing whitespace after PGM header at byte {pos}")
    return tokens, pos + 1


def read_pgm(path: Union[str, Path], kind: str = "volume") -> Union[Volume, LabelMap]:
    raw = Path(path).read_bytes()
    if raw[:2] != b"P5":
        raise PgmError(f"{path} is not a binary P5 PGM")
    (width, height, maxval), start = _pgm_tokens(raw, 3)
    if maxval != 255:
        raise PgmError(f"PGM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise PgmError(f"PGM dims must be positive, got {width}x{height}")
    pixels = raw[start:start + width * height]
    if len(pixels) < width * height:
        raise PgmError(f"PGM raster truncated: expected {width * height} bytes, found {len(pixels)}")
    array = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
    if kind == "volume":
        return Volume(array)
    if kind == "labelmap":
        try:
            return LabelMap(array)
        except InvariantError as exc:
            raise PgmError(f"{path}: {exc}") from exc
    raise ValueError(f"kind must be 'volume' or 'labelmap', got {kind!r}")


def tensor_to_pgm(obj: Union[Volume, LabelMap]) -> bytes:
    if obj.rank != 2 or obj.data.dtype != np.uint8:
        raise PgmError("only 2D u8 volumes and label maps convert to PGM")
    rows, cols = obj.dims
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + obj.data.tobytes()


def write_pgm(obj: Union[Volume, LabelMap], path: Union[str, Path]) -> None:
    atomic_write_bytes(path, tensor_to_pgm(obj))


# ─────────────────────────────────────────────────────────────────────
# Dataset manifests
# ─────────────────────────────────────────────────────────────────────

SPLITS = ("labeled", "unlabeled", "test")


@dataclass(frozen=True)
class CaseEntry:
    id: str
    volume_path: Path
    label_path: Optional[Path]
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    cases: tuple[CaseEntry, ...] = ()
    num_classes: int = NUM_CLASSES

    def pool(self, split: str) -> list[CaseEntry]:
        return [case for case in self.cases if case.split == split]

    def case(self, case_id: str) -> CaseEntry:
        for entry in self.cases:
            if entry.id == case_id:
                return entry
        raise KeyError(case_id)

    @property
    def ids(self) -> list[str]:
        return [case.id for case in self.cases]


def _check_manifest(manifest: DatasetManifest) -> None:
    if manifest.num_classes != NUM_CLASSES:
        raise ManifestError(f"num_classes must be {NUM_CLASSES}, got {manifest.num_classes}")
    seen = set()
    for case in manifest.cases:
        if case.id in seen:
            raise ManifestError(f"duplicate case id '{case.id}'")
        seen.add(case.id)
        if case.split not in SPLITS:
            raise ManifestError(f"case '{case.id}' has unknown split '{case.split}'")
        if case.split in ("labeled", "test") and case.label_path is None:
            raise ManifestError(f"{case.split} case '{case.id}' has no label path")
        for path in (case.volume_path, case.label_path):
            if path is not None and not path.is_file():
                raise ManifestError(f"case '{case.id}' references missing file {path}")


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Parse a manifest JSON file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict) or not isinstance(document.get("cases"), list):
        raise ManifestError(f"{path} must be an object with a 'cases' list")

    base = path.parent
    cases = []
    for position, item in enumerate(document["cases"]):
        if not isinstance(item, dict):
            raise ManifestError(f"case #{position} is not an object")
        missing = {"id", "volume", "split"} - item.keys()
        if missing:
            raise ManifestError(f"case #{position} lacks {sorted(missing)}")
        labels = item.get("labels")
        for key, value in (("id", item["id"]), ("volume", item["volume"]), ("split", item["split"])):
            if not isinstance(value, str):
                raise ManifestError(f"case #{position}: '{key}' must be a string, got {value!r}")
        if labels is not None and not isinstance(labels, str):
            raise ManifestError(f"case #{position}: 'labels' must be a string or null, got {labels!r}")
        cases.append(
            CaseEntry(
                id=item["id"],
                volume_path=base / item["volume"],
                label_path=base / labels if labels is not None else None,
                split=item["split"],
            )
        )
    num_classes = document.get("num_classes", NUM_CLASSES)
    # bool is an int subclass
    if not isinstance(num_classes, int) or isinstance(num_classes, bool):
        raise ManifestError(f"num_classes must be an integer, got {num_classes!r}")
    manifest = DatasetManifest(tuple(cases), num_classes)
    _check_manifest(manifest)
    logger.info(
        "manifest %s: %d labeled, %d unlabeled, %d test",
        path, *(len(manifest.pool(split)) for split in SPLITS),
    )
    return manifest


def manifest_to_json(manifest: DatasetManifest, base_dir: Union[str, Path]) -> str:
    def rel(p: Optional[Path]) -> Optional[str]:
        return None if p is None else Path(os.path.relpath(p, base_dir)).as_posix()

    document = {
        "num_classes": manifest.num_classes,
        "cases": [
            {"id": c.id, "volume": rel(c.volume_path), "labels": rel(c.label_path), "split": c.split}
            for c in manifest.cases
        ],
    }
    return json.dumps(document, indent=2) + "\n"


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> None:
    _check_manifest(manifest)
    path = Path(path)
    atomic_write_text(path, manifest_to_json(manifest, path.parent))
