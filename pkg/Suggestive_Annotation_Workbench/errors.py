"""
Exception hierarchy shared by every workbench module.

Each class carries the process exit code the CLI reports for it:
data problems exit 2, runtime failures (divergence, geometry) exit 3.
"""

from typing import Optional


class WorkbenchError(Exception):
    """Base class for all workbench failures."""
    exit_code = 3


# ─────────────────────────────────────────────────────────────────────
# Data errors (exit code 2)
# ─────────────────────────────────────────────────────────────────────

class DataError(WorkbenchError):
    exit_code = 2


class InvariantError(DataError):
    """A tensor, report or config violates its type invariants."""


class TensorFormatError(DataError):
    """A VTF1 file could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ModelFormatError(DataError):
    """A model file could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DimensionMismatchError(DataError):
    pass


class ManifestError(DataError):
    pass


class PgmError(DataError):
    pass


class ConfigError(DataError):
    pass


class PoolError(DataError):
    """Empty pools, unknown case ids, missing oracle labels."""


# ─────────────────────────────────────────────────────────────────────
# Runtime failures (exit code 3)
# ─────────────────────────────────────────────────────────────────────

class RuntimeFailure(WorkbenchError):
    exit_code = 3


class DivergenceError(RuntimeFailure):
    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


class PhantomGeometryError(RuntimeFailure):
    pass


class PredictionError(RuntimeFailure):
    def __init__(self, case_id: str, cause: Optional[BaseException] = None):
        detail = f": {cause}" if cause else ""
        super().__init__(f"prediction failed for case '{case_id}'{detail}")
        self.case_id = case_id
