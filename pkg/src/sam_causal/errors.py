"""Exception types raised across the package."""


class SamError(Exception):
    """Base class for all package errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class ContractError(SamError, ValueError):
    """A caller violated an input contract (shapes, ranges, graph type)."""

    kind = "contract"


class NumericOverflowError(SamError, FloatingPointError):
    """A computation produced NaN or Inf.

    ``op_index`` is the position of the offending operation on the tape (or
    ``None`` outside of a tape), ``where`` a short label of the site.
    """

    kind = "numeric_overflow"

    def __init__(self, message, op_index=None, where=None):
        super().__init__(message)
        self.op_index = op_index
        self.where = where

    def to_dict(self):
        out = super().to_dict()
        out["op_index"] = self.op_index
        out["where"] = self.where
        return out


class NotPositiveDefiniteError(SamError, ValueError):
    kind = "not_positive_definite"


class TrainingDivergedError(SamError, RuntimeError):
    """Raised when a training run hits a non-finite loss."""

    kind = "training_diverged"

    def __init__(self, message, epoch, last_losses=None, run_index=None):
        super().__init__(message)
        self.epoch = epoch
        self.last_losses = last_losses or {}
        self.run_index = run_index

    def to_dict(self):
        out = super().to_dict()
        out.update(epoch=self.epoch, last_losses=self.last_losses, run_index=self.run_index)
        return out


class DataError(SamError, ValueError):
    """Malformed input files (CSV parsing, mismatched names or sizes)."""

    kind = "data"
