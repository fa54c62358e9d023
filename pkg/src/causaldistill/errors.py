"""Exception types shared across the package."""

from __future__ import annotations


class CausalDistillError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CausalDistillError, ValueError):
    """Rejected input: shape mismatch, out-of-domain value, malformed file."""


class DegenerateLabelsError(CausalDistillError):
    """Labels contain a single class where both are required."""


class DegenerateFeatureError(CausalDistillError):
    """A feature is constant where variation is required."""


class TrainingDivergedError(CausalDistillError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class GenerationFailedError(CausalDistillError):
    """Synthetic data generation could not satisfy its quota."""


class AlreadyDistilledError(CausalDistillError):
    """Refusing to distill a dataset that is already distilled."""
