"""Exception types shared across the package."""


class VoxcacheError(Exception):
    """Base class for all package errors."""


class DomainError(VoxcacheError):
    """A coordinate fell outside the field's normalized domain."""


class ConfigError(VoxcacheError):
    """Invalid or inconsistent configuration."""


class IngestionError(VoxcacheError):
    """Raw volume data could not be loaded (size mismatch, NaNs, ...)."""


class WeightFormatError(VoxcacheError):
    """Model weight file is malformed, truncated, or version-incompatible."""


class ModelCorruptError(VoxcacheError):
    """Model parameters contain non-finite values."""


class TrainingDivergedError(VoxcacheError):
    """Training loss became non-finite."""

    def __init__(self, message, last_finite_step=None, loss_trace=None):
        super().__init__(message)
        self.last_finite_step = last_finite_step
        self.loss_trace = loss_trace


class RenderError(VoxcacheError):
    """A frame could not be completed."""


class ProtocolError(VoxcacheError):
    """Malformed wire message."""
