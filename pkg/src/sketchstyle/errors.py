"""Exception types raised across the package."""


class DimensionError(ValueError):
    """A tensor's shape does not match the configured contract."""


class CorruptionError(RuntimeError):
    """Weights or activations contain non-finite values."""


class CheckpointError(RuntimeError):
    """A checkpoint archive is malformed or inconsistent with its manifest."""


class CheckpointVersionError(CheckpointError):
    """A checkpoint archive was written by an unknown format version."""


class StateError(RuntimeError):
    """An operation was called before its required training/loading step."""


class DataError(RuntimeError):
    """A dataset is missing fields required by the operation."""
