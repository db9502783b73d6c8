"""Adapter error types."""


class AdapterError(Exception):
    """Base class for adapter errors."""


class DecodeError(AdapterError):
    """The video file cannot be decoded into frames."""


class ModelLoadError(AdapterError):
    """The requested backbone or checkpoint cannot be loaded."""


class IndexOutOfRange(AdapterError):
    """A clip window references frames outside the video."""
