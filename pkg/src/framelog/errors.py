"""Exception types shared across the engine."""


class FramelogError(Exception):
    """Base class for all engine errors."""


class FormatError(FramelogError):
    """Malformed .semb data: bad magic, version, kind, or header field."""


class TruncatedPayload(FramelogError):
    """Byte count of the stream does not match what the header promises."""


class NonFiniteValue(FramelogError):
    """NaN or infinity where finite values are required."""


class ZeroNormFrame(FramelogError):
    """A frame embedding has zero norm, so cosine distance is undefined."""

    def __init__(self, index):
        super().__init__(f"frame {index} has a zero-norm embedding")
        self.index = index


class InvalidK(FramelogError):
    """Requested cluster count outside 1..n_points."""


class DimensionMismatch(FramelogError):
    """Vector or matrix dimensions disagree."""


class UnknownLabel(FramelogError):
    """A training label is not in the declared label list."""


class EmptyInput(FramelogError):
    """An operation that needs at least one element got none."""


class LengthMismatch(FramelogError):
    """Two paired sequences have different lengths."""


class MissingDistribution(FramelogError):
    """A segment reached log abstraction without a label distribution."""


class UnsupportedFormat(FramelogError):
    """The requested serialization format cannot represent this log."""


class CenterSeparationFailure(FramelogError):
    """Could not sample cluster centers with the required pairwise
    separation; raise the dimension or lower the cluster count."""


class SingleCluster(FramelogError):
    """Silhouette is undefined for a single cluster."""
