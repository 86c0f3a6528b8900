"""Exception types shared across the toolkit."""


class CoreboxError(Exception):
    """Base class for all toolkit errors."""


class DecodeError(CoreboxError):
    """Raster file could not be decoded (corrupt or unsupported format)."""


class UnknownLabelValue(CoreboxError):
    """Mask contains a grey value that is neither background nor a registered class."""

    def __init__(self, value: int):
        self.value = int(value)
        super().__init__(f"mask contains unregistered grey value {self.value}")


class LabelMapParseError(CoreboxError):
    """Label-map JSON is malformed or missing required structure."""


class DuplicateValue(LabelMapParseError):
    """Two classes map to the same grey value."""


class ValueOutOfRange(LabelMapParseError):
    """Class grey value outside the admissible 1..255 range."""


class InvalidTarget(CoreboxError):
    """Resize target smaller than 1x1."""


class EmptyDataset(CoreboxError):
    """No valid image/mask pairs found."""


class DimensionMismatch(CoreboxError):
    """Two rasters that must share dimensions do not."""


class InvalidBeta(CoreboxError):
    """F-score beta must be positive."""


class EmptyInput(CoreboxError):
    """Operation requires a non-empty collection."""


class EmptySample(CoreboxError):
    """A pool sample with zero area was supplied."""


class EmptyPool(CoreboxError):
    """Sample pool has no usable images."""


class SameSegment(CoreboxError):
    """Mix-up requires two distinct segments."""


class BoxOutOfBounds(CoreboxError):
    """Bounding box extends past the image bounds."""


class DegenerateSpec(CoreboxError):
    """Depth spec with bottom depth not below top depth."""


class NonPositiveInterval(CoreboxError):
    """Depth interval edit with to <= from."""
