"""Exception types raised across the package."""


class WaveFillError(Exception):
    """Base class for every error raised by wavefill."""


class ShapeMismatch(WaveFillError, ValueError):
    pass


class OddDimension(WaveFillError, ValueError):
    pass


class IndivisibleDimension(WaveFillError, ValueError):
    pass


class WrongLevelCount(WaveFillError, ValueError):
    pass


class GraphCycle(WaveFillError, RuntimeError):
    pass


class EmptyBBox(WaveFillError, ValueError):
    pass


class LayerCountMismatch(WaveFillError, ValueError):
    pass


class ExtractorDepthMismatch(WaveFillError, ValueError):
    pass


class NonFiniteLoss(WaveFillError, FloatingPointError):
    pass


class VersionMismatch(WaveFillError, ValueError):
    pass


class CorruptPayload(WaveFillError, ValueError):
    pass
