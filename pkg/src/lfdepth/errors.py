"""Exception hierarchy shared by all lfdepth modules."""


class LFDepthError(Exception):
    """Base class for every error raised by lfdepth."""


class SingularDepth(LFDepthError, ZeroDivisionError):
    """Orientation maps to a point at infinity."""


class OutOfView(LFDepthError, IndexError):
    """View index outside the light-field grid."""


class DegenerateInput(LFDepthError, ValueError):
    pass


class EmptyMask(LFDepthError, ValueError):
    pass


class RayParallelToPlane(LFDepthError, ArithmeticError):
    pass


# lf-io
class MalformedHeader(LFDepthError, ValueError):
    pass


class TruncatedPayload(LFDepthError, ValueError):
    pass


class UnsupportedMagic(LFDepthError, ValueError):
    pass


class NonFiniteSample(LFDepthError, ValueError):
    pass


class MissingViews(LFDepthError, FileNotFoundError):
    pass


class ConfigParseError(LFDepthError, ValueError):
    pass


class DimensionMismatch(LFDepthError, ValueError):
    pass


class SceneParseError(LFDepthError, ValueError):
    pass


class DegenerateCross(LFDepthError, ArithmeticError):
    """Tangent vectors are (numerically) parallel, so no normal exists."""
