"""Exception hierarchy shared by every keygraph module."""


class KeygraphError(Exception):
    """Base class for all errors raised by this package."""


class ImageFormatError(KeygraphError, ValueError):
    """Malformed raster header or payload."""


class OutOfBoundsError(KeygraphError, ValueError):
    """A segment endpoint or chord point falls outside the image."""


class ImageTooSmallError(KeygraphError, ValueError):
    pass


class DegenerateTriangleError(KeygraphError, ValueError):
    pass


class TooFewPointsError(KeygraphError, ValueError):
    """Fewer than three usable points (or all of them collinear)."""


class TooFewKeypointsError(TooFewPointsError):
    pass


class NoKeygraphsError(KeygraphError, ValueError):
    pass


class ParameterMismatchError(KeygraphError, ValueError):
    pass


class IndexVersionError(KeygraphError, ValueError):
    pass


class IndexCorruptionError(KeygraphError, ValueError):
    pass
