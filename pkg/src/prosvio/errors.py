"""Exception hierarchy shared by all stages of the estimator."""


class ProsvioError(Exception):
    """Base class for every error raised by this package."""


class FrameError(ProsvioError, ValueError):
    """A cloud carries the wrong coordinate-frame tag for the requested transform."""


class EmptyCloud(ProsvioError, ValueError):
    pass


class TooFewPoints(ProsvioError, ValueError):
    pass


class NoConsensus(ProsvioError):
    """RANSAC could not find a line with enough inliers."""


class FeatureBoxEmpty(ProsvioError):
    pass


class NonConvergedIcp(ProsvioError):
    pass


class NonMonotonicTime(ProsvioError, ValueError):
    pass


class ExcessiveDt(ProsvioError, ValueError):
    """Gap between consecutive IMU samples is too large (dropped samples)."""


class SingularInnovation(ProsvioError, ArithmeticError):
    pass


class NoIntersections(ProsvioError):
    pass


class NoOverlap(ProsvioError, ValueError):
    pass


class SchemaError(ProsvioError, ValueError):
    """Malformed dataset file. ``path`` and ``line`` locate the offending row."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
