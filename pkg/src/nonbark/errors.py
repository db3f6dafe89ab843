"""Exception hierarchy shared by every module."""


class NonbarkError(Exception):
    pass


class DimensionMismatch(NonbarkError, ValueError):
    pass


class VanishingOverlap(NonbarkError, ZeroDivisionError):
    """Pre- and post-selected states are (numerically) orthogonal."""


class IncompleteBasis(NonbarkError, ValueError):
    pass


class NonConvergence(NonbarkError, RuntimeError):
    pass


class UnsupportedElement(NonbarkError, ValueError):
    pass


class DegenerateWindow(NonbarkError, ValueError):
    pass


class InvalidInteractionCount(NonbarkError, ValueError):
    pass


class InvalidIndices(NonbarkError, ValueError):
    pass


class OutOfRegion(NonbarkError, ValueError):
    pass


class InvalidPostselectionTime(NonbarkError, ValueError):
    pass


class QuadratureFailure(NonbarkError, RuntimeError):
    pass


class StabilityViolation(NonbarkError, ValueError):
    pass


class ConfigError(NonbarkError, ValueError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)
