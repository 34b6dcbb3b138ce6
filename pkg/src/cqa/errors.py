"""Exception hierarchy shared by all modules."""


class CQAError(Exception):
    """Base class for every error raised by this package."""


class InvalidDegreeError(CQAError, ValueError):
    pass


class GenerationError(CQAError, RuntimeError):
    pass


class BudgetError(CQAError, ValueError):
    """Instance too large to enumerate or hold in memory."""


class EdgeListParseError(CQAError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GraphValidationError(CQAError, ValueError):
    pass


class ColorRangeError(CQAError, ValueError):
    pass


class DimensionError(CQAError, ValueError):
    pass


class ScheduleRangeError(CQAError, ValueError):
    pass


class NormDriftError(CQAError, RuntimeError):
    """Raised when the integrated state leaves the unit sphere by more than the allowed drift."""

    def __init__(self, t: float, drift: float, limit: float):
        super().__init__(
            f"norm drift {drift:.3e} exceeds {limit:.1e} at t={t:.6g}; reduce dt"
        )
        self.t = t
        self.drift = drift
        self.limit = limit


class ConvergenceError(CQAError, RuntimeError):
    pass


class DegenerateGridError(CQAError, ValueError):
    pass
