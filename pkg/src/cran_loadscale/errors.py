"""Exception types raised by the solvers and evaluation maps."""


class LoadScaleError(Exception):
    """Base class for all package errors."""


class UnservedUeError(LoadScaleError, ValueError):
    """A UE has no serving RRH, so its capacity would be zero."""

    def __init__(self, ues):
        self.ues = list(ues)
        super().__init__(f"UE(s) without serving RRH: {self.ues}")


class ZeroCapacityError(LoadScaleError, ArithmeticError):
    """A served UE still has zero capacity (all serving gains are zero)."""

    def __init__(self, ues):
        self.ues = list(ues)
        super().__init__(f"UE(s) with zero capacity: {self.ues}")


class NonConvergentError(LoadScaleError, RuntimeError):
    """Iteration budget exhausted or divergence detected.

    The last iterate and, when available, the partial result are attached.
    """

    def __init__(self, message, last_iterate=None, trace=None, result=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.trace = trace
        self.result = result


class DegenerateImageError(LoadScaleError, ArithmeticError):
    """The normalizing max-load of an image vanished."""


class AllZeroGainsError(LoadScaleError, ValueError):
    def __init__(self, ues):
        self.ues = list(ues)
        super().__init__(f"UE(s) with zero gain to every RRH: {self.ues}")


class OracleGuardError(LoadScaleError, ValueError):
    """Instance too large for the brute-force oracle."""
