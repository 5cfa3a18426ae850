"""Exception hierarchy shared by all modules."""


class QubitPulseError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(QubitPulseError, ValueError):
    """Parameters violate a documented constraint."""


class NonFinite(InvalidParams):
    """A parameter is NaN or infinite."""


class Unsupported(QubitPulseError):
    """The request has no defined answer for the given pulse family."""


class InconsistentFigureParams(InvalidParams):
    """A reference parameter set cannot be realized by the model."""


class NumericalError(QubitPulseError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class StepSizeUnderflow(NumericalError):
    """The adaptive integrator could not meet its tolerance."""


class NonFiniteState(NumericalError):
    """The integrated state overflowed or became NaN."""


class NotNormalized(InvalidParams):
    """Amplitudes do not have unit norm."""


class WindowTooSmall(InvalidParams):
    """Averaging window too short for the average to converge."""


class NotUnimodal(NumericalError):
    """Coarse scan found several separated maxima."""
