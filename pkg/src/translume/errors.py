"""Exception types raised by the numerical and physics layers."""


class TranslumeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TranslumeError, ValueError):
    """Invalid physical or run configuration."""


class NumericalError(TranslumeError, ArithmeticError):
    """Base class for failures of a numerical kernel."""


class NoConvergence(NumericalError):
    pass


class OverflowRisk(NumericalError):
    pass


class NoSignChange(NumericalError, ValueError):
    pass


class StepUnderflow(NumericalError):
    pass


class HorizonSingularity(NumericalError):
    """Co-moving constitutive parameters evaluated at an event horizon."""


class NotTransluminal(TranslumeError, ValueError):
    """The grating speed lies outside the range of local wave speeds."""


class DomainError(TranslumeError, ValueError):
    """Frequency-sign preconditions of an amplitude formula are violated."""


class InsufficientPeaks(TranslumeError, ValueError):
    pass
