"""Exception hierarchy.

Two families matter to callers: :class:`ParameterError` means an input
violated a precondition (the CLI maps it to exit code 2), while
:class:`NumericalError` means a computation could not meet its accuracy
contract (exit code 3).
"""


class NLZError(Exception):
    """Base class for all package errors."""


class ParameterError(NLZError, ValueError):
    """An argument violates a documented precondition."""


class NumericalError(NLZError, ArithmeticError):
    """A numerical kernel failed to reach its tolerance."""


# numerics
class NonQuartic(ParameterError):
    pass


class DegenerateInput(ParameterError):
    pass


class NoBracket(ParameterError):
    pass


class StepUnderflow(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


# model
class PhaseUndefined(ParameterError):
    """Relative phase requested for a state with a vanishing amplitude."""


class PoleState(ParameterError):
    """State sits at s = +-1 where the phase variable is singular."""


# levels / classical / adiabatic
class DegenerateFormula(NumericalError):
    """Closed-form eigenstate expression hit a removable singularity."""


class NoWindow(ParameterError):
    """Requested quantity only exists for C > V."""


class HyperbolicPoint(ParameterError):
    pass


class NoIntersection(NumericalError):
    pass


class TraceFailure(NumericalError):
    pass


# nonadiabatic
class CriticalOrAbove(ParameterError):
    pass


class NormDrift(NumericalError):
    pass
