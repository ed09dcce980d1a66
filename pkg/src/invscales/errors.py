"""Exception hierarchy shared by every module."""


class InvScalesError(Exception):
    """Base class for all library errors."""


class DomainError(InvScalesError, ValueError):
    """A point lies outside the domain of a scale, generator or distribution."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DomainMismatchError(DomainError):
    """The image of an inner scale leaves the domain of the outer scale."""


class NegativeRadicandError(DomainError):
    """T(z) fell below the chart minimum T*, so the radial root is undefined."""


class NonFiniteError(InvScalesError, ArithmeticError):
    """A numeric evaluation produced inf or nan."""


class IntegrationError(InvScalesError):
    """Quadrature failed."""


class NonConvergedError(IntegrationError):
    """An iterative numeric procedure did not reach its tolerance."""


class DivergentError(IntegrationError):
    """An integral that should be finite is infinite or does not settle."""


class BracketError(InvScalesError):
    """No sign change could be bracketed for a root search."""


class DegenerateInputError(InvScalesError, ValueError):
    """Input data cannot support the requested fit."""


class MultiModalError(InvScalesError):
    """A canonical scale has more than one interior extremum."""


class NegativeTotalError(InvScalesError, ValueError):
    pass


class NegativeProbabilityError(InvScalesError, ValueError):
    pass


class ParamError(InvScalesError, ValueError):
    """Family parameters violate the family's invariants."""


class InfeasibleInitError(InvScalesError, ValueError):
    """Fit data or starting point lies outside the feasible region."""


class FitNonConvergedError(NonConvergedError):
    """The simplex search hit its iteration limit; ``result`` holds the best point."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result
