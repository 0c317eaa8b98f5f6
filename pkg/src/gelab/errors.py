"""Exception hierarchy shared by the gelab modules."""


class GelabError(Exception):
    """Base class for all gelab errors."""


class ValidationError(GelabError, ValueError):
    """Malformed input data.

    ``path`` names the offending field (e.g. ``agents[2].taste[0]``).
    """

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class NumericalError(GelabError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy answer."""


class NonPositivePrice(ValidationError):
    pass


class WealthNonPositive(ValidationError):
    pass


class NonPositiveConsumption(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, best_residual, iterations, message="Newton solver did not converge"):
        self.best_residual = best_residual
        self.iterations = iterations
        super().__init__(f"{message} (best residual {best_residual:.3e} after {iterations} iterations)")


class JacobianSingular(NumericalError):
    pass


class DegeneratePsi(NumericalError):
    pass


class ZeroDistortion(NumericalError):
    pass


class ZeroMeanShare(NumericalError):
    pass


class ConstraintViolation(ValidationError):
    """A scenario balance condition does not hold to tolerance."""

    def __init__(self, condition, magnitude):
        self.condition = condition
        self.magnitude = magnitude
        super().__init__(condition, f"violated by {magnitude:.3e}")


class InfeasibleConstraints(ValidationError):
    pass


class BoundViolation(ValidationError):
    pass


class PriceCollapse(NumericalError):
    def __init__(self, message, run=None):
        self.run = run
        super().__init__(message)


class Divergence(NumericalError):
    def __init__(self, message, run=None):
        self.run = run
        super().__init__(message)
