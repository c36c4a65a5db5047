"""Exception hierarchy shared by all modules."""


class GigError(Exception):
    """Base class for every error raised by gigchar."""


class GigDomainError(GigError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BesselOverflowError(GigError, OverflowError):
    """K_p(z) is not representable; use ``log_bessel_k`` instead."""


class NumericalDerivativeError(GigError, ArithmeticError):
    """A finite-difference step became too small to resolve."""


class ConfigurationError(GigError, ValueError):
    """Invalid tuning parameters (bin counts, permutations, ...)."""


class SampleSizeError(GigError, ValueError):
    """Too few observations for the requested procedure."""


class NonFiniteMomentError(GigError, ValueError):
    """The requested moment does not exist for these parameters."""


class BoundaryConditionError(GigError, ValueError):
    """A test function fails the boundary condition f*h -> 0."""


class ConvergenceError(GigError, RuntimeError):
    """An iterative fit failed to converge.

    ``trace`` holds whatever diagnostic history the caller collected.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class TailTruncationError(GigError, ArithmeticError):
    """A quadrature ran into an unresolved tail."""
