"""Exception hierarchy shared by the compute modules and the batch runner."""


class LatticeMapError(Exception):
    """Base class for all toolkit errors."""


class DomainError(LatticeMapError, ValueError):
    """A wavevector or frequency lies outside the domain of a dispersion family."""


class BandEdgeError(DomainError):
    """The group velocity vanishes, so the density of states diverges."""


class NoStateError(DomainError):
    """No reservoir mode exists at the requested frequency."""


class AccuracyError(LatticeMapError, ArithmeticError):
    """A numerical procedure failed to meet its tolerance.

    The best estimate reached is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConfigurationError(LatticeMapError, ValueError):
    """A requested configuration is outside what the toolkit supports."""


class DegeneracyError(LatticeMapError):
    """Eigenvalues are too close to separate eigenvectors reliably."""


class ConvergenceError(LatticeMapError, ArithmeticError):
    """An iterative propagator could not reach its tolerance."""
