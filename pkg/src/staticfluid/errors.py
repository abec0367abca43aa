"""Exception hierarchy shared by every module of the package."""


class StaticFluidError(Exception):
    """Base class for all errors raised by staticfluid."""


class DimensionError(StaticFluidError, ValueError):
    """Array lengths disagree with the spacetime dimension."""


class InvalidDirectionError(StaticFluidError, ValueError):
    """The translation direction is the zero vector (or otherwise unusable)."""


class DomainError(StaticFluidError, ValueError):
    """A point lies outside the open domain, or a profile lost positivity."""


class InvalidParameterError(StaticFluidError, ValueError):
    """Catalog or configuration parameters violate their constraints."""


class IntegrationError(StaticFluidError, RuntimeError):
    """The ODE integrator gave up. ``partial`` holds whatever was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InvalidParticularSolutionError(StaticFluidError, ValueError):
    """The supplied particular solution does not satisfy the Riccati equation."""


class DecompositionError(StaticFluidError, ArithmeticError):
    """Metric is numerically singular, so the tensor algebra cannot proceed."""


class NotPerfectFluidError(StaticFluidError):
    """The Einstein tensor has more than two eigenvalue clusters."""


class CausalCharacterError(StaticFluidError):
    """The simple eigenvector of the Einstein tensor is not timelike."""
