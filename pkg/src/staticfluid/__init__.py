"""Translation-invariant, conformally flat static perfect-fluid spacetimes.

Build spacetimes ``g = delta/phi(xi)^2 - f(xi)^2 dt^2`` with ``xi = alpha.x``
by solving the lapse equation, evaluate density and pressure, and check the
result against a finite-difference curvature oracle and geodesic probes.
"""

from . import catalog, geodesics, geometry, reduction, verifier
from .errors import (
    CausalCharacterError,
    DecompositionError,
    DimensionError,
    DomainError,
    IntegrationError,
    InvalidDirectionError,
    InvalidParameterError,
    InvalidParticularSolutionError,
    NotPerfectFluidError,
    StaticFluidError,
)
from .geometry import Direction, Interval, Jet2, Signature, SpacetimeSpec
from .reduction import IntegratorConfig, mu_of, rho_of, solve_f

__version__ = "0.1.0"

__all__ = [
    "catalog", "geodesics", "geometry", "reduction", "verifier",
    "Direction", "Interval", "Jet2", "Signature", "SpacetimeSpec", "IntegratorConfig",
    "mu_of", "rho_of", "solve_f",
    "StaticFluidError", "DimensionError", "InvalidDirectionError", "DomainError", "InvalidParameterError",
    "IntegrationError", "InvalidParticularSolutionError", "DecompositionError", "NotPerfectFluidError",
    "CausalCharacterError",
]
