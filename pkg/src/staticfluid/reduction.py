"""The master ODE, its Riccati form, and the density/pressure evaluators.

The lapse ``f`` and conformal factor ``phi`` of a translation-invariant
static perfect fluid are tied by the linear second-order equation

    (n - 2) f phi'' - f'' phi - 2 phi' f' = 0,

which in the logarithmic derivatives ``x = phi'/phi`` and ``y = f'/f``
becomes the Riccati equation

    y' = (n - 2)(x' + x**2) - 2 x y - y**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from ._ode import Event, IntegratorConfig, Run, TwoSided, integrate
from .errors import DomainError, IntegrationError, InvalidParticularSolutionError
from .geometry import Interval, Jet2, Profile, SpacetimeSpec

__all__ = [
    "IntegratorConfig",
    "RiccatiState",
    "FluidFields",
    "EnergySummary",
    "LapseProfile",
    "RiccatiSolution",
    "edo_residual",
    "edo_scale",
    "master_rhs",
    "solve_f",
    "mu_of",
    "rho_of",
    "riccati_rhs",
    "riccati_x",
    "riccati_general",
    "vacuum_residuals",
    "fluid_fields",
    "energy_condition_scan",
]


def edo_residual(n: int, phi: Jet2, f: Jet2) -> float:
    """Left side of the master ODE, ``(n-2) f phi'' - f'' phi - 2 phi' f'``."""
    return (n - 2) * f.value * phi.d2 - f.d2 * phi.value - 2.0 * phi.d1 * f.d1


def edo_scale(n: int, phi: Jet2, f: Jet2) -> float:
    """Sum of the absolute values of the three terms of :func:`edo_residual`."""
    return abs((n - 2) * f.value * phi.d2) + abs(f.d2 * phi.value) + abs(2.0 * phi.d1 * f.d1)


def lapse_second_derivative(n: int, phi: Jet2, f: float, df: float) -> float:
    """``f''`` forced by the master ODE given ``f`` and ``f'``."""
    return ((n - 2) * phi.d2 * f - 2.0 * phi.d1 * df) / phi.value


def mu_of(n: int, alpha_norm2: float, phi: Jet2) -> float:
    """Energy density ``|alpha|^2 (n-1) (phi phi'' - (n/2) phi'^2)``."""
    return alpha_norm2 * (n - 1) * (phi.value * phi.d2 - 0.5 * n * phi.d1**2)


def rho_of(n: int, alpha_norm2: float, phi: Jet2, f: Jet2, mode: str = "direct") -> float:
    """Pressure of the fluid.

    ``mode="eliminate_f2"`` ignores ``f.d2`` and substitutes the value forced
    by the master ODE, so callers holding only ``(f, f')`` can evaluate the
    pressure on-shell.
    """
    if not phi.value > 0:
        raise DomainError(f"phi={phi.value} is not positive")
    if not f.value > 0:
        raise DomainError(f"f={f.value} is not positive")
    if mode == "direct":
        f2 = f.d2
    elif mode == "eliminate_f2":
        f2 = lapse_second_derivative(n, phi, f.value, f.d1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    p, p1, p2 = phi
    y = f.d1 / f.value
    bracket = p * p * f2 / f.value - (n - 2) * (y * p1 * p + p * p2 - 0.5 * n * p1 * p1)
    return alpha_norm2 * (n - 1) / n * bracket


def master_rhs(n: int, phi_profile: Profile) -> Callable[[float, np.ndarray], np.ndarray]:
    """First-order system ``(f, f')' = (f', f'')`` of the master ODE."""

    def rhs(xi, y):
        phi = phi_profile(xi)
        return np.array([y[1], lapse_second_derivative(n, phi, y[0], y[1])])

    return rhs


@dataclass
class LapseProfile:
    """Numerically integrated lapse with dense output.

    Calling the profile returns the on-shell jet: ``f`` and ``f'`` come from
    the dense output and ``f''`` from the master ODE.  :meth:`defect`
    measures how well the continuous solution actually satisfies the ODE.
    """

    n: int
    phi: Profile
    solution: TwoSided
    events: list = field(default_factory=list)
    truncated: bool = False
    status: str = "complete"

    @property
    def domain(self) -> Interval:
        return Interval(self.solution.lo, self.solution.hi)

    def state(self, xi: float) -> np.ndarray:
        return self.solution(xi)

    def __call__(self, xi: float) -> Jet2:
        f, df = self.solution(xi)
        return Jet2(float(f), float(df), lapse_second_derivative(self.n, self.phi(xi), f, df))

    def _slope(self, xi: float, h: float) -> np.ndarray:
        """Fourth-order derivative of the dense output, one-sided near the ends."""
        s, lo, hi = self.solution, self.solution.lo, self.solution.hi
        # with h <= width/8 at least one side has room for the 4h one-sided stencil
        h = min(h, (hi - lo) / 8.0)
        if not h > 0:
            raise DomainError("integrated range is too short to differentiate")
        if xi - 2 * h >= lo and xi + 2 * h <= hi:
            return (8.0 * (s(xi + h) - s(xi - h)) - (s(xi + 2 * h) - s(xi - 2 * h))) / (12.0 * h)
        sign = 1.0 if xi - 2 * h < lo else -1.0
        pts = [s(xi + sign * k * h) for k in range(5)]
        return sign * (-25.0 * pts[0] + 48.0 * pts[1] - 36.0 * pts[2] + 16.0 * pts[3] - 3.0 * pts[4]) / (12.0 * h)

    def measured_jet(self, xi: float, h: float = 2e-3) -> tuple[Jet2, float]:
        """Jet with ``f''`` read off the dense output, plus the ``d f/d xi`` vs ``f'`` mismatch."""
        f, df = self.solution(xi)
        d = self._slope(xi, h)
        return Jet2(float(f), float(df), float(d[1])), abs(float(d[0]) - float(df)) / max(1.0, abs(float(df)))

    def defect(self, xi: float, h: float = 2e-3) -> float:
        """Residual of the master ODE on the continuous solution.

        Uses :meth:`measured_jet`; the result is ``|residual| / max(1, scale)``
        combined with the kinematic mismatch.
        """
        jet, kin = self.measured_jet(xi, h)
        phi = self.phi(xi)
        ode = abs(edo_residual(self.n, phi, jet)) / max(1.0, edo_scale(self.n, phi, jet))
        return max(ode, kin)


def _floor_events(phi_profile: Profile, floor: float, positive_f: bool) -> list[Event]:
    events = [
        Event("phi_floor", lambda t, y: phi_profile(t).value - floor),
        Event("phi_blowup", lambda t, y: 1.0 - floor * abs(phi_profile(t).value)),
        Event("f_blowup", lambda t, y: 1.0 - floor * abs(y[0])),
    ]
    if positive_f:
        events.append(Event("f_floor", lambda t, y: y[0] - floor))
    return events


def solve_f(
    n: int,
    phi_profile: Profile,
    xi0: float,
    f0: float,
    df0: float,
    interval: Interval,
    config: IntegratorConfig | None = None,
    *,
    positive: bool = True,
) -> LapseProfile:
    """Integrate the master ODE for ``f`` from ``(xi0, f0, df0)`` across ``interval``.

    Integration runs from ``xi0`` to each finite end of ``interval``.  When
    ``f`` or ``phi`` reaches the singularity floor the run stops there and
    the profile is flagged as truncated.  ``positive=False`` drops the
    ``f > 0`` requirement (used for phase portraits of the linear ODE).

    Raises :class:`IntegrationError` when the step budget is exhausted; the
    partial profile is attached.
    """
    config = config or IntegratorConfig()
    if not (interval.lo <= xi0 <= interval.hi):
        raise DomainError(f"xi0={xi0} outside {interval}")
    if not interval.finite:
        raise ValueError("solve_f needs a bounded interval")
    if positive and not f0 > 0:
        raise DomainError(f"f0={f0} must be positive")
    floor = config.singularity_floor
    if not phi_profile(xi0).value > floor:
        raise DomainError(f"phi({xi0}) is below the singularity floor")

    rhs = master_rhs(n, phi_profile)
    events = _floor_events(phi_profile, floor, positive)
    runs: dict[str, Run | None] = {"backward": None, "forward": None}
    for key, end in (("backward", interval.lo), ("forward", interval.hi)):
        if end != xi0:
            runs[key] = integrate(rhs, xi0, [f0, df0], end, config, events)
    solution = TwoSided(xi0, runs["backward"], runs["forward"])
    crossings = [c for r in solution.runs for c in r.crossings]
    profile = LapseProfile(n, phi_profile, solution, crossings)
    statuses = [r.status for r in solution.runs]
    profile.truncated = any(s == "event" for s in statuses)
    bad = [r for r in solution.runs if r.status in ("max-steps", "failed", "step-collapse")]
    if bad:
        profile.status = bad[0].status
        raise IntegrationError(f"lapse integration failed: {bad[0].message}", partial=profile)
    profile.status = "truncated" if profile.truncated else "complete"
    return profile


# ---------------------------------------------------------------------------
# Riccati form


@dataclass(frozen=True)
class RiccatiState:
    """Riccati variables at one point; ``y = y0 + u`` and ``v = 1/u``."""

    x: float
    xprime: float
    y: float
    y0: float
    u: float
    v: float

    def __post_init__(self):
        if self.v != 0 and math.isfinite(self.v) and math.isfinite(self.u):
            if not math.isclose(self.u * self.v, 1.0, rel_tol=1e-12):
                raise ValueError("u * v must equal 1")


def riccati_rhs(n: int, x: float, xprime: float, y: float) -> float:
    """``(n-2)(x' + x^2) - 2 x y - y^2``."""
    return (n - 2) * (xprime + x * x) - 2.0 * x * y - y * y


def riccati_x(phi: Jet2) -> tuple[float, float]:
    """``(x, x')`` with ``x = phi'/phi`` from a jet of ``phi``."""
    x = phi.d1 / phi.value
    return x, phi.d2 / phi.value - x * x


XProfile = Callable[[float], tuple[float, float]]


@dataclass
class RiccatiSolution:
    """Solution ``y = y0 + 1/v`` of the Riccati equation for one ``v0``.

    ``poles`` lists the ``xi`` where ``v`` vanishes; there ``u`` and ``y``
    are infinite and ``f`` has a zero, i.e. a genuine domain boundary.
    """

    n: int
    x_profile: XProfile
    y0_profile: XProfile
    v_solution: TwoSided | None
    poles: list = field(default_factory=list)

    @property
    def domain(self) -> Interval:
        if self.v_solution is None:
            raise ValueError("zero-correction solution has no integrated domain")
        return Interval(self.v_solution.lo, self.v_solution.hi)

    def v(self, xi: float) -> float:
        if self.v_solution is None:
            return math.inf
        return float(self.v_solution(xi)[0])

    def y(self, xi: float) -> float:
        v = self.v(xi)
        y0 = self.y0_profile(xi)[0]
        return y0 if math.isinf(v) else y0 + 1.0 / v

    def state(self, xi: float) -> RiccatiState:
        x, xp = self.x_profile(xi)
        y0 = self.y0_profile(xi)[0]
        v = self.v(xi)
        u = 0.0 if math.isinf(v) else (math.inf if v == 0 else 1.0 / v)
        return RiccatiState(x, xp, y0 + u, y0, u, v)

    def residual(self, xi: float) -> float:
        """Riccati residual ``y' - rhs`` with ``y'`` from the linear equation."""
        x, xp = self.x_profile(xi)
        y0, dy0 = self.y0_profile(xi)
        v = self.v(xi)
        if math.isinf(v):
            y, dy = y0, dy0
        else:
            dv = 1.0 + 2.0 * (y0 + x) * v
            y, dy = y0 + 1.0 / v, dy0 - dv / (v * v)
        return dy - riccati_rhs(self.n, x, xp, y)


def riccati_general(
    n: int,
    x_profile: XProfile,
    y0_profile: XProfile,
    xi0: float,
    v0: float,
    interval: Interval,
    config: IntegratorConfig | None = None,
    check_points: int = 16,
) -> RiccatiSolution:
    """General solution from a particular solution by linearization.

    ``x_profile`` and ``y0_profile`` return ``(value, derivative)``.  The
    correction ``u = y - y0`` obeys ``v' = 1 + 2 (y0 + x) v`` with
    ``v = 1/u``, integrated from ``v(xi0) = v0``.  ``v0 = +-inf`` gives back
    ``y0`` itself.
    """
    config = config or IntegratorConfig()
    for xi in np.linspace(interval.lo, interval.hi, check_points + 2)[1:-1]:
        x, xp = x_profile(xi)
        y0, dy0 = y0_profile(xi)
        res = dy0 - riccati_rhs(n, x, xp, y0)
        if abs(res) > 1e-8 * max(1.0, abs(dy0)):
            raise InvalidParticularSolutionError(
                f"particular solution misses the Riccati equation by {res:.3e} at xi={xi}"
            )
    if math.isinf(v0):
        return RiccatiSolution(n, x_profile, y0_profile, None)

    def rhs(xi, state):
        x = x_profile(xi)[0]
        y0 = y0_profile(xi)[0]
        return np.array([1.0 + 2.0 * (y0 + x) * state[0]])

    pole = Event("pole", lambda t, s: s[0], terminal=False)
    runs = {}
    for key, end in (("backward", interval.lo), ("forward", interval.hi)):
        runs[key] = integrate(rhs, xi0, [v0], end, config, [pole]) if end != xi0 else None
    sol = TwoSided(xi0, runs["backward"], runs["forward"])
    for r in sol.runs:
        if not r.ok and r.status != "event":
            raise IntegrationError(f"linearized Riccati integration failed: {r.message}", partial=sol)
    poles = sorted(t for r in sol.runs for name, t in r.crossings if name == "pole")
    return RiccatiSolution(n, x_profile, y0_profile, sol, poles)


# ---------------------------------------------------------------------------
# Vacuum specialization and energy conditions


def vacuum_residuals(spec: SpacetimeSpec, xi: float) -> tuple[float, float]:
    """``(max |f Ric_g - Hess_g f|, |Laplacian_g f|)`` at ``xi``.

    Both vanish exactly for static vacuum (Ricci-flat) data.
    """
    phi, f = spec.jets(xi)
    sig, d = spec.signature, spec.direction
    ric = geometry.spatial_ricci(sig, d, phi)
    hess = geometry.conformal_hessian_f(sig, d, phi, f)
    lap = geometry.conformal_laplacian_f(sig, d, phi, f)
    return float(np.max(np.abs(f.value * ric - hess))), abs(lap)


@dataclass(frozen=True)
class FluidFields:
    """Sampled density and pressure with the ``mu > |rho|`` flag."""

    xi: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    dominant: np.ndarray

    def __post_init__(self):
        if not (len(self.xi) == len(self.mu) == len(self.rho) == len(self.dominant)):
            raise ValueError("field arrays must share a length")

    @classmethod
    def from_samples(cls, xi, mu, rho) -> "FluidFields":
        mu, rho = np.asarray(mu, dtype=float), np.asarray(rho, dtype=float)
        return cls(np.asarray(xi, dtype=float), mu, rho, mu > np.abs(rho))


def fluid_fields(spec: SpacetimeSpec, xi: Sequence[float], mode: str = "direct") -> FluidFields:
    """Evaluate density and pressure of ``spec`` on a grid."""
    n, a2 = spec.n, spec.direction.norm2
    mus, rhos = [], []
    for x in xi:
        phi, f = spec.jets(float(x))
        mus.append(mu_of(n, a2, phi))
        rhos.append(rho_of(n, a2, phi, f, mode))
    return FluidFields.from_samples(xi, mus, rhos)


@dataclass(frozen=True)
class EnergySummary:
    dominant: np.ndarray
    fraction_dominant: float
    first_violation: float | None


def energy_condition_scan(fields: FluidFields) -> EnergySummary:
    """Per-sample ``mu > |rho|`` flags, their fraction and the first failing ``xi``."""
    flags = np.asarray(fields.mu) > np.abs(fields.rho)
    bad = np.flatnonzero(~flags)
    first = float(fields.xi[bad[0]]) if bad.size else None
    frac = float(flags.mean()) if flags.size else 1.0
    return EnergySummary(flags, frac, first)
