"""Geodesics of the static metric and a numerical completeness probe.

The probe can only ever report "no incompleteness observed up to
lambda_max"; a finite integration says nothing about what happens later.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import geometry
from ._ode import Event, IntegratorConfig, integrate
from .errors import DomainError
from .geometry import Interval, SpacetimeSpec

DEFAULT_SEED = 20171003
GEODESIC_CONFIG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-24)

REASONS = ("span-complete", "singularity", "step-failure", "domain-exit")


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        if self.position.shape != self.velocity.shape:
            raise ValueError("position and velocity must have the same shape")

    def packed(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


@dataclass
class Trajectory:
    """Samples at accepted steps plus conservation diagnostics.

    ``terminated`` is one of ``span-complete``, ``singularity`` (metric
    degenerates, a profile hits the floor, or the step size collapses),
    ``step-failure`` (the integrator gave up for another reason) or
    ``domain-exit`` (left a finite interval that is narrower than the
    profiles' natural domain).
    """

    lam: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    norm_drift: float
    energy_drift: float
    terminated: str
    message: str = ""

    @property
    def states(self) -> list[GeodesicState]:
        return [GeodesicState(x, v, float(l)) for l, x, v in zip(self.lam, self.positions, self.velocities)]

    @property
    def final(self) -> GeodesicState:
        return GeodesicState(self.positions[-1], self.velocities[-1], float(self.lam[-1]))


def metric_norm(spec: SpacetimeSpec, position, velocity) -> float:
    g = geometry.static_metric_at(spec, position)
    v = np.asarray(velocity, dtype=float)
    return float(v @ g @ v)


def killing_energy(spec: SpacetimeSpec, position, velocity) -> float:
    """``f^2 dt/dlambda``, conserved because ``d/dt`` is Killing."""
    _, f = spec.jets(spec.xi(position))
    return f.value ** 2 * float(velocity[-1])


def geodesic_rhs(spec: SpacetimeSpec, state: GeodesicState) -> GeodesicState:
    """``(x', v') = (v, -Gamma(v, v))`` with the analytic Christoffel symbols."""
    gam = geometry.static_christoffel(spec, state.position)
    v = state.velocity
    return GeodesicState(v.copy(), -np.einsum("kij,i,j->k", gam, v, v), state.lam)


def _acceleration(spec: SpacetimeSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``-Gamma(v, v)`` contracted by hand; same result as the full table."""
    phi, f = spec.jets(spec.xi(x))
    eps = spec.signature.array
    alpha = spec.direction.array
    vs, vt = v[:-1], v[-1]
    w = float(alpha @ vs)
    q = float(eps @ (vs * vs))
    lp, lf = phi.d1 / phi.value, f.d1 / f.value
    acc = np.empty_like(v)
    acc[:-1] = lp * (2.0 * w * vs - eps * alpha * q) - eps * alpha * phi.value**2 * f.value * f.d1 * vt * vt
    acc[-1] = -2.0 * lf * w * vt
    return acc


def _packed_rhs(spec: SpacetimeSpec):
    dim = spec.n + 1

    def rhs(lam, y):
        v = y[dim:]
        return np.concatenate([v, _acceleration(spec, y[:dim], v)])

    return rhs


def _events(spec: SpacetimeSpec, floor: float) -> list[Event]:
    dim = spec.n + 1
    cache = {}

    def jets(y):
        key = y[:dim].tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = spec.jets(spec.xi(y[:dim]))
        return cache[key]

    return [
        Event("phi_floor", lambda t, y: jets(y)[0].value - floor),
        Event("f_floor", lambda t, y: jets(y)[1].value - floor),
        Event("phi_blowup", lambda t, y: 1.0 - floor * jets(y)[0].value),
        Event("f_blowup", lambda t, y: 1.0 - floor * jets(y)[1].value),
    ]


def _exit_is_artificial(natural: Interval, interval: Interval, heading: float) -> bool:
    """True when the side being left is narrower than the natural domain."""
    if heading < 0:
        return natural.lo < interval.lo
    return interval.hi < natural.hi


def integrate_geodesic(spec: SpacetimeSpec, initial: GeodesicState, lambda_span: float,
                       config: IntegratorConfig | None = None,
                       natural_domain: Interval | None = None) -> Trajectory:
    """Integrate from ``initial`` over ``lambda_span`` of affine parameter.

    ``lambda_span`` may be negative.  Leaving ``spec.interval`` counts as a
    singularity when it coincides with ``natural_domain`` and as
    ``domain-exit`` otherwise.  ``natural_domain`` defaults to
    ``spec.meta["natural_domain"]``, falling back to ``spec.interval``.
    """
    config = config or GEODESIC_CONFIG
    dim = spec.n + 1
    if initial.position.shape != (dim,):
        raise ValueError(f"state must have {dim} components")
    spec.jets(spec.xi(initial.position))  # raises DomainError if outside
    natural = natural_domain or spec.meta.get("natural_domain", spec.interval)
    q0 = metric_norm(spec, initial.position, initial.velocity)
    e0 = killing_energy(spec, initial.position, initial.velocity)
    lam0 = initial.lam
    min_step = 1e-3 * config.rel_tol * abs(lambda_span)
    run = integrate(_packed_rhs(spec), lam0, initial.packed(), lam0 + lambda_span, config,
                    _events(spec, config.singularity_floor), min_step=min_step)

    X, Vel = run.y[:, :dim], run.y[:, dim:]
    norm_drift = energy_drift = 0.0
    for x, v in zip(X, Vel):
        try:
            g = np.diag(geometry.static_metric_at(spec, x))
        except DomainError:
            break
        # rounding in the quadratic form scales with its largest term
        size = max(1.0, float(np.sum(np.abs(g) * v * v)))
        norm_drift = max(norm_drift, abs(float(np.dot(g, v * v)) - q0) / size)
        energy_drift = max(energy_drift, abs(-g[-1] * v[-1] - e0) / max(1.0, abs(e0)))

    if run.status == "complete":
        reason = "span-complete"
    elif run.status == "step-collapse" or (run.status == "event" and run.event != "domain"):
        reason = "singularity"
    elif run.status == "event" and run.event == "domain":
        heading = float(spec.direction.array @ Vel[-1][:-1])
        reason = "domain-exit" if _exit_is_artificial(natural, spec.interval, heading) else "singularity"
    else:
        reason = "step-failure"
    return Trajectory(run.t, X, Vel, norm_drift, energy_drift, reason, run.message)


def sample_initial_states(spec: SpacetimeSpec, count: int, xi_range: Interval, seed: int = DEFAULT_SEED,
                          spread: float = 1.0) -> list[GeodesicState]:
    """Seeded initial data cycling through timelike, null and spacelike velocities.

    The static metric is diagonal, so the velocity is built from its
    positive- and negative-signature parts ``a`` and ``b`` (each of unit
    metric size): ``sinh(s) a + cosh(s) b`` is timelike, ``cosh(s) a +
    sinh(s) b`` spacelike and ``e^s (a + b)`` null.

    Every other block of three samples is axial when ``|alpha|^2 > 0``:
    ``a`` is then ``+-eps*alpha``, the gradient direction of ``xi``, and
    ``b`` is purely temporal.  Generic directions carry transverse momentum,
    which keeps them away from singularities that axial ones run into.
    """
    rng = np.random.default_rng(seed)
    dim = spec.n + 1
    eps_alpha = np.append(spec.signature.array * spec.direction.array, 0.0)
    out = []
    for k in range(count):
        xi = rng.uniform(xi_range.lo, xi_range.hi)
        pos = spec.point_at(xi, rng.normal(0.0, spread, spec.n), t=0.0)
        diag = np.diag(geometry.static_metric_at(spec, pos))
        u = rng.normal(size=dim)
        s = rng.uniform(-1.0, 1.0)
        if (k // 3) % 2 == 1 and spec.direction.norm2 > 0:
            pos_part = math.copysign(1.0, u[0]) * eps_alpha
            neg_part = np.zeros(dim)
            neg_part[-1] = 1.0
        else:
            pos_part = np.where(diag > 0, u, 0.0)
            neg_part = np.where(diag < 0, u, 0.0)
        a = pos_part / math.sqrt(float(np.dot(diag, pos_part**2)))
        b = neg_part / math.sqrt(-float(np.dot(diag, neg_part**2)))
        kind = k % 3
        if kind == 0:
            v = math.sinh(s) * a + math.cosh(s) * b
        elif kind == 1:
            v = math.exp(s) * (a + b)
        else:
            v = math.cosh(s) * a + math.sinh(s) * b
        out.append(GeodesicState(pos, v, 0.0))
    return out


@dataclass
class ProbeSummary:
    count: int
    lambda_max: float
    seed: int
    fractions: dict
    worst_norm_drift: float
    worst_energy_drift: float
    trajectories: list = field(default_factory=list, repr=False)

    @property
    def span_complete_fraction(self) -> float:
        return self.fractions["span-complete"]

    @property
    def singularity_fraction(self) -> float:
        return self.fractions["singularity"]

    @property
    def verdict(self) -> str:
        if self.span_complete_fraction == 1.0:
            return f"no incompleteness observed up to lambda_max={self.lambda_max:g}"
        return "incompleteness observed"

    def as_dict(self) -> dict:
        return {
            "span_complete_fraction": self.span_complete_fraction,
            "singularity_fraction": self.singularity_fraction,
            "step_failure_fraction": self.fractions["step-failure"],
            "domain_exit_fraction": self.fractions["domain-exit"],
            "worst_norm_drift": self.worst_norm_drift,
            "worst_energy_drift": self.worst_energy_drift,
            "seed": self.seed,
            "samples": self.count,
            "lambda_max": self.lambda_max,
            "verdict": self.verdict,
        }


def completeness_probe(spec: SpacetimeSpec, sample_count: int, lambda_max: float,
                       config: IntegratorConfig | None = None, seed: int = DEFAULT_SEED,
                       xi_range: Interval | None = None) -> ProbeSummary:
    """Integrate ``sample_count`` seeded geodesics over ``[0, lambda_max]``."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if xi_range is None:
        xi_range = spec.interval if spec.interval.finite else Interval(-1.0, 1.0).intersect(spec.interval)
    states = sample_initial_states(spec, sample_count, xi_range, seed)
    trajs = [integrate_geodesic(spec, s, lambda_max, config) for s in states]
    counts = {r: 0 for r in REASONS}
    for tr in trajs:
        counts[tr.terminated] += 1
    fractions = {r: c / sample_count for r, c in counts.items()}
    return ProbeSummary(
        sample_count, lambda_max, seed, fractions,
        max(t.norm_drift for t in trajs), max(t.energy_drift for t in trajs), trajs,
    )


def write_trajectories_csv(trajectories: Sequence[Trajectory], stream: TextIO) -> None:
    """Columns ``traj_id,lambda,x0..x{n},v0..v{n},terminated``; time coordinate last."""
    if not trajectories:
        return
    dim = trajectories[0].positions.shape[1]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["traj_id", "lambda", *[f"x{i}" for i in range(dim)], *[f"v{i}" for i in range(dim)], "terminated"])
    for k, tr in enumerate(trajectories):
        for lam, x, v in zip(tr.lam, tr.positions, tr.velocities):
            w.writerow([k, repr(float(lam)), *[repr(float(c)) for c in x], *[repr(float(c)) for c in v], tr.terminated])
