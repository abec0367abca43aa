"""Finite-difference curvature oracle for constructed static spacetimes.

Nothing here uses the closed-form curvature of :mod:`staticfluid.geometry`.
The metric is only *evaluated* (through :func:`geometry.static_metric_at`),
Christoffel symbols come from central differences of it, and the Ricci
tensor from central differences of those.  The result is compared with the
trace-free Einstein system, the density/pressure recovery formulas and the
perfect-fluid eigenstructure of the Einstein tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .errors import (
    CausalCharacterError,
    DecompositionError,
    DomainError,
    NotPerfectFluidError,
    StaticFluidError,
)
from .geometry import Interval, Jet2, SpacetimeSpec
from .reduction import mu_of, rho_of

#: ``G = EIGHT_PI_CONVENTION * T``.  The density and pressure formulas of the
#: reduction already absorb the 8 pi of Einstein's equation, so the stored
#: stress-energy is the Einstein tensor itself.
EIGHT_PI_CONVENTION = 1.0

MetricField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FDConfig:
    """Finite-difference settings.

    ``grid`` holds spacetime points.  ``gap`` is the relative eigenvalue
    separation that splits clusters; an Einstein tensor whose eigenvalues are
    all below ``vacuum_tol`` in magnitude is reported as vacuum.
    """

    h: float = 1e-3
    richardson: bool = True
    grid: tuple = ()
    tol: float = 5e-4
    gap: float = 1e-3
    vacuum_tol: float = 1e-6
    scale_h: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "grid", tuple(np.asarray(p, dtype=float) for p in self.grid))


def line_grid(spec: SpacetimeSpec, count: int, interval: Interval | None = None,
              offset: Sequence[float] | None = None) -> list[np.ndarray]:
    """``count`` spacetime points whose ``xi`` is uniform over ``interval``.

    The default offset moves the points off the line through the origin so
    the transverse coordinates are generic.
    """
    interval = interval or spec.interval
    if offset is None:
        offset = 0.37 * np.arange(1, spec.n + 1) - 0.5
    xs = np.linspace(interval.lo, interval.hi, count)
    return [spec.point_at(float(x), offset, t=0.25) for x in xs]


def _derivative(fn: Callable[[np.ndarray], np.ndarray], point: np.ndarray, h: float,
                richardson: bool) -> np.ndarray:
    """``out[l, ...] = d fn / d x_l`` by central differences (optionally Richardson)."""
    point = np.asarray(point, dtype=float)

    def central(step):
        cols = []
        for l in range(point.size):
            e = np.zeros_like(point)
            e[l] = step
            cols.append((np.asarray(fn(point + e)) - np.asarray(fn(point - e))) / (2.0 * step))
        return np.stack(cols)

    d_h = central(h)
    if not richardson:
        return d_h
    return (4.0 * central(h / 2.0) - d_h) / 3.0


def _inverse(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise DecompositionError("metric has non-finite entries")
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > 1e14:
        raise DecompositionError(f"metric is numerically singular (cond={cond:.3e})")
    return np.linalg.inv(g)


def numeric_christoffel(metric_field: MetricField, point, h: float, richardson: bool = False) -> np.ndarray:
    """``gamma[k, i, j] = Gamma^k_ij`` from central differences of the metric."""
    point = np.asarray(point, dtype=float)
    ginv = _inverse(np.asarray(metric_field(point)))
    dg = _derivative(metric_field, point, h, richardson)  # dg[l, i, j] = d_l g_ij
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, lowered)


def numeric_ricci(metric_field: MetricField, point, h: float, richardson: bool = False) -> np.ndarray:
    """Ricci tensor by differencing :func:`numeric_christoffel` (stencil reach ``2h``).

    ``R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik``.
    """
    point = np.asarray(point, dtype=float)
    gam = numeric_christoffel(metric_field, point, h, richardson)
    dgam = _derivative(lambda p: numeric_christoffel(metric_field, p, h, richardson), point, h, richardson)
    ric = (np.einsum("kkij->ij", dgam) - np.einsum("jkik->ij", dgam)
           + np.einsum("kkl,lij->ij", gam, gam) - np.einsum("kjl,lik->ij", gam, gam))
    return 0.5 * (ric + ric.T)


def numeric_hessian(scalar_field: Callable[[np.ndarray], float], metric_field: MetricField, point,
                    h: float, richardson: bool = False) -> np.ndarray:
    """Covariant Hessian ``d_i d_j f - Gamma^k_ij d_k f`` by nested differences."""
    point = np.asarray(point, dtype=float)
    grad_fn = lambda p: _derivative(lambda q: np.asarray(scalar_field(q)), p, h, richardson)
    grad = grad_fn(point)
    second = _derivative(grad_fn, point, h, richardson)
    gam = numeric_christoffel(metric_field, point, h, richardson)
    hess = second - np.einsum("kij,k->ij", gam, grad)
    return 0.5 * (hess + hess.T)


def einstein_tensor(ricci: np.ndarray, metric: np.ndarray, scalar_curv: float | None = None) -> np.ndarray:
    if scalar_curv is None:
        scalar_curv = float(np.einsum("ij,ij->", _inverse(metric), ricci))
    return ricci - 0.5 * scalar_curv * metric


@dataclass(frozen=True)
class FluidDecomposition:
    """Perfect-fluid reading of an Einstein tensor.

    ``eta`` is the contravariant flux vector, normalized so the metric gives
    it norm -1.  ``degenerate`` marks a single eigenvalue cluster
    (``mu + rho = 0``, any observer fits); ``vacuum`` marks ``G = 0``.
    """

    mu: float
    rho: float
    eta: np.ndarray
    eigen_multiplicities: list
    residual: float
    degenerate: bool = False
    vacuum: bool = False


def _static_observer(metric: np.ndarray) -> np.ndarray:
    t = metric.shape[0] - 1
    if not metric[t, t] < 0:
        raise CausalCharacterError("last coordinate is not timelike")
    eta = np.zeros(metric.shape[0])
    eta[t] = 1.0 / math.sqrt(-metric[t, t])
    return eta


def fluid_decompose(ricci: np.ndarray, metric: np.ndarray, scalar_curv: float | None = None,
                    tol: float = 1e-3, vacuum_tol: float = 1e-6) -> FluidDecomposition:
    """Split the Einstein tensor as ``(mu + rho) eta (x) eta + rho g``.

    The eigenvalues of ``g^-1 G`` are clustered with relative gap ``tol``.
    A perfect fluid gives ``-mu`` on the timelike flux direction and ``rho``
    with multiplicity ``n`` on its orthogonal complement.
    """
    metric = np.asarray(metric, dtype=float)
    dim = metric.shape[0]
    ginv = _inverse(metric)
    G = einstein_tensor(np.asarray(ricci, dtype=float), metric, scalar_curv) / EIGHT_PI_CONVENTION
    gnorm = float(np.linalg.norm(G))
    vals, vecs = np.linalg.eig(ginv @ G)
    scale = float(np.max(np.abs(vals)))
    if scale < vacuum_tol:
        return FluidDecomposition(0.0, 0.0, _static_observer(metric), [dim], gnorm, True, True)
    if np.max(np.abs(vals.imag)) > tol * scale:
        raise NotPerfectFluidError("Einstein tensor has complex eigenvalues")
    vals, vecs = vals.real, vecs.real
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    clusters = [[0]]
    for k in range(1, dim):
        if vals[k] - vals[k - 1] > tol * scale:
            clusters.append([k])
        else:
            clusters[-1].append(k)
    if len(clusters) > 2:
        raise NotPerfectFluidError(f"{len(clusters)} eigenvalue clusters: {vals}")

    if len(clusters) == 1:
        lam = float(vals.mean())
        mu, rho, eta = -lam, lam, _static_observer(metric)
        mults, degenerate = [dim], True
    else:
        sizes = sorted(len(c) for c in clusters)
        if sizes != [1, dim - 1]:
            raise NotPerfectFluidError(f"eigenvalue multiplicities {sizes}, expected [1, {dim - 1}]")
        simple = next(c for c in clusters if len(c) == 1)[0]
        repeated = next(c for c in clusters if len(c) > 1)
        v = vecs[:, simple]
        q = float(v @ metric @ v)
        if not q < -1e-12 * float(v @ v) * float(np.max(np.abs(metric))):
            raise CausalCharacterError(f"simple eigenvector has norm {q:+.3e}, not timelike")
        eta = v / math.sqrt(-q)
        if eta[-1] < 0:
            eta = -eta
        mu, rho = -float(vals[simple]), float(vals[repeated].mean())
        mults, degenerate = [1, dim - 1], False

    low = metric @ eta
    T = (mu + rho) * np.outer(low, low) + rho * metric
    residual = float(np.linalg.norm(G - T)) / max(gnorm, 1e-300)
    return FluidDecomposition(mu, rho, eta, mults, residual, degenerate, False)


@dataclass
class PointCheck:
    point: np.ndarray
    xi: float
    traceless: float
    trace: float
    mu_error: float
    rho_error: float
    fluid: FluidDecomposition | None
    eigen_ok: bool
    note: str = ""


@dataclass
class VerificationReport:
    max_traceless_residual: float = 0.0
    max_trace_residual: float = 0.0
    max_mu_error: float = 0.0
    max_rho_error: float = 0.0
    max_fluid_residual: float = 0.0
    eigen_ok: bool = True
    points_checked: int = 0
    h_used: float = 0.0
    richardson: bool = True
    skipped: list = field(default_factory=list)
    multiplicities: list = field(default_factory=list)
    vacuum_degenerate: bool = False
    degenerate_points: int = 0
    checks: list = field(default_factory=list, repr=False)

    def passed(self, tol: float) -> bool:
        return (self.points_checked > 0 and self.eigen_ok
                and max(self.max_traceless_residual, self.max_mu_error,
                        self.max_rho_error, self.max_fluid_residual) < tol
                and self.max_trace_residual < 10 * tol)


def _rel(value: float, reference: float) -> float:
    return abs(value) / max(1.0, abs(reference))


def check_point(spec: SpacetimeSpec, point: np.ndarray, config: FDConfig) -> PointCheck:
    """All checks at one spacetime point; raises on domain/singularity problems."""
    n = spec.n
    point = np.asarray(point, dtype=float)
    xi = spec.xi(point)
    phi, f = spec.jets(xi)
    h = config.h * min(1.0, phi.value) if config.scale_h else config.h
    reach = 2.0 * h * float(np.max(np.abs(spec.direction.array)))
    if not (xi - reach in spec.interval and xi + reach in spec.interval):
        raise DomainError(f"stencil of reach {reach:.2e} around xi={xi} leaves {spec.interval}")
    rich = config.richardson
    t = point[n]

    def full_metric(p):
        return geometry.static_metric_at(spec, p)

    def spatial_metric(x):
        return geometry.static_metric_at(spec, np.append(x, t))[:n, :n]

    def lapse(x):
        return spec.f(spec.xi(x)).value

    x = point[:n]
    g = spatial_metric(x)
    ginv = _inverse(g)
    ric = numeric_ricci(spatial_metric, x, h, rich)
    R = float(np.einsum("ij,ij->", ginv, ric))
    hess = numeric_hessian(lapse, spatial_metric, x, h, rich)
    lap = float(np.einsum("ij,ij->", ginv, hess))
    fv = lapse(x)

    lhs = fv * (ric - R / n * g)
    rhs = hess - lap / n * g
    size = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    traceless = float(np.max(np.abs(lhs - rhs))) / size
    trace = max(abs(float(np.einsum("ij,ij->", ginv, lhs))), abs(float(np.einsum("ij,ij->", ginv, rhs)))) / size

    mu_expected = mu_of(n, spec.direction.norm2, phi)
    rho_expected = rho_of(n, spec.direction.norm2, phi, f, "direct")
    mu_num = R / 2.0
    rho_num = (n - 1) / n * (lap / fv - (n - 2) / (2.0 * (n - 1)) * R)
    mu_err = _rel(mu_num - mu_expected, mu_expected)
    rho_err = _rel(rho_num - rho_expected, rho_expected)

    ric4 = numeric_ricci(full_metric, point, h, rich)
    note = ""
    try:
        fluid = fluid_decompose(ric4, full_metric(point), tol=config.gap, vacuum_tol=config.vacuum_tol)
    except (NotPerfectFluidError, CausalCharacterError) as exc:
        fluid, eigen_ok, note = None, False, str(exc)
    else:
        eigen_ok = fluid.degenerate or fluid.eigen_multiplicities == [1, n]
        mu_err = max(mu_err, _rel(fluid.mu - mu_expected, mu_expected))
        rho_err = max(rho_err, _rel(fluid.rho - rho_expected, rho_expected))
    return PointCheck(point, xi, traceless, trace, mu_err, rho_err, fluid, eigen_ok, note)


def verify_spacetime(spec: SpacetimeSpec, config: FDConfig) -> VerificationReport:
    """Run :func:`check_point` over ``config.grid`` and aggregate maxima.

    Points that fail domain or stencil checks are listed in ``skipped``
    together with the reason; they are never dropped silently.
    """
    if not config.grid:
        raise ValueError("verification grid is empty")
    report = VerificationReport(h_used=config.h, richardson=config.richardson)
    vacuum_flags = []
    for p in config.grid:
        try:
            c = check_point(spec, p, config)
        except StaticFluidError as exc:
            report.skipped.append({"point": [float(v) for v in p], "reason": str(exc)})
            continue
        report.checks.append(c)
        report.points_checked += 1
        report.max_traceless_residual = max(report.max_traceless_residual, c.traceless)
        report.max_trace_residual = max(report.max_trace_residual, c.trace)
        report.max_mu_error = max(report.max_mu_error, c.mu_error)
        report.max_rho_error = max(report.max_rho_error, c.rho_error)
        report.eigen_ok = report.eigen_ok and c.eigen_ok
        if c.fluid is not None:
            report.max_fluid_residual = max(report.max_fluid_residual, c.fluid.residual)
            if c.fluid.eigen_multiplicities not in report.multiplicities:
                report.multiplicities.append(c.fluid.eigen_multiplicities)
            report.degenerate_points += int(c.fluid.degenerate)
            vacuum_flags.append(c.fluid.vacuum)
    report.eigen_ok = report.eigen_ok and report.points_checked > 0
    report.vacuum_degenerate = bool(vacuum_flags) and all(vacuum_flags)
    return report


def perturb_lapse(spec: SpacetimeSpec, amount: float = 0.1, window: Interval | None = None) -> SpacetimeSpec:
    """Negative control: multiply the lapse by ``1 + amount * tau**2``.

    ``tau`` runs from 0 to 1 across ``window`` (default:
    ``spec.interval``), so the lapse grows by up to ``amount`` (10% by default).  A
    constant factor would not do: the master ODE is linear in ``f``.
    """
    window = window or spec.interval
    if not window.finite:
        raise ValueError("perturbation window must be bounded")
    lo, width = window.lo, window.hi - window.lo
    base = spec.f

    def f(xi):
        fj = base(xi)
        tau = (xi - lo) / width
        g, g1, g2 = 1.0 + amount * tau * tau, 2.0 * amount * tau / width, 2.0 * amount / width**2
        return Jet2(fj.value * g, fj.d1 * g + fj.value * g1, fj.d2 * g + 2.0 * fj.d1 * g1 + fj.value * g2)

    meta = dict(spec.meta, perturbed=amount)
    return SpacetimeSpec(spec.signature, spec.direction, spec.phi, f, spec.interval,
                         label=f"{spec.label}+perturbed", meta=meta)
