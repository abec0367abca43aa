"""Closed-form geometry of the conformally flat metric ``g = delta / phi**2``.

Everything here depends on space only through ``xi = alpha . x``, so every
quantity is a function of the 2-jet of the profiles ``phi`` and ``f`` at a
single value of ``xi``.  Tensors are dense arrays of lower-index coordinate
components in the Cartesian chart; the metric factor ``eps_i delta_ij /
phi**2`` is applied explicitly whenever a trace is taken.

The static spacetime is ``ghat = g - f**2 dt**2`` with the time coordinate
stored last, i.e. index ``n`` of an ``(n+1)``-vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InvalidDirectionError

#: Conformal factors at or below this value are treated as degenerate.
PHI_FLOOR = 1e-12


class Jet2(NamedTuple):
    """Value, first and second ``xi``-derivative of a profile at one point."""

    value: float
    d1: float
    d2: float


Profile = Callable[[float], Jet2]


@dataclass(frozen=True)
class Signature:
    """Diagonal signs of the pseudo-Euclidean metric ``delta``."""

    eps: tuple[int, ...]

    def __post_init__(self):
        eps = tuple(int(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        if len(eps) < 3:
            raise DimensionError(f"need n >= 3 spatial dimensions, got {len(eps)}")
        if any(e not in (-1, 1) for e in eps):
            raise ValueError(f"signature entries must be +1 or -1, got {eps}")
        if 1 not in eps:
            raise ValueError("signature needs at least one +1 entry")

    @classmethod
    def from_string(cls, text: str) -> "Signature":
        """Parse the compact form ``"-++"`` (one character per dimension)."""
        table = {"+": 1, "-": -1}
        try:
            return cls(tuple(table[c] for c in text.strip()))
        except KeyError as exc:
            raise ValueError(f"bad signature character {exc.args[0]!r} in {text!r}") from None

    @classmethod
    def euclidean(cls, n: int) -> "Signature":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return len(self.eps)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.eps, dtype=float)

    def __str__(self):
        return "".join("+" if e > 0 else "-" for e in self.eps)


def alpha_norm2(signature: Signature, alpha: Sequence[float]) -> float:
    """Return ``sum_k eps_k alpha_k**2``.

    Negative means timelike, zero lightlike and positive spacelike.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape != (signature.n,):
        raise DimensionError(f"alpha has shape {a.shape}, expected ({signature.n},)")
    if not np.any(a):
        raise InvalidDirectionError("alpha must be nonzero")
    return float(np.dot(signature.array, a * a))


@dataclass(frozen=True)
class Direction:
    """The translation direction ``alpha`` together with its squared norm."""

    alpha: tuple[float, ...]
    norm2: float

    @classmethod
    def from_alpha(cls, signature: Signature, alpha: Sequence[float]) -> "Direction":
        return cls(tuple(float(a) for a in alpha), alpha_norm2(signature, alpha))

    def check(self, signature: Signature) -> None:
        expected = alpha_norm2(signature, self.alpha)
        if not math.isclose(expected, self.norm2, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"stored norm2 {self.norm2} != recomputed {expected}")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def causal_character(self) -> str:
        if abs(self.norm2) < 1e-14:
            return "lightlike"
        return "spacelike" if self.norm2 > 0 else "timelike"

    def normalized(self, signature: Signature) -> "Direction":
        """Rescale alpha so that ``|norm2| == 1``; lightlike directions are returned as-is."""
        if abs(self.norm2) < 1e-14:
            return self
        return Direction.from_alpha(signature, self.array / math.sqrt(abs(self.norm2)))


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lo, hi)``; either end may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        lo, sep, hi = text.partition(":")
        if not sep:
            raise ValueError(f"interval must look like 'a:b', got {text!r}")
        return cls(float(lo), float(hi))

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def shrink(self, margin: float) -> "Interval":
        return Interval(self.lo + margin, self.hi - margin)

    def linspace(self, count: int) -> np.ndarray:
        """Uniform samples including both (finite) endpoints."""
        if not self.finite:
            raise ValueError("cannot sample an unbounded interval")
        return np.linspace(self.lo, self.hi, count)

    def __str__(self):
        return f"{self.lo!r}:{self.hi!r}"


@dataclass(frozen=True)
class SpacetimeSpec:
    """Full data of a translation-invariant static spacetime.

    ``phi`` and ``f`` map ``xi`` to a :class:`Jet2`; ``interval`` is the open
    range of ``xi`` on which both are defined and positive.
    """

    signature: Signature
    direction: Direction
    phi: Profile
    f: Profile
    interval: Interval
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.direction.check(self.signature)

    @property
    def n(self) -> int:
        return self.signature.n

    def xi(self, point: Sequence[float]) -> float:
        """``alpha . x`` for a spatial or spacetime point."""
        p = np.asarray(point, dtype=float)
        if p.shape not in ((self.n,), (self.n + 1,)):
            raise DimensionError(f"point has shape {p.shape}, expected ({self.n},) or ({self.n + 1},)")
        return float(np.dot(self.direction.array, p[: self.n]))

    def jets(self, xi: float) -> tuple[Jet2, Jet2]:
        """Return ``(phi_jet, f_jet)`` at ``xi`` after domain checks."""
        if xi not in self.interval:
            raise DomainError(f"xi={xi} outside {self.interval}")
        pj = Jet2(*self.phi(xi))
        fj = Jet2(*self.f(xi))
        _check_phi(pj)
        if not fj.value > 0:
            raise DomainError(f"lapse f={fj.value} is not positive at xi={xi}")
        return pj, fj

    def check_positive(self, samples: Sequence[float]) -> None:
        for x in samples:
            self.jets(float(x))

    def point_at(self, xi: float, offset: Sequence[float] | None = None, t: float = 0.0) -> np.ndarray:
        """A spacetime point with ``alpha . x == xi``.

        The spatial part is ``xi * alpha / |alpha|_E**2`` plus ``offset``
        projected orthogonally to alpha in the Euclidean sense, so the offset
        never changes ``xi``.
        """
        a = self.direction.array
        aa = float(np.dot(a, a))
        x = xi * a / aa
        if offset is not None:
            o = np.asarray(offset, dtype=float)
            x = x + o - np.dot(o, a) / aa * a
        return np.append(x, t)


def _check_phi(phi: Jet2) -> None:
    if not phi.value > PHI_FLOOR:
        raise DomainError(f"conformal factor phi={phi.value} is not positive")


def _outer(direction: Direction) -> np.ndarray:
    a = direction.array
    return np.outer(a, a)


def spatial_metric(signature: Signature, phi: Jet2) -> np.ndarray:
    """Lower components ``g_ij = eps_i delta_ij / phi**2``."""
    _check_phi(phi)
    return np.diag(signature.array / phi.value**2)


def g_trace(signature: Signature, phi: Jet2, tensor: np.ndarray) -> float:
    """Trace with respect to g: ``sum_k phi**2 eps_k T_kk``."""
    return float(phi.value**2 * np.dot(signature.array, np.diag(tensor)))


def spatial_ricci(signature: Signature, direction: Direction, phi: Jet2) -> np.ndarray:
    """Ricci tensor of ``g = delta / phi**2`` in lower components."""
    _check_phi(phi)
    p, p1, p2 = phi
    ratio2 = p2 / p
    isotropic = direction.norm2 * (ratio2 - (signature.n - 1) * (p1 / p) ** 2)
    return (signature.n - 2) * ratio2 * _outer(direction) + isotropic * np.diag(signature.array)


def spatial_scalar_curvature(signature: Signature, direction: Direction, phi: Jet2) -> float:
    """``R_g = (n-1) |alpha|^2 (2 phi phi'' - n phi'^2)``."""
    n = signature.n
    p, p1, p2 = phi
    return (n - 1) * direction.norm2 * (2.0 * p * p2 - n * p1 * p1)


def trace_free_projector(signature: Signature, direction: Direction) -> np.ndarray:
    """``alpha_i alpha_j - delta_ij eps_i |alpha|^2 / n``, the common factor of
    both sides of the trace-free Einstein system."""
    return _outer(direction) - np.diag(signature.array) * direction.norm2 / signature.n


def traceless_ricci(signature: Signature, direction: Direction, phi: Jet2) -> np.ndarray:
    """``Ric_g - (R_g / n) g``."""
    _check_phi(phi)
    return (signature.n - 2) * (phi.d2 / phi.value) * trace_free_projector(signature, direction)


def spatial_christoffel(signature: Signature, direction: Direction, phi: Jet2) -> np.ndarray:
    """Christoffel symbols of g as an array ``gamma[k, i, j] = Gamma^k_ij``.

    ``Gamma^k_ij = -(eps_k / phi) (delta_jk eps_j phi_i + delta_ik eps_i phi_j
    - delta_ij eps_i phi_k)`` with ``phi_i = alpha_i phi'``.
    """
    _check_phi(phi)
    n = signature.n
    eps = signature.array
    grad = direction.array * phi.d1
    eye = np.eye(n)
    # term[k,i,j] for each of the three Kronecker patterns
    t1 = np.einsum("jk,j,i->kij", eye, eps, grad)
    t2 = np.einsum("ik,i,j->kij", eye, eps, grad)
    t3 = np.einsum("ij,i,k->kij", eye, eps, grad)
    return -(eps / phi.value)[:, None, None] * (t1 + t2 - t3)


def conformal_hessian_f(signature: Signature, direction: Direction, phi: Jet2, f: Jet2) -> np.ndarray:
    """Hessian of the lapse with respect to g.

    ``(nabla^2_g f)_ij = alpha_i alpha_j f'' + (2 alpha_i alpha_j - delta_ij
    eps_i |alpha|^2) phi' f' / phi``.
    """
    _check_phi(phi)
    aa = _outer(direction)
    mixed = 2.0 * aa - np.diag(signature.array) * direction.norm2
    return aa * f.d2 + mixed * (phi.d1 * f.d1 / phi.value)


def conformal_laplacian_f(signature: Signature, direction: Direction, phi: Jet2, f: Jet2) -> float:
    """``Delta_g f = phi^2 |alpha|^2 (f'' - (n-2) phi' f' / phi)``."""
    _check_phi(phi)
    p = phi.value
    return p * p * direction.norm2 * (f.d2 - (signature.n - 2) * phi.d1 * f.d1 / p)


def traceless_hessian_f(signature: Signature, direction: Direction, phi: Jet2, f: Jet2) -> np.ndarray:
    """``nabla^2_g f - (Delta_g f / n) g``, equal to ``(f'' + 2 phi' f'/phi)``
    times the trace-free projector."""
    _check_phi(phi)
    factor = f.d2 + 2.0 * phi.d1 * f.d1 / phi.value
    return factor * trace_free_projector(signature, direction)


def static_metric_at(spec: SpacetimeSpec, point: Sequence[float]) -> np.ndarray:
    """``diag(eps_1/phi^2, ..., eps_n/phi^2, -f^2)`` at a spacetime point."""
    phi, f = spec.jets(spec.xi(point))
    return np.diag(np.append(spec.signature.array / phi.value**2, -f.value**2))


def static_christoffel(spec: SpacetimeSpec, point: Sequence[float]) -> np.ndarray:
    """Christoffel symbols of the static metric, time index last.

    The spatial block is that of g; the only other nonzero entries are
    ``Gamma^t_tj = Gamma^t_jt = f_j / f`` and ``Gamma^j_tt = eps_j phi^2 f f_j``.
    """
    n = spec.n
    phi, f = spec.jets(spec.xi(point))
    gam = np.zeros((n + 1, n + 1, n + 1))
    gam[:n, :n, :n] = spatial_christoffel(spec.signature, spec.direction, phi)
    df = spec.direction.array * f.d1
    gam[n, n, :n] = df / f.value
    gam[n, :n, n] = df / f.value
    gam[:n, n, n] = spec.signature.array * phi.value**2 * f.value * df
    return gam


class Witness(NamedTuple):
    i: int
    j: int
    value: float


def nondegeneracy_witness(signature: Signature, direction: Direction) -> Witness:
    """Indices (0-based) of the largest entry of the trace-free projector.

    The largest entry is used rather than the first nonzero pair so that a
    tiny component (whose product may underflow) never yields a zero witness.
    Ties go to the first entry in row-major order over ``i <= j``.
    """
    a = direction.array
    if not np.any(a):
        raise InvalidDirectionError("alpha must be nonzero")
    proj = trace_free_projector(signature, direction)
    iu, ju = np.triu_indices(signature.n)
    k = int(np.argmax(np.abs(proj[iu, ju])))
    i, j = int(iu[k]), int(ju[k])
    return Witness(i, j, float(proj[i, j]))
