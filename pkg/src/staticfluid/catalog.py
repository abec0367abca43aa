"""Closed-form families of translation-invariant static perfect fluids.

Each constructor returns a :class:`CatalogEntry` carrying analytic jets for
the conformal factor (and for the lapse, when one is known in closed form),
the open domain of positivity, and the density/pressure formulas as
originally printed so they can be regression-tested.  Printed expressions
that do not survive a direct check are kept, but flagged in ``errata``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._ode import IntegratorConfig
from .errors import InvalidParameterError
from .geometry import Direction, Interval, Jet2, Profile, Signature, SpacetimeSpec
from .reduction import solve_f

Formula = Callable[[float, float], float]  # (xi, alpha_norm2) -> value

IDS = ("exponential", "linear_reciprocal", "power_law", "secant", "trigonometric")


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    n: int
    params: dict
    domain: Interval
    window: Interval
    phi: Profile
    f: Profile | None = None
    mu_printed: Formula | None = None
    rho_printed: Formula | None = None
    errata: dict = field(default_factory=dict)
    anchor: float = 0.0

    def default_direction(self, signature: Signature) -> Direction:
        alpha = np.zeros(self.n)
        alpha[-1] = 1.0
        return Direction.from_alpha(signature, alpha)

    def to_spec(
        self,
        signature: Signature | None = None,
        alpha=None,
        *,
        lapse: str = "closed",
        f0: float | None = None,
        df0: float | None = None,
        xi0: float | None = None,
        interval: Interval | None = None,
        config: IntegratorConfig | None = None,
    ) -> SpacetimeSpec:
        """Build a :class:`SpacetimeSpec`.

        ``lapse="numeric"`` (forced for entries without a closed-form lapse)
        integrates the master ODE over ``interval`` (default: the entry's
        sampling window) from ``(xi0, f0, df0)``; missing initial data is
        taken from the closed form when there is one.
        """
        signature = signature or Signature.euclidean(self.n)
        if signature.n != self.n:
            raise InvalidParameterError(f"signature has n={signature.n}, entry has n={self.n}")
        direction = (Direction.from_alpha(signature, alpha) if alpha is not None
                     else self.default_direction(signature))
        want = self.params.get("alpha_norm2")
        if want is not None and not math.isclose(direction.norm2, want, rel_tol=1e-12, abs_tol=1e-12):
            raise InvalidParameterError(
                f"{self.id} was built for |alpha|^2={want}, direction has {direction.norm2}"
            )
        if lapse not in ("closed", "numeric"):
            raise ValueError(f"lapse must be 'closed' or 'numeric', got {lapse!r}")
        meta = {"example": self.id, "params": dict(self.params), "lapse": lapse, "natural_domain": self.domain}
        if lapse == "closed" and self.f is not None:
            return SpacetimeSpec(signature, direction, self.phi, self.f, interval or self.domain,
                                 label=self.id, meta=meta)

        span = interval or self.window
        xi0 = span.lo if xi0 is None else xi0
        if self.f is not None:
            jet = self.f(xi0)
            f0 = jet.value if f0 is None else f0
            df0 = jet.d1 if df0 is None else df0
        elif f0 is None or df0 is None:
            f0 = 1.0 if f0 is None else f0
            df0 = 0.0 if df0 is None else df0
        profile = solve_f(self.n, self.phi, xi0, f0, df0, span, config)
        meta.update(lapse="numeric", truncated=profile.truncated, f_profile=profile)
        dom = profile.domain
        return SpacetimeSpec(signature, direction, self.phi, profile, dom, label=self.id, meta=meta)

    def listing(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "params": dict(sorted(self.params.items())),
            "domain": [self.domain.lo, self.domain.hi],
            "window": [self.window.lo, self.window.hi],
            "errata": sorted(self.errata),
        }


def _half_line(root: float, anchor: float) -> Interval:
    if anchor == root:
        raise InvalidParameterError(f"anchor {anchor} sits on the boundary {root}")
    return Interval(root, math.inf) if anchor > root else Interval(-math.inf, root)


def _half_window(dom: Interval, near: float, far: float) -> Interval:
    if math.isfinite(dom.lo):
        return Interval(dom.lo + near, dom.lo + far)
    return Interval(dom.hi - far, dom.hi - near)


# ---------------------------------------------------------------------------


def example1_exponent(n: int, alpha_norm2: float) -> float:
    """``1 - (2 + |alpha|^2 n (n-1)) / (2 |alpha|^2 (n-1))``."""
    return 1.0 - (2.0 + alpha_norm2 * n * (n - 1)) / (2.0 * alpha_norm2 * (n - 1))


def example1(n: int = 3, alpha_norm2: float = 1.0, kappa_tilde: float = 1.0, kappa_bar: float = 0.0,
             anchor: float | None = None, branch: str = "minus") -> CatalogEntry:
    """Power-law family with density ``mu = phi'^2``.

    ``phi = |eta (k~ xi + k_)|^(1/eta)``; the absolute value keeps phi
    positive on whichever side of the root ``-k_/k~`` the anchor lies.  The
    lapse ``|k~ xi + k_|^p`` solves the master ODE when
    ``p^2 + (2q - 1) p - (n-2) q (q-1) = 0`` with ``q = 1/eta``; ``branch``
    picks the root.
    """
    if alpha_norm2 == 0:
        raise InvalidParameterError("example1 is undefined for lightlike alpha")
    if kappa_tilde == 0:
        raise InvalidParameterError("kappa_tilde must be nonzero")
    eta = example1_exponent(n, alpha_norm2)
    if abs(eta) < 1e-14:
        raise InvalidParameterError("exponent vanishes: this choice of n, |alpha|^2 is the exponential case")
    q = 1.0 / eta
    disc = (2 * q - 1) ** 2 + 4 * (n - 2) * q * (q - 1)
    if disc < 0:
        raise InvalidParameterError("no real power-law lapse for these parameters")
    sign = {"minus": -1.0, "plus": 1.0}[branch]
    p = (-(2 * q - 1) + sign * math.sqrt(disc)) / 2.0
    root = -kappa_bar / kappa_tilde + 0.0
    anchor = root + 1.0 if anchor is None else anchor
    dom = _half_line(root, anchor)
    kt, kb = kappa_tilde, kappa_bar

    def phi(xi):
        s = kt * xi + kb
        v = abs(eta * s) ** q
        return Jet2(v, q * kt * v / s, q * (q - 1) * kt * kt * v / (s * s))

    def f(xi):
        s = kt * xi + kb
        v = abs(s) ** p
        return Jet2(v, p * kt * v / s, p * (p - 1) * kt * kt * v / (s * s))

    def mu_printed(xi, a2):
        return phi(xi).d1 ** 2

    rho_printed = None
    errata = {}
    if n == 3 and alpha_norm2 == 1 and kt == 1 and kb == 0:
        errata["phi_sign"] = "printed phi = -1/xi is negative on xi > 0; only phi^2 enters, catalog uses 1/xi"

        def rho_printed(xi, a2):
            return (4.0 - math.sqrt(17.0)) / xi**4

    params = {"alpha_norm2": alpha_norm2, "kappa_tilde": kt, "kappa_bar": kb,
              "eta_tilde": eta, "lapse_exponent": p}
    return CatalogEntry("power_law", n, params, dom, _half_window(dom, 1.0, 5.0), phi, f,
                        mu_printed, rho_printed, errata, anchor)


def characteristic_roots(n: int) -> tuple[float, float]:
    """Roots of ``r^2 + 2 r - (n-2) = 0``, i.e. ``-1 +- sqrt(n-1)``."""
    s = math.sqrt(n - 1)
    return -1.0 + s, -1.0 - s


def example2(n: int = 3, branch: str = "growing") -> CatalogEntry:
    """``phi = e^xi`` with exponential lapse ``f = e^(r xi)``."""
    if n < 3:
        raise InvalidParameterError("n must be >= 3")
    r = characteristic_roots(n)[0 if branch == "growing" else 1]

    def phi(xi):
        e = math.exp(xi)
        return Jet2(e, e, e)

    def f(xi):
        e = math.exp(r * xi)
        return Jet2(e, r * e, r * r * e)

    def mu_printed(xi, a2):
        return -a2 * (n - 1) * (n - 2) / 2.0 * math.exp(2 * xi)

    def rho_printed(xi, a2):
        s = math.sqrt(n - 1)
        return a2 * (n - 1) / n * ((n - 2) ** 2 / 2.0 - (1 + s) * (n - 3 - s)) * math.exp(2 * xi)

    errata = {
        "printed_exponent": "printed lapse exponents 1 +- sqrt(n-1) do not solve f'' + 2f' - (n-2)f = 0; "
                            "the roots are -1 +- sqrt(n-1)",
        "printed_rho": "printed pressure inherits the wrong exponent; only the direct evaluation is trusted",
    }
    params = {"n": n, "lapse_exponent": r}
    return CatalogEntry("exponential", n, params, Interval(-math.inf, math.inf), Interval(-1.0, 2.0),
                        phi, f, mu_printed, rho_printed, errata)


def example3(n: int = 3, a: float = 1.0, b: float = 0.0, anchor: float | None = None) -> CatalogEntry:
    """Linear conformal factor ``phi = a xi + b`` with ``f = 1/phi``."""
    if a == 0:
        raise InvalidParameterError("a must be nonzero (a = 0 makes phi constant)")
    root = -b / a + 0.0
    anchor = root + math.copysign(1.0, a) if anchor is None else anchor
    dom = _half_line(root, anchor)
    if a * anchor + b <= 0:
        raise InvalidParameterError("phi must be positive at the anchor")

    def phi(xi):
        return Jet2(a * xi + b, a, 0.0)

    def f(xi):
        p = a * xi + b
        return Jet2(1.0 / p, -a / p**2, 2.0 * a * a / p**3)

    def mu_printed(xi, a2):
        return -n * (n - 1) * a2 / 2.0

    def rho_printed(xi, a2):
        return n * (n - 1) * a2 / 2.0

    errata = {}
    if abs(a) != 1:
        errata["a_squared"] = "printed constants omit the a^2 factor of the density formula"
    params = {"n": n, "a": a, "b": b}
    return CatalogEntry("linear_reciprocal", n, params, dom, _half_window(dom, 0.5, 3.0), phi, f,
                        mu_printed, rho_printed, errata, anchor)


def _zero_bracket(anchor: float, first: float, period: float) -> tuple[float, float]:
    """Nearest zeros below and above ``anchor`` of a lattice ``first + k*period``."""
    k = math.floor((anchor - first) / period)
    lo = first + k * period
    if lo == anchor:
        raise InvalidParameterError(f"anchor {anchor} is a zero of the profile")
    return lo, lo + period


def example4(a: float = 0.0, b: float = 1.0, c: float = 1.0, n: int = 3, anchor: float = 0.0) -> CatalogEntry:
    """Trigonometric family from ``x = -tan xi``.

    ``phi = c cos xi`` and ``f = b cos(a + xi sqrt(n-1)) / cos xi``.
    """
    if not b > 0:
        raise InvalidParameterError("b must be positive")
    if c == 0:
        raise InvalidParameterError("c must be nonzero")
    s = math.sqrt(n - 1)
    lo1, hi1 = _zero_bracket(anchor, math.pi / 2, math.pi)
    lo2, hi2 = _zero_bracket(s * anchor + a, math.pi / 2, math.pi)
    dom = Interval(max(lo1, (lo2 - a) / s), min(hi1, (hi2 - a) / s))
    if not (c * math.cos(anchor) > 0 and math.cos(a + s * anchor) / math.cos(anchor) > 0):
        raise InvalidParameterError("phi and f are not both positive around the anchor: empty domain")

    def phi(xi):
        cs = c * math.cos(xi)
        return Jet2(cs, -c * math.sin(xi), -cs)

    def f(xi):
        arg = a + s * xi
        v = b * math.cos(arg) / math.cos(xi)
        y = -s * math.tan(arg) + math.tan(xi)
        dy = -s * s / math.cos(arg) ** 2 + 1.0 / math.cos(xi) ** 2
        return Jet2(v, v * y, v * (dy + y * y))

    def mu_printed(xi, a2):
        return a2 * (math.cos(xi) ** 2 - 3.0)

    def rho_printed(xi, a2):
        r2 = math.sqrt(2.0)
        return -a2 / 3.0 * (2 * r2 * math.tan(r2 * xi) * math.cos(xi) * (2 * math.sin(xi) - 1)
                            + 7 * math.cos(xi) ** 2 + 2 * math.sin(xi) - 7)

    errata = {
        "cos_sign_convention": "printed lapse uses cos(a - xi sqrt(n-1)); integrating z gives "
                               "cos(a + xi sqrt(n-1)); the families coincide under a -> -a",
    }
    if n == 3:
        errata["printed_rho"] = "printed pressure disagrees with the direct evaluation away from xi = 0"
    else:
        mu_printed = rho_printed = None
    if abs(c) != 1:
        mu_printed = None
    params = {"a": a, "b": b, "c": c, "n": n}
    return CatalogEntry("trigonometric", n, params, dom, dom.shrink(0.05), phi, f,
                        mu_printed, rho_printed, errata, anchor)


def example5(n: int = 3, a: float = 0.0, b: float = 1.0, anchor: float = 0.0) -> CatalogEntry:
    """Secant family with density ``mu = (n-1)/2 |alpha|^2 phi^2``.

    ``phi = b sec^k(a + c xi)`` with ``k = 2/(n-2)``, ``c = sqrt(n-2)/2``.
    No closed-form lapse is known; it is integrated numerically.
    """
    if not b > 0:
        raise InvalidParameterError("b must be positive")
    k = 2.0 / (n - 2)
    cc = math.sqrt(n - 2) / 2.0
    lo, hi = _zero_bracket(a + cc * anchor, math.pi / 2, math.pi)
    if math.cos(a + cc * anchor) <= 0:
        raise InvalidParameterError("anchor is not on a positive secant branch")
    dom = Interval((lo - a) / cc, (hi - a) / cc)

    def phi(xi):
        arg = a + cc * xi
        t = math.tan(arg)
        sec2 = 1.0 / math.cos(arg) ** 2
        v = b * (1.0 / math.cos(arg)) ** k
        return Jet2(v, v * k * cc * t, v * k * cc * cc * (k * t * t + sec2))

    def mu_printed(xi, a2):
        return (n - 1) / 2.0 * a2 * phi(xi).value ** 2

    win = Interval(max(dom.lo, -2.5), min(dom.hi, 2.5)) if n == 3 and a == 0 else dom.shrink(0.1 * (dom.hi - dom.lo))
    params = {"n": n, "a": a, "b": b}
    return CatalogEntry("secant", n, params, dom, win, phi, None, mu_printed, None, {}, anchor)


def secant_lapse_coefficients(xi: float) -> tuple[float, float]:
    """Coefficients ``(P, Q)`` of ``f'' + P f' - Q f = 0`` for the n=3, a=0, b=1 secant entry."""
    t = math.tan(xi / 2.0)
    return 2.0 * t, 0.5 * (1.0 + 3.0 * t * t)


_BUILDERS = {
    "power_law": example1,
    "exponential": example2,
    "linear_reciprocal": example3,
    "trigonometric": example4,
    "secant": example5,
}


def build(entry_id: str, **params) -> CatalogEntry:
    """Construct a catalog entry by id with keyword parameters."""
    try:
        builder = _BUILDERS[entry_id]
    except KeyError:
        raise InvalidParameterError(f"unknown catalog id {entry_id!r}; choose from {', '.join(IDS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise InvalidParameterError(f"bad parameters for {entry_id}: {exc}") from None


def entries() -> list[CatalogEntry]:
    """All five families at their default parameters, sorted by id."""
    return [build(i) for i in IDS]


def listing(entry_id: str | None = None) -> list[dict]:
    return [e.listing() for e in entries() if entry_id is None or e.id == entry_id]


__all__ = [
    "CatalogEntry", "IDS", "build", "entries", "listing", "example1", "example2", "example3",
    "example4", "example5", "example1_exponent", "characteristic_roots", "secant_lapse_coefficients",
]
