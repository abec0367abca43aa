import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from staticfluid import geometry as G
from staticfluid import reduction as R
from staticfluid._ode import IntegratorConfig
from staticfluid.errors import DomainError, IntegrationError, InvalidParticularSolutionError
from staticfluid.geometry import Direction, Interval, Jet2, Signature, SpacetimeSpec

from conftest import geometry_inputs, jets

P1 = (3 - math.sqrt(17)) / 2
R2 = math.sqrt(2.0)
E3 = Signature.euclidean(3)
Z = Direction.from_alpha(E3, (0.0, 0.0, 1.0))


def recip(xi):
    return Jet2(1 / xi, -1 / xi**2, 2 / xi**3)


def power(p):
    return lambda xi: Jet2(xi**p, p * xi ** (p - 1), p * (p - 1) * xi ** (p - 2))


def expo(xi):
    e = math.exp(xi)
    return Jet2(e, e, e)


def cosine(xi):
    return Jet2(math.cos(xi), -math.sin(xi), -math.cos(xi))


def trig_f(xi):
    v = math.cos(R2 * xi) / math.cos(xi)
    y = -R2 * math.tan(R2 * xi) + math.tan(xi)
    dy = -2 / math.cos(R2 * xi) ** 2 + 1 / math.cos(xi) ** 2
    return Jet2(v, v * y, v * (dy + y * y))


# --- edo_residual -------------------------------------------------------------


def test_residual_constants():
    assert R.edo_residual(3, Jet2(2.0, 0.0, 0.0), Jet2(5.0, 0.0, 0.0)) == 0.0


@pytest.mark.parametrize("xi", [0.2, 1.0, 3.7, 12.0])
def test_residual_power_law(xi):
    phi, f = recip(xi), power(P1)(xi)
    assert abs(R.edo_residual(3, phi, f)) <= 1e-10 * R.edo_scale(3, phi, f)


def test_residual_trigonometric():
    phi, f = cosine(0.3), trig_f(0.3)
    assert abs(R.edo_residual(3, phi, f)) <= 1e-10 * R.edo_scale(3, phi, f)


# --- mu / rho -----------------------------------------------------------------


def test_mu_examples():
    assert R.mu_of(3, 0.0, Jet2(1.3, 2.0, -4.0)) == 0.0
    for xi in (0.5, 1.0, 2.0):
        assert R.mu_of(3, 1.0, recip(xi)) == pytest.approx(xi**-4, rel=1e-13)
    for xi in (-0.6, 0.0, 0.9):
        assert R.mu_of(3, 1.0, cosine(xi)) == pytest.approx(math.cos(xi) ** 2 - 3, rel=1e-14)


@pytest.mark.parametrize("xi", [0.5, 1.0, 3.0])
def test_rho_power_law(xi):
    want = (4 - math.sqrt(17)) * xi**-4
    for mode in ("direct", "eliminate_f2"):
        assert R.rho_of(3, 1.0, recip(xi), power(P1)(xi), mode) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_rho_linear_reciprocal(n):
    for xi in (0.3, 1.0, 4.0):
        phi = Jet2(xi, 1.0, 0.0)
        f = Jet2(1 / xi, -1 / xi**2, 2 / xi**3)
        assert R.rho_of(n, 1.0, phi, f) == pytest.approx(n * (n - 1) / 2, rel=1e-13)


def test_rho_lightlike_and_errors():
    assert R.rho_of(3, 0.0, Jet2(1.0, 1.0, 1.0), Jet2(1.0, 2.0, 3.0)) == 0.0
    with pytest.raises(DomainError):
        R.rho_of(3, 1.0, Jet2(1.0, 0.0, 0.0), Jet2(-1.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        R.rho_of(3, 1.0, Jet2(0.0, 0.0, 0.0), Jet2(1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        R.rho_of(3, 1.0, Jet2(1.0, 0.0, 0.0), Jet2(1.0, 0.0, 0.0), mode="bogus")


@given(st.integers(3, 7), st.floats(-2, 2), jets(), jets())
def test_on_shell_modes_agree(n, a2, phi, f):
    # put f on shell by replacing f'' with the forced value
    f = Jet2(f.value, f.d1, R.lapse_second_derivative(n, phi, f.value, f.d1))
    d = R.rho_of(n, a2, phi, f, "direct")
    e = R.rho_of(n, a2, phi, f, "eliminate_f2")
    scale = abs(a2) * (phi.value**2 * abs(f.d2) / f.value + (n - 2) * (
        abs(f.d1 * phi.d1 * phi.value / f.value) + abs(phi.value * phi.d2) + n / 2 * phi.d1**2))
    assert abs(d - e) <= 1e-10 * max(1.0, scale)


@given(geometry_inputs())
def test_mu_is_half_scalar_curvature(inp):
    sig, d, phi, _ = inp
    mu = R.mu_of(sig.n, d.norm2, phi)
    half_r = G.spatial_scalar_curvature(sig, d, phi) / 2
    scale = abs(d.norm2) * (sig.n - 1) * (abs(phi.value * phi.d2) + sig.n / 2 * phi.d1**2)
    assert abs(mu - half_r) <= 1e-12 * max(1.0, scale)


@given(geometry_inputs())
def test_rho_recovery_identity(inp):
    sig, d, phi, f = inp
    n = sig.n
    lap = G.conformal_laplacian_f(sig, d, phi, f)
    rg = G.spatial_scalar_curvature(sig, d, phi)
    want = (n - 1) / n * (lap / f.value - (n - 2) / (2 * (n - 1)) * rg)
    got = R.rho_of(n, d.norm2, phi, f)
    scale = (n - 1) / n * (abs(lap / f.value) + abs(rg)) + abs(d.norm2) * phi.value**2 * (
        abs(f.d2) + abs(f.d1 * phi.d1 / phi.value)) / f.value
    assert abs(got - want) <= 1e-10 * max(1.0, scale)


@given(st.integers(3, 7), st.floats(-2, 2), jets(), jets(), st.floats(0.01, 100.0))
def test_scaling_covariance(n, a2, phi, f, c):
    cf = Jet2(c * f.value, c * f.d1, c * f.d2)
    r1, r2 = R.edo_residual(n, phi, f) / f.value, R.edo_residual(n, phi, cf) / cf.value
    assert r1 == pytest.approx(r2, rel=1e-12, abs=1e-12 * max(1.0, R.edo_scale(n, phi, f) / f.value))
    rho1, rho2 = R.rho_of(n, a2, phi, f), R.rho_of(n, a2, phi, cf)
    assert rho1 == pytest.approx(rho2, rel=1e-11, abs=1e-11 * max(1.0, abs(rho1)))
    assert R.mu_of(n, a2, phi) == R.mu_of(n, a2, phi)


# --- Riccati -----------------------------------------------------------------


def test_riccati_rhs_examples():
    assert R.riccati_rhs(3, 0.0, 0.0, 0.0) == 0.0
    assert R.riccati_rhs(3, 1.0, 0.0, -1 + R2) == pytest.approx(0.0, abs=1e-15)
    for xi, y, n in ((0.3, 0.2, 3), (-1.0, 1.5, 5)):
        t = math.tan(xi)
        x, xp = -t, -1 / math.cos(xi) ** 2
        assert R.riccati_rhs(n, x, xp, y) == pytest.approx(-(n - 2) + 2 * y * t - y * y, rel=1e-13)


@given(st.integers(3, 7), jets(), jets())
def test_riccati_consistency(n, phi, f):
    f = Jet2(f.value, f.d1, R.lapse_second_derivative(n, phi, f.value, f.d1))
    x, xp = R.riccati_x(phi)
    y = f.d1 / f.value
    lhs = (f.d2 * f.value - f.d1**2) / f.value**2
    rhs = R.riccati_rhs(n, x, xp, y)
    scale = abs(f.d2 / f.value) + y * y + (n - 2) * (abs(xp) + x * x) + 2 * abs(x * y)
    assert abs(lhs - rhs) <= 1e-11 * max(1.0, scale)


def test_riccati_state_invariant():
    R.RiccatiState(0.0, 0.0, 1.5, 1.0, 0.5, 2.0)
    with pytest.raises(ValueError):
        R.RiccatiState(0.0, 0.0, 1.5, 1.0, 0.5, 3.0)


def _x_exp(xi):
    return 1.0, 0.0


def _y0_exp(xi):
    return -1 + R2, 0.0


def test_riccati_zero_correction():
    sol = R.riccati_general(3, _x_exp, _y0_exp, 0.0, math.inf, Interval(-1, 2))
    assert sol.y(0.7) == -1 + R2
    assert sol.state(0.7).u == 0.0


def test_riccati_rejects_bad_particular():
    with pytest.raises(InvalidParticularSolutionError):
        R.riccati_general(3, _x_exp, lambda xi: (0.3, 0.0), 0.0, 1.0, Interval(-1, 2))


def test_riccati_exponential_family_matches_closed_form():
    rp, rm = -1 + R2, -1 - R2
    f0, df0 = 1.0, 0.0
    cp = (df0 - rm * f0) / (rp - rm)
    cm = f0 - cp
    sol = R.riccati_general(3, _x_exp, _y0_exp, 0.0, 1.0 / (df0 / f0 - rp), Interval(-1, 2))
    assert not sol.poles
    for xi in np.linspace(-1, 2, 31):
        f = cp * math.exp(rp * xi) + cm * math.exp(rm * xi)
        df = cp * rp * math.exp(rp * xi) + cm * rm * math.exp(rm * xi)
        assert sol.y(xi) == pytest.approx(df / f, rel=1e-8, abs=1e-10)
        assert abs(sol.residual(xi)) < 1e-8


@pytest.mark.parametrize("a", [-0.4, 0.2, 0.6])
def test_riccati_trigonometric_family(a):
    def xprof(xi):
        return -math.tan(xi), -1 / math.cos(xi) ** 2

    def y0prof(xi):
        return math.tan(xi) - R2 * math.tan(R2 * xi), 1 / math.cos(xi) ** 2 - 2 / math.cos(R2 * xi) ** 2

    def z(xi):
        return -R2 * math.tan(a + R2 * xi) + math.tan(xi)

    # interval where both y0 and z are finite
    hi = min(math.pi / (2 * R2), (math.pi / 2 - a) / R2) - 0.05
    lo = max(-math.pi / (2 * R2), (-math.pi / 2 - a) / R2) + 0.05
    v0 = 1.0 / (z(0.0) - y0prof(0.0)[0])
    sol = R.riccati_general(3, xprof, y0prof, 0.0, v0, Interval(lo, hi), IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    for xi in np.linspace(lo, hi, 25):
        if abs(sol.v(xi)) < 1e-6:
            continue
        assert sol.y(xi) == pytest.approx(z(xi), rel=1e-7, abs=1e-8)


def test_riccati_equivalence_with_solve_f():
    span = Interval(-1.0, 2.0)
    prof = R.solve_f(3, expo, 0.0, 1.0, 0.3, span, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    sol = R.riccati_general(3, _x_exp, _y0_exp, 0.0, 1.0 / (0.3 - (-1 + R2)), span)
    for xi in np.linspace(-1, 2, 41):
        f, df = prof.state(xi)
        assert sol.y(xi) == pytest.approx(df / f, abs=1e-6)


def test_riccati_pole_is_event():
    # f = cos-like zero -> pole of u; x = 0, n = 2 gives y' = -y^2, y = 1/(xi - c)
    sol = R.riccati_general(2, lambda xi: (0.0, 0.0), lambda xi: (0.0, 0.0), 0.0, -1.0, Interval(-2.0, 2.0))
    # v' = 1, v(0) = -1 -> v = xi - 1
    assert sol.poles == [pytest.approx(1.0, abs=1e-10)]


# --- solve_f ---------------------------------------------------------------


def test_solve_f_power_law():
    prof = R.solve_f(3, recip, 1.0, 1.0, P1, Interval(1.0, 5.0))
    assert prof.status == "complete"
    for xi in np.linspace(1, 5, 41):
        assert prof(xi).value == pytest.approx(xi**P1, rel=1e-6)
        assert prof.defect(xi) < 1e-8


def test_solve_f_exponential():
    r = -1 + R2
    prof = R.solve_f(3, expo, 0.0, 1.0, r, Interval(0.0, 3.0))
    for xi in np.linspace(0, 3, 31):
        assert prof(xi).value == pytest.approx(math.exp(r * xi), rel=1e-6)


def test_solve_f_secant_residual():
    def sec2(xi):
        t = math.tan(xi / 2)
        v = 1 / math.cos(xi / 2) ** 2
        return Jet2(v, v * t, v * 0.5 * (2 * t * t + v))

    cfg = IntegratorConfig()
    prof = R.solve_f(3, sec2, 0.0, 1.0, 0.0, Interval(-2.5, 2.5), cfg)
    for xi in np.linspace(-2.5, 2.5, 51):
        jet = prof(xi)
        assert abs(R.edo_residual(3, sec2(xi), jet)) <= 10 * cfg.rel_tol * max(1.0, R.edo_scale(3, sec2(xi), jet))
        assert prof.defect(xi) < 1e-8


def test_solve_f_truncates_at_pole():
    prof = R.solve_f(3, cosine, 0.0, 1.0, 0.0, Interval(-1.5, 1.5))
    assert prof.truncated and prof.status == "truncated"
    assert prof.domain.hi < math.pi / (2 * R2) + 1e-6
    assert prof.domain.hi == pytest.approx(math.pi / (2 * R2), abs=1e-6)


def test_solve_f_step_budget():
    with pytest.raises(IntegrationError) as exc:
        R.solve_f(3, recip, 1.0, 1.0, P1, Interval(1.0, 50.0), IntegratorConfig(max_steps=3))
    assert exc.value.partial is not None


def test_solve_f_preconditions():
    with pytest.raises(DomainError):
        R.solve_f(3, recip, 1.0, -1.0, 0.0, Interval(1.0, 2.0))
    with pytest.raises(DomainError):
        R.solve_f(3, recip, 3.0, 1.0, 0.0, Interval(1.0, 2.0))


def _rk4_error(h):
    cfg = IntegratorConfig(method="rk4", max_step=h)
    prof = R.solve_f(3, recip, 1.0, 1.0, P1, Interval(1.0, 5.0), cfg)
    return max(abs(prof.state(x)[0] - x**P1) for x in (2.0, 3.0, 5.0))


def test_integrator_order_rk4():
    e1, e2 = _rk4_error(0.1), _rk4_error(0.05)
    assert e1 / e2 >= 2 ** (4 - 1)


def test_integrator_tolerance_convergence():
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        prof = R.solve_f(3, recip, 1.0, 1.0, P1, Interval(1.0, 5.0), IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-2))
        errs.append(max(abs(prof.state(x)[0] - x**P1) for x in np.linspace(1, 5, 17)))
    assert errs[0] > errs[1] > errs[2]


# --- vacuum / fluid fields ---------------------------------------------------


def _spec(phi, f, iv):
    return SpacetimeSpec(E3, Z, phi, f, iv)


def test_vacuum_residuals():
    one = lambda xi: Jet2(1.0, 0.0, 0.0)
    assert R.vacuum_residuals(_spec(one, one, Interval(-1, 1)), 0.2) == (0.0, 0.0)
    a, b = R.vacuum_residuals(_spec(recip, power(P1), Interval(0, math.inf)), 1.0)
    assert a > 0.1 and b > 0.1


def test_vacuum_when_fluid_vanishes():
    # lightlike alpha with an on-shell lapse: mu = rho = 0
    s = Signature.from_string("-++")
    d = Direction.from_alpha(s, (1.0, 1.0, 0.0))
    r = R2 - 1
    spec = SpacetimeSpec(s, d, expo, lambda xi: Jet2(math.exp(r * xi), r * math.exp(r * xi),
                                                      r * r * math.exp(r * xi)), Interval(-5, 5))
    phi, f = spec.jets(0.4)
    assert R.mu_of(3, d.norm2, phi) == 0.0 and R.rho_of(3, d.norm2, phi, f) == 0.0
    assert max(R.vacuum_residuals(spec, 0.4)) <= 1e-10


def test_energy_scan():
    fields = R.fluid_fields(_spec(recip, power(P1), Interval(0, math.inf)), np.linspace(0.5, 4, 20))
    summary = R.energy_condition_scan(fields)
    assert summary.fraction_dominant == 1.0 and summary.first_violation is None
    assert np.allclose(np.abs(fields.rho) / fields.mu, math.sqrt(17) - 4, rtol=1e-12)

    lin = _spec(lambda x: Jet2(x, 1.0, 0.0), lambda x: Jet2(1 / x, -1 / x**2, 2 / x**3), Interval(0, math.inf))
    fields = R.fluid_fields(lin, [0.5, 1.0, 2.0])
    assert np.allclose(fields.mu, -3) and np.allclose(fields.rho, 3)
    s = R.energy_condition_scan(fields)
    assert s.fraction_dominant == 0.0 and s.first_violation == 0.5

    edge = R.FluidFields.from_samples([0.0], [1.0], [1.0])
    assert not edge.dominant[0]


def test_fluid_fields_lengths():
    with pytest.raises(ValueError):
        R.FluidFields(np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(2, bool))
