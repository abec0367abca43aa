import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from staticfluid.geometry import Direction, Jet2, Signature

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def signatures(draw, min_n=3, max_n=6):
    n = draw(st.integers(min_n, max_n))
    eps = draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n))
    if 1 not in eps:
        eps[draw(st.integers(0, n - 1))] = 1
    return Signature(tuple(eps))


@st.composite
def directions(draw, signature, allow_lightlike=True):
    comps = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
    alpha = draw(st.lists(comps, min_size=signature.n, max_size=signature.n))
    if max(abs(a) for a in alpha) < 1e-3:
        alpha[0] = 1.0
    d = Direction.from_alpha(signature, alpha)
    if not allow_lightlike and abs(d.norm2) < 1e-6:
        alpha[0] += 1.0
        d = Direction.from_alpha(signature, alpha)
    return d


def jets(lo=0.1, hi=10.0, spread=10.0):
    val = st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    der = st.floats(-spread, spread, allow_nan=False, allow_infinity=False)
    return st.builds(Jet2, val, der, der)


@st.composite
def geometry_inputs(draw):
    sig = draw(signatures())
    d = draw(directions(sig))
    return sig, d, draw(jets()), draw(jets())


def rel(a, b, floor=1.0):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / max(floor, float(np.max(np.abs(b))))


@pytest.fixture
def euclid3():
    return Signature.euclidean(3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
