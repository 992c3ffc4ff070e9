import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ratchetlab.model import (
    FlashingPhase,
    RatchetParams,
    drift_mu,
    parse_rational,
    phase_at,
    ratchet_invariant_cdf,
    ratchet_invariant_density,
    sawtooth_V,
)

P = RatchetParams(1, 4, 5.0)
P_G = RatchetParams.from_gamma(1, 4, 15 / 8)


@st.composite
def params(draw, lam_max=20.0):
    L = draw(st.integers(2, 9))
    l = draw(st.integers(1, L - 1).filter(lambda k: math.gcd(k, L) == 1 and 2 * k != L))
    lam = draw(st.floats(0.0, lam_max))
    return RatchetParams(l, L, lam)


@pytest.mark.parametrize("text,expected", [
    ("2.4", Fraction(12, 5)), ("1/4", Fraction(1, 4)), (2.4, Fraction(12, 5)),
    (3, Fraction(3)), (" 0.125 ", Fraction(1, 8)),
])
def test_parse_rational(text, expected):
    assert parse_rational(text) == expected


@pytest.mark.parametrize("bad", ["abc", "1/0", float("nan"), True])
def test_parse_rational_rejects(bad):
    with pytest.raises((ValueError, TypeError)):
        parse_rational(bad)


def test_gamma_lambda_consistency():
    assert P.gamma == pytest.approx(15 / 8, abs=0)
    assert P_G.lam == pytest.approx(5.0, rel=1e-15)
    q = RatchetParams.from_alpha("1/4", 4, 5.0)
    assert (q.l, q.L_period) == (1, 4)


@pytest.mark.parametrize("kwargs", [
    dict(l=0, L_period=4, lam=1.0), dict(l=4, L_period=4, lam=1.0),
    dict(l=2, L_period=4, lam=1.0), dict(l=1, L_period=4, lam=-1.0),
    dict(l=1, L_period=4, lam=1.0, tau1=0),
])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        RatchetParams(**kwargs)


def test_symmetric_sawtooth_is_flagged():
    with pytest.warns(UserWarning):
        RatchetParams(1, 2, 1.0)


def test_from_alpha_needs_integer_l():
    with pytest.raises(ValueError):
        RatchetParams.from_alpha("1/3", 4, 1.0)


def test_potential_values():
    assert sawtooth_V(0.0, P) == 0.0
    assert sawtooth_V(1.0, P) == 4.0
    assert sawtooth_V(3.0, P) == pytest.approx(4 / 3, rel=1e-15)
    assert sawtooth_V(4.0, P) == 0.0
    assert sawtooth_V(-4.0, P) == 0.0


def test_drift_values():
    assert drift_mu(0.5, P_G) == pytest.approx(-7.5, rel=1e-14)
    assert drift_mu(2.0, P_G) == pytest.approx(2.5, rel=1e-14)
    # right-continuous at the breakpoints
    assert drift_mu(1.0, P_G) == pytest.approx(2.5)
    assert drift_mu(0.0, P_G) == pytest.approx(-7.5)
    assert drift_mu(4.0, P_G) == pytest.approx(-7.5)


def test_array_input():
    xs = np.array([0.0, 1.0, 3.0])
    assert np.allclose(sawtooth_V(xs, P), [0.0, 4.0, 4 / 3])


@settings(max_examples=200, deadline=None)
@given(params(), st.floats(-50, 50), st.integers(-5, 5))
def test_periodicity(p, x, k):
    # integer shifts of exactly representable points keep the reduction exact
    x = round(x * 64) / 64
    y = x + k * p.L_period
    assert sawtooth_V(y, p) == sawtooth_V(x, p)
    assert drift_mu(y, p) == drift_mu(x, p)


@settings(max_examples=200, deadline=None)
@given(params(), st.floats(0, 1))
def test_drift_is_minus_gamma_grad_v(p, u):
    L = p.L_period
    a = float(p.alpha)
    x = u * L
    h = 1e-6
    if min(abs(x - a * L), x, L - x) < 10 * h:
        return
    fd = -p.gamma * (sawtooth_V(x + h, p) - sawtooth_V(x - h, p)) / (2 * h)
    assert drift_mu(x, p) == pytest.approx(fd, rel=1e-4, abs=1e-9)


def _piecewise_quad(f, p, upper=None):
    """Integrate over [0, upper] split at the kink alpha*L."""
    L = p.L_period
    upper = L if upper is None else upper
    k = float(p.alpha) * L
    parts = [(0.0, min(k, upper)), (k, upper)]
    return sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in parts if b > a)


@settings(max_examples=50, deadline=None)
@given(params())
def test_invariant_density_normalized_and_driftless(p):
    mass = _piecewise_quad(lambda x: ratchet_invariant_density(x, p), p)
    assert mass == pytest.approx(1.0, abs=1e-10)
    flux = _piecewise_quad(lambda x: drift_mu(x, p) * ratchet_invariant_density(x, p), p)
    assert abs(flux) < 1e-10


def test_invariant_density_extremes():
    xs = np.linspace(0, 4, 4001)
    d = ratchet_invariant_density(xs, P)
    assert d.argmax() in (0, 4000)
    assert xs[d.argmin()] == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(params(), st.floats(0, 1))
def test_invariant_cdf_matches_quadrature(p, u):
    x = u * p.L_period
    ref = _piecewise_quad(lambda s: ratchet_invariant_density(s, p), p, x)
    assert ratchet_invariant_cdf(x, p) == pytest.approx(ref, abs=1e-10)


def test_driftless_density_uniform():
    p = RatchetParams(1, 3, 0.0)
    assert ratchet_invariant_density(1.3, p) == pytest.approx(1 / 3)
    assert ratchet_invariant_cdf(1.5, p) == pytest.approx(0.5)


def test_phase_at():
    assert phase_at(0, P) is FlashingPhase.OFF
    assert phase_at("2.3", P) is FlashingPhase.OFF
    assert phase_at("2.4", P) is FlashingPhase.ON
    assert phase_at("4.79", P) is FlashingPhase.ON
    assert phase_at("4.8", P) is FlashingPhase.OFF
