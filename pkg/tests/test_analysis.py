import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwdecay.analysis import (
    ComplianceTracker,
    convergence_order,
    envelope_compliance,
    fit_power_law,
    trapping_halftime,
)
from rwdecay.evolve import Snapshot


def test_fit_exact_power():
    t = np.linspace(10, 1000, 300)
    fit = fit_power_law(t, t**-2.0, (10, 1000))
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    assert fit.residual_rms < 1e-12
    assert fit.n_points == 300


def test_fit_constant():
    t = np.linspace(1, 100, 50)
    assert fit_power_law(t, np.full_like(t, 3.0), (1, 100)).exponent == pytest.approx(0.0, abs=1e-13)


def test_fit_noisy():
    rng = np.random.default_rng(42)
    t = np.linspace(10, 1000, 400)
    v = 5 * t**-1.5 * (1 + 0.01 * rng.normal(size=t.size))
    fit = fit_power_law(t, v, (10, 1000))
    assert fit.exponent == pytest.approx(-1.5, abs=0.05)
    assert fit.amplitude == pytest.approx(5.0, rel=0.05)


def test_fit_rejects_bad_input():
    t = np.linspace(1, 100, 50)
    with pytest.raises(ValueError):
        fit_power_law(t, t**-1.0, (10, 50))
    with pytest.raises(ValueError):
        fit_power_law(t, -(t**-1.0), (1, 100))
    with pytest.raises(ValueError):
        fit_power_law(t[:5], t[:5], (1, 100))
    with pytest.raises(ValueError):
        fit_power_law(t, t, (0, 100))
    v = t**-1.0
    v[10] = np.nan
    with pytest.raises(ValueError):
        fit_power_law(t, v, (1, 100))


def test_fit_drops_floor_values():
    t = np.linspace(1, 100, 100)
    v = t**-3.0
    v[::2] = 0.0
    fit = fit_power_law(t, v, (1, 100))
    assert fit.n_points == 50
    assert fit.exponent == pytest.approx(-3.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.01, 100), st.floats(-4, 2))
def test_fit_scale_and_dilation_invariance(c, a, p):
    t = np.geomspace(5, 500, 60)
    v = t**p * (1 + 0.1 * np.sin(t))
    base = fit_power_law(t, v, (5, 500))
    scaled = fit_power_law(t, c * v, (5, 500))
    dilated = fit_power_law(a * t, v, (5 * a, 500 * a))
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-9)
    assert dilated.exponent == pytest.approx(base.exponent, abs=1e-9)


def test_convergence_order():
    assert convergence_order(4, 1, 0.25).order == pytest.approx(2.0)
    res = convergence_order(1, 1, 1)
    assert res.order == 0 and res.pairwise == (0.0, 0.0)
    assert convergence_order(8, 2, 1).pairwise == pytest.approx((2.0, 1.0))
    with pytest.raises(ValueError):
        convergence_order(1, 0, 1)


def test_envelope_compliance():
    x = np.linspace(-5, 5, 11)
    env = lambda t: np.full(x.size, 0.5)
    zero = [Snapshot(0.0, np.zeros(x.size), np.zeros(x.size))]
    assert envelope_compliance(zero, env) == 0.0
    equal = [Snapshot(1.0, np.full(x.size, 0.5), np.zeros(x.size))]
    assert envelope_compliance(equal, env) == 1.0
    tiny = [Snapshot(1.0, np.full(x.size, 1e-15), np.zeros(x.size))]
    assert envelope_compliance(tiny, lambda t: np.full(x.size, 1e-16)) == 0.0
    track = ComplianceTracker(env)
    for s in zero + equal:
        track(s)
    assert track.max_ratio == 1.0


def test_halftime_examples():
    t = np.linspace(0, 5, 5001)
    assert trapping_halftime(t, np.exp(-t), math.e) == pytest.approx(1.0, abs=1e-6)
    assert trapping_halftime(t, np.exp(t), 10) == math.inf
    with pytest.raises(ValueError):
        trapping_halftime([], [], 10)
    with pytest.raises(ValueError):
        trapping_halftime(t, np.exp(-t), 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.01, 1e3), st.floats(1.01, 1e3))
def test_halftime_monotone_in_factor(f1, f2):
    t = np.linspace(0, 20, 2001)
    v = np.exp(-t) * (1.5 + np.cos(3 * t))
    lo, hi = sorted((f1, f2))
    assert trapping_halftime(t, v, lo) <= trapping_halftime(t, v, hi)
