import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwdecay.geometry import SchwarzschildParams, build_grid, tortoise_from_radius
from rwdecay.potential import (
    CONDITION_NAMES,
    ModeSpec,
    critical_radius,
    critical_tortoise,
    default_constant_candidates,
    potential_derivative,
    potential_table,
    potential_value,
    regge_wheeler_family,
    search_constants,
    second_derivative_at_critical,
    synthetic_table,
    trapping_term,
    verify_conditions,
)

M1 = SchwarzschildParams(1.0)


def bracket_root(lam, m=1.0):
    # independent oracle: bisection on lam^2 r^2 - 3M(lam^2 - 1) r - 8M^2 over [2M, 3M]
    g = lambda r: lam * lam * r * r - 3 * m * (lam * lam - 1) * r - 8 * m * m
    lo, hi = 2.0 * m, 3.0 * m
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def q_of_x(lam, x):
    from rwdecay.geometry import horizon_gap_from_tortoise

    gap = horizon_gap_from_tortoise(x, M1)
    r = 2 + gap
    return potential_value(lam, r, M1, f=gap / r)


def test_mode_spec():
    assert ModeSpec(2).lam == math.sqrt(6)
    assert ModeSpec(3, -2).m == -2
    for l in range(50):
        assert ModeSpec(l).lam ** 2 == pytest.approx(l * (l + 1), rel=2.3e-16)
    with pytest.raises(ValueError):
        ModeSpec(-1)
    with pytest.raises(ValueError):
        ModeSpec(1, 2)


def test_potential_examples():
    assert potential_value(0.0, 3.0, M1) == pytest.approx(2 / 81, rel=1e-14)
    assert potential_value(1.0, 3.0, M1) == pytest.approx(5 / 81, rel=1e-14)
    assert potential_value(7.0, 2.0 + 1e-15, M1) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        potential_value(1.0, 2.0, M1)
    with pytest.raises(ValueError):
        potential_value(-1.0, 3.0, M1)


def test_derivative_examples():
    assert potential_derivative(1.0, 2 * math.sqrt(2), M1) == pytest.approx(0.0, abs=1e-16)
    assert potential_derivative(0.0, 8 / 3, M1) == pytest.approx(0.0, abs=1e-16)
    assert potential_derivative(1.0, 10.0, M1) < 0


@pytest.mark.parametrize("lam", [0.0, 1.0, math.sqrt(6), 10.0])
@pytest.mark.parametrize("r", [2.5, 3.0, 5.0, 20.0])
def test_derivative_matches_central_difference(lam, r):
    x = tortoise_from_radius(r, M1)
    exact = potential_derivative(lam, r, M1)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (q_of_x(lam, x + h) - q_of_x(lam, x - h)) / (2 * h)
        errs.append(abs(fd - exact))
    assert errs[1] < 1e-6 * max(1, abs(exact)) + 1e-12
    # second order: halving h cuts the error by about four
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_critical_radius_examples():
    assert critical_radius(0.0, M1) == 8 / 3
    assert critical_radius(1.0, M1) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert abs(critical_radius(1.0, M1) - bracket_root(1.0)) < 1e-12
    assert abs(critical_radius(1e-6, M1) - 8 / 3) < 1e-5
    assert abs(bracket_root(1e-6) - 8 / 3) < 1e-5
    d = 3 - critical_radius(1000.0, M1)
    assert 0 < d < 1e-5
    with pytest.raises(ValueError):
        critical_radius(-1.0, M1)


def test_critical_radius_sandwich_and_monotone():
    lams = np.linspace(0, 100, 200)
    r = np.array([critical_radius(l, M1) for l in lams])
    assert np.all(r >= 8 / 3) and np.all(r < 3)
    assert np.all(np.diff(r) > 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1e4))
def test_critical_radius_is_bracket_root(lam):
    assert critical_radius(lam, M1) == pytest.approx(bracket_root(lam), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1e3), st.floats(0.1, 10))
def test_critical_radius_scales_with_mass(lam, mass):
    assert critical_radius(lam, SchwarzschildParams(mass)) == pytest.approx(mass * critical_radius(lam, M1), rel=1e-13)


def test_critical_tortoise():
    expected = 2 * math.sqrt(2) + 2 * math.log(2 * math.sqrt(2) - 2)
    assert critical_tortoise(1.0, M1) == pytest.approx(expected, rel=1e-13)
    assert critical_tortoise(1.0, M1) == pytest.approx(2.451974311827, abs=1e-12)
    assert critical_tortoise(1e6, M1) == pytest.approx(3.0, abs=1e-9)
    x0 = [critical_tortoise(l, M1) for l in (0, 1, 2, 5, 10)]
    assert np.all(np.diff(x0) > 0)


def test_second_derivative_at_critical():
    x0 = critical_tortoise(1.0, M1)
    h = 1e-4
    fd = (q_of_x(1.0, x0 + h) - 2 * q_of_x(1.0, x0) + q_of_x(1.0, x0 - h)) / h**2
    exact = second_derivative_at_critical(1.0, M1)
    assert exact == pytest.approx(-0.0053616, abs=1e-7)
    assert abs(fd - exact) < 1e-6
    assert second_derivative_at_critical(0.0, M1) < 0
    ratio = second_derivative_at_critical(20.0, M1) / second_derivative_at_critical(10.0, M1)
    assert ratio == pytest.approx(4.0, rel=0.1)
    assert all(second_derivative_at_critical(l, M1) < 0 for l in np.linspace(0, 200, 50))


@pytest.fixture(scope="module")
def vgrid():
    return build_grid(-150, 150, 6001, M1)


def test_table_invariants(vgrid):
    for l in (0, 1, 2, 10, 20):
        t = potential_table(ModeSpec(l).lam, vgrid)
        assert np.all(t.q >= 0)
        s = np.sign(t.dq[t.dq != 0])
        xs = vgrid.x[t.dq != 0]
        changes = np.nonzero(np.diff(s))[0]
        assert len(changes) == 1 and s[0] > 0
        assert abs(xs[changes[0]] - t.x0) <= vgrid.dx
        assert 8 / 3 <= t.r_crit < 3
        with pytest.raises(ValueError):
            t.q[0] = 1.0


def test_family_passes_with_search(vgrid):
    fam = regge_wheeler_family(range(21), vgrid)
    res = search_constants(fam, vgrid)
    assert res.feasible
    assert res.report.passed
    assert res.C in default_constant_candidates()
    # nothing cheaper on the ladder works for any interval
    cheaper = [c for c in default_constant_candidates() if c < res.C]
    assert not search_constants(fam, vgrid, C_candidates=cheaper).feasible


def test_single_mode_family_feasible(vgrid):
    assert search_constants([potential_table(0.0, vgrid)], vgrid).feasible


def test_verify_monotone_in_c(vgrid):
    fam = regge_wheeler_family([0, 2, 7], vgrid)
    res = search_constants(fam, vgrid)
    for c in (res.C, 2 * res.C, 10 * res.C):
        assert verify_conditions(fam, c, res.b1, res.b2, vgrid).passed
    assert not verify_conditions(fam, res.C / 4, res.b1, res.b2, vgrid).passed


def test_synthetic_fixtures_fail_named_condition(vgrid):
    neg = synthetic_table(vgrid, lambda y: -np.ones_like(y), np.zeros_like)
    rep = verify_conditions([neg], 10.0, 1.0, 4.0, vgrid)
    assert not rep.passed and rep.failing()[0] == "(Positivity)"
    quad = synthetic_table(vgrid, lambda y: y * y, lambda y: 2 * y)
    rep = verify_conditions([quad], 10.0, 1.0, 4.0, vgrid)
    assert rep.flags()["(Positivity)"] and rep.failing()[0] == "(Repulsive 1)"
    res = search_constants([quad], vgrid)
    assert not res.feasible and "(Repulsive 1)" in res.report.failing()


def test_report_json_shape(vgrid):
    fam = regge_wheeler_family([0, 1], vgrid)
    rep = verify_conditions(fam, 1000.0, 0.5, 32.0, vgrid)
    doc = json.loads(rep.to_json())
    assert doc["constants"] == {"C": 1000.0, "b1": 0.5, "b2": 32.0}
    mode = doc["modes"][1]
    assert mode["lambda"] == pytest.approx(math.sqrt(2))
    assert [c["name"] for c in mode["conditions"]] == list(CONDITION_NAMES)
    assert set(mode["conditions"][0]) == {"name", "pass", "worst_margin", "worst_location"}


def test_verify_rejects_bad_arguments(vgrid):
    fam = regge_wheeler_family([0], vgrid)
    with pytest.raises(ValueError):
        verify_conditions(fam, 0.0, 1.0, 2.0, vgrid)
    with pytest.raises(ValueError):
        verify_conditions(fam, 1.0, 2.0, 1.0, vgrid)
    other = build_grid(-150, 150, 301, M1)
    with pytest.raises(ValueError):
        verify_conditions(fam, 1.0, 1.0, 2.0, other)
    with pytest.raises(ValueError):
        search_constants([], vgrid)


def test_trapping_term_examples(vgrid):
    for lam in (0.0, 1.0, math.sqrt(6), 10.0):
        x0 = critical_tortoise(lam, M1)
        assert trapping_term(lam, 0.0, M1) == pytest.approx(2 * q_of_x(lam, x0), rel=1e-14)
        assert trapping_term(lam, 0.0, M1) > 0
    assert trapping_term(1.0, 60.0, M1) < 0
    far_left = trapping_term(0.0, np.array([-60.0, -100.0, -140.0]), M1)
    assert np.all(far_left < 0) and np.all(np.abs(far_left) < 1e-10)
    assert np.all(np.diff(np.abs(far_left)) < 0)
    with pytest.raises(ValueError):
        trapping_term(1.0, 500.0, M1, grid=vgrid)
