import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hazard_oracle, ode_depth, time_oracle, trapezoid_fixed, w_affine, w_const
from supmax.construction import (
    Affine,
    BigJumpSpec,
    Constant,
    DescentProfile,
    Tabulated,
    analytic_tail,
    bound_tail,
    cumulative_hazard,
    depth_at_time,
    drift_rate,
    example1_tail,
    example2_b_star,
    example2_tail,
    hazard,
    jump_tail,
    kingman_bounds,
    log_grid,
    make_spec,
    tail_inequality_holds,
    time_of_depth,
    uniform_lower_bound,
)
from supmax.errors import InfeasibleSpecError

unit = BigJumpSpec(1.0, 1.0, Constant(1.0))
b_star = 16.0 / 9.0
flat = BigJumpSpec(1.0, 1.0, Affine(b_star))
table = Tabulated(((0.0, 0.5), (1.0, 1.0), (3.0, 4.0), (6.0, 4.5)))


# --- bounds -------------------------------------------------------------------


@pytest.mark.parametrize("gamma,a,expected", [(1, 1, 0.5), (7.3, 0, 1.0), (0.5, 4, 1 / 3)])
def test_bound_tail_examples(gamma, a, expected):
    assert bound_tail(gamma, a) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("gamma,a,expected", [(1, 0, 0.2), (1, 10, 1 / 55), (0, 5, 0.2)])
def test_uniform_lower_bound_examples(gamma, a, expected):
    assert uniform_lower_bound(gamma, a) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "gamma,a,expected", [(0.1, 10, (5.0, 0.5)), (1, 0.25, (0.5, 1.0)), (0.5, 4, (1.0, 0.25))]
)
def test_kingman_bounds_examples(gamma, a, expected):
    assert kingman_bounds(gamma, a) == pytest.approx(expected, rel=1e-15)


def test_bounds_reject_negative_inputs():
    with pytest.raises(ValueError):
        bound_tail(-1.0, 1.0)
    with pytest.raises(ValueError):
        uniform_lower_bound(1.0, -1.0)
    with pytest.raises(ValueError):
        kingman_bounds(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(gamma=st.floats(1e-3, 1e3), a=st.floats(0, 1e3), step=st.floats(1e-3, 10))
def test_bound_tail_strictly_decreasing_and_convex(gamma, a, step):
    f0, f1, f2 = (bound_tail(gamma, a + k * step) for k in range(3))
    assert f1 < f0
    assert f0 - 2 * f1 + f2 >= -1e-15


def test_bound_tail_second_differences_on_grid():
    xs = np.linspace(0, 50, 501)
    f = np.array([bound_tail(0.7, x) for x in xs])
    assert np.all(np.diff(f) < 0)
    assert np.all(np.diff(f, 2) >= -1e-15)


# --- specs and families -----------------------------------------------------------


def test_constant_zero_target_is_rejected():
    with pytest.raises(InfeasibleSpecError):
        BigJumpSpec(1.0, 1.0, Constant(0.0))


@pytest.mark.parametrize("mu,sigma2", [(0, 1), (1, 0), (-1, 1), (math.nan, 1), (1, math.inf)])
def test_spec_rejects_bad_rates(mu, sigma2):
    with pytest.raises(InfeasibleSpecError):
        BigJumpSpec(mu, sigma2, Constant(1.0))


def test_gamma_is_derived():
    spec = BigJumpSpec(2.0, 0.5, Affine(1.0))
    assert spec.gamma == 4.0


@pytest.mark.parametrize(
    "knots",
    [(), ((0, 1), (0, 2)), ((0, 2), (1, 1)), ((-1, 1),), ((0, -1),), ((0, math.nan),)],
)
def test_tabulated_validation(knots):
    with pytest.raises(InfeasibleSpecError):
        Tabulated(knots)


def test_tabulated_is_nondecreasing_and_flat_outside():
    ys = np.linspace(0, 10, 1001)
    hs = table(ys)
    assert np.all(np.diff(hs) >= 0)
    assert table(100.0) == 4.5
    assert table(2.0) == pytest.approx(2.5)


def test_tabulated_from_file(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("# depth, target\ny,h\n0, 0.5\n1,1.0  # knee\n\n3 4\n6,4.5\n")
    assert Tabulated.from_file(p) == table


def test_tabulated_from_file_rejects_garbage(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("0,1\nfoo,bar\n")
    with pytest.raises(InfeasibleSpecError):
        Tabulated.from_file(p)


def test_depth_for_level():
    assert Constant(2.0).depth_for_level(2.0) == 0.0
    assert Constant(2.0).depth_for_level(2.5) == math.inf
    assert Affine(1.0).depth_for_level(3.5) == 2.5
    assert table.depth_for_level(2.5) == pytest.approx(2.0)
    assert table.depth_for_level(5.0) == math.inf


def test_make_spec():
    assert make_spec(1, 1, 2.0, "const") == BigJumpSpec(1, 1, Constant(2.0))
    assert make_spec(1, 1, Affine(3.0)).h == Affine(3.0)
    with pytest.raises(ValueError):
        make_spec(1, 1, 2.0, "cubic")


# --- rates -----------------------------------------------------------------------


def test_drift_rate_examples():
    assert drift_rate(0.0, unit) == 2.0
    assert drift_rate(1e9, unit) - 1.0 < 1e-6
    assert drift_rate(1.0, BigJumpSpec(1.0, 4.0, Affine(2.0))) == 2.0


def test_hazard_examples():
    assert hazard(0.0, unit) == 1.0
    assert hazard(1.0, BigJumpSpec(1.0, 4.0, Affine(2.0))) == 0.25
    assert hazard(3.0, unit) == 1 / 16


def test_rates_reject_negative_depth():
    with pytest.raises(ValueError):
        drift_rate(-1.0, unit)


# --- time and depth ---------------------------------------------------------------


def test_time_of_depth_examples():
    assert time_of_depth(0.0, unit) == 0.0
    assert time_of_depth(1.0, unit) == pytest.approx(1.0 - math.log(1.5), rel=1e-12)


def test_time_of_depth_affine_against_trapezoid():
    spec = BigJumpSpec(1.0, 1.0, Affine(1.0))
    oracle = trapezoid_fixed(lambda y: (2 * y + 1) / (2 * y + 1 + 1.0), 0.0, 2.0)
    assert time_of_depth(2.0, spec) == pytest.approx(oracle, rel=1e-8)


def test_depth_at_time_examples():
    assert depth_at_time(0.0, unit) == 0.0
    for c in (0.1, 1.0, 10.0):
        assert depth_at_time(time_of_depth(c, unit), unit) == pytest.approx(c, abs=1e-9)


def test_depth_at_time_long_run_slope():
    prof = DescentProfile(unit)
    ratio = prof.depth_at_time(1e6) / 1e6
    assert 1.0 <= ratio <= 1.01


@pytest.mark.parametrize("spec", [unit, flat, BigJumpSpec(0.5, 2.0, table)], ids=["const", "affine", "table"])
def test_depth_at_time_against_ode(spec):
    w = lambda y: y + spec.h(y)
    oracle = ode_depth(spec.mu, spec.sigma2, w, 2.0, steps=20_000)
    assert depth_at_time(2.0, spec) == pytest.approx(oracle, rel=1e-9)
    assert DescentProfile(spec).depth_at_time(2.0) == pytest.approx(oracle, rel=1e-9)


# --- cumulative hazard ------------------------------------------------------------


def test_cumulative_hazard_examples():
    assert cumulative_hazard(0.0, unit) == 0.0
    assert cumulative_hazard(math.inf, flat) == pytest.approx(math.log(1.25), rel=1e-10)
    assert cumulative_hazard(math.inf, unit) == pytest.approx(math.log(2.0), rel=1e-10)


def _lattice():
    """20 (spec, depth, knots) combinations spanning the three families."""
    rows = []
    mus = (0.5, 1.0, 2.0, 1.0, 0.5)
    s2s = (1.0, 0.5, 2.0, 1.0, 2.0)
    cs = (0.1, 1.0, 5.0, 20.0)
    for k in range(20):
        mu, s2, c = mus[k % 5], s2s[(k // 5 + k) % 5], cs[k % 4]
        fam = k % 3
        if fam == 0:
            a = (0.5, 1.0, 4.0)[(k // 3) % 3]
            rows.append((BigJumpSpec(mu, s2, Constant(a)), c, ()))
        elif fam == 1:
            rows.append((BigJumpSpec(mu, s2, Affine(0.5 + 0.2 * k)), c, ()))
        else:
            rows.append((BigJumpSpec(mu, s2, table), c, (1.0, 3.0, 6.0)))
    return rows


@pytest.mark.parametrize("spec,c,knots", _lattice())
def test_quadrature_and_exact_routes_match_fixed_simpson(spec, c, knots):
    w = lambda y: y + spec.h(y)
    t_ref = time_oracle(spec.mu, spec.sigma2, w, c, knots)
    i_ref = hazard_oracle(spec.mu, spec.sigma2, w, c, knots)
    prof = DescentProfile(spec)
    assert time_of_depth(c, spec) == pytest.approx(t_ref, rel=1e-8)
    assert prof.time_of_depth(c) == pytest.approx(t_ref, rel=1e-8)
    assert cumulative_hazard(c, spec) == pytest.approx(i_ref, rel=1e-8)
    assert prof.cumulative_hazard(c) == pytest.approx(i_ref, rel=1e-8)


@pytest.mark.parametrize("mu,s2", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)])
def test_total_hazard_against_mapped_simpson(mu, s2):
    for w, h in ((w_const(1.5), Constant(1.5)), (w_affine(0.7), Affine(0.7))):
        ref = hazard_oracle(mu, s2, w, math.inf, panels=200_000)
        spec = BigJumpSpec(mu, s2, h)
        assert cumulative_hazard(math.inf, spec) == pytest.approx(ref, rel=1e-8)
        assert DescentProfile(spec).total_hazard == pytest.approx(ref, rel=1e-8)


def test_affine_hazard_matches_closed_form():
    from supmax.construction import affine_cumulative_hazard

    for c in (0.0, 0.3, 2.0, 40.0, math.inf):
        assert cumulative_hazard(c, flat) == pytest.approx(
            affine_cumulative_hazard(1.0, 1.0, b_star, c), abs=1e-10
        )


def test_depth_for_hazard_inverts_and_escapes():
    for spec in (unit, flat, BigJumpSpec(0.5, 2.0, table)):
        prof = DescentProfile(spec)
        cs = np.array([0.0, 0.2, 1.0, 2.5, 7.0, 50.0])
        back = prof.depth_for_hazard(prof.cumulative_hazard(cs))
        np.testing.assert_allclose(back, cs, rtol=1e-9, atol=1e-12)
        assert prof.depth_for_hazard(prof.total_hazard) == math.inf
        assert prof.depth_for_hazard(prof.total_hazard + 1.0) == math.inf


# --- closed-form tails ------------------------------------------------------------


@pytest.mark.parametrize("args,expected", [((1, 1, 1), 0.5), ((1, 2, 3), 0.4), ((1, 1, 0), 1.0)])
def test_example1_tail(args, expected):
    assert example1_tail(*args) == pytest.approx(expected, rel=1e-15)


def test_example2_tail_values():
    assert example2_tail(1, 1, b_star, 1.0) == pytest.approx(0.2, rel=1e-14)
    expected = 0.8 * (math.sqrt(1 + 1 / (20 - b_star)) - 1)
    assert example2_tail(1, 1, b_star, 10.0) == pytest.approx(expected, rel=1e-14)
    assert example2_tail(1, 1, b_star, 10.0) == pytest.approx(0.021658, abs=5e-7)


def test_example2_tail_continuous_at_b():
    b = 2.3
    left = example2_tail(1.3, 0.7, b, b)
    right = example2_tail(1.3, 0.7, b, math.nextafter(b, math.inf))
    assert abs(left - right) < 1e-12


def test_b_star_examples():
    assert example2_b_star(1, 1) == pytest.approx(16 / 9)
    assert example2_b_star(2, 1) == pytest.approx(8 / 9)


def test_affine_tail_matches_survival_law():
    for a in (2.0, 5.0, 10.0, 100.0):
        assert jump_tail(flat, a) == pytest.approx(example2_tail(1, 1, b_star, a), rel=1e-9)


def test_tabulated_tail_matches_exact_profile():
    spec = BigJumpSpec(0.5, 2.0, table)
    prof = DescentProfile(spec)
    for a in (0.75, 2.5, 4.2):
        c = table.depth_for_level(a)
        exact = math.exp(-prof.cumulative_hazard(c)) - math.exp(-prof.total_hazard)
        assert jump_tail(spec, a) == pytest.approx(exact, rel=1e-9)
    assert jump_tail(spec, 5.0) == 0.0
    assert jump_tail(spec, 0.0) == 1.0


def test_analytic_tail_dispatch():
    assert analytic_tail(flat, 3.0) == example2_tail(1, 1, b_star, 3.0)
    assert analytic_tail(unit, 1.0) == pytest.approx(0.5, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0.1, 10), s2=st.floats(0.1, 10), a=st.floats(0.05, 50))
def test_constant_family_attains_bound(mu, s2, a):
    spec = BigJumpSpec(mu, s2, Constant(a))
    assert abs(jump_tail(spec, a) - bound_tail(spec.gamma, a)) < 1e-9
    assert abs(example1_tail(mu, s2, a) - bound_tail(spec.gamma, a)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(0.1, 10), s2=st.floats(0.1, 10), b=st.floats(0.05, 50), a=st.floats(0, 1e4))
def test_affine_tail_below_bound(mu, s2, b, a):
    assert example2_tail(mu, s2, b, a) <= bound_tail(mu / s2, a) + 1e-15


@settings(max_examples=40, deadline=None)
@given(
    mu=st.floats(0.2, 5),
    s2=st.floats(0.2, 5),
    steps=st.lists(st.tuples(st.floats(0.1, 3), st.floats(0, 3)), min_size=1, max_size=4),
    h0=st.floats(0.1, 3),
    a=st.floats(0, 20),
)
def test_tabulated_tail_below_bound(mu, s2, steps, h0, a):
    knots, y, h = [(0.0, h0)], 0.0, h0
    for dy, dh in steps:
        y, h = y + dy, h + dh
        knots.append((y, h))
    spec = BigJumpSpec(mu, s2, Tabulated(tuple(knots)))
    assert jump_tail(spec, a) <= bound_tail(spec.gamma, a) + 1e-9


@pytest.mark.parametrize("mu,s2", [(1, 1), (2, 1), (0.5, 3)])
def test_uniform_lower_bound_on_log_grid(mu, s2):
    b = example2_b_star(mu, s2)
    gamma = mu / s2
    for a in [0.0] + log_grid(1e-6 * b, 1e4 * b, 400):
        # equality holds at a = 0, so allow rounding there
        assert example2_tail(mu, s2, b, a) >= uniform_lower_bound(gamma, a) * (1 - 1e-14)


def test_scalar_inequality_on_log_grid():
    assert all(tail_inequality_holds(al) for al in log_grid(1e-3, 1e3, 601))
