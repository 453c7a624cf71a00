import math

import numpy as np
import pytest
from scipy import stats

from supmax.construction import (
    Affine,
    BigJumpSpec,
    Constant,
    Tabulated,
    cumulative_hazard,
    depth_at_time,
    log_grid,
)
from supmax.rng import RngPolicy
from supmax.simulation import (
    MeanEstimate,
    TailEstimate,
    estimate_tail,
    estimate_tails,
    estimate_truncated_mean_sup,
    grid_times,
    inject_jump_size_fault,
    jump_size,
    path_values,
    quadratic_variation,
    sample_jump,
    sample_jumps,
    sample_suprema,
    simulate_path,
)
from supmax.suite import conditional_depth_cdf, qv_refinement_errors

unit = BigJumpSpec(1.0, 1.0, Constant(1.0))
flat = BigJumpSpec(1.0, 1.0, Affine(16.0 / 9.0))
table_spec = BigJumpSpec(0.5, 2.0, Tabulated(((0.0, 0.5), (1.0, 1.0), (3.0, 4.0), (6.0, 4.5))))
N = 100_000


class FixedStream:
    def __init__(self, e):
        self.e = e

    def exponential(self):
        return self.e


def test_zero_exponential_jumps_immediately():
    t, depth = sample_jump(unit, FixedStream(0.0))
    assert (t, depth) == (0.0, 0.0)
    assert jump_size(unit, depth) == 1.0
    path = simulate_path(flat, FixedStream(0.0))
    assert path.jump_time == 0.0 and path.jump_size == flat.h(0.0)


def test_exponential_beyond_total_hazard_never_jumps():
    path = simulate_path(unit, FixedStream(math.log(2.0)), grid=(3.0, 0.5))
    assert not path.jumped
    assert path.supremum == 0.0 and path.jump_size == 0.0
    assert np.all(np.diff(path.grid_values) < 0)


def test_scalar_and_vector_sampling_agree(policy):
    t_vec, d_vec = sample_jumps(flat, policy, 10, 50)
    for k in range(50):
        t, d = sample_jump(flat, policy.stream(10 + k))
        assert t == t_vec[k] and d == d_vec[k]


def test_escape_frequency(policy):
    t, _ = sample_jumps(unit, policy, 0, N)
    assert abs(np.mean(np.isinf(t)) - 0.5) <= 0.005


@pytest.mark.parametrize("spec", [unit, flat, table_spec], ids=["const", "affine", "table"])
def test_survival_matches_quadrature(spec, policy):
    t, _ = sample_jumps(spec, policy, 0, N)
    for s in (0.5, 1.0, 2.0):
        exact = math.exp(-cumulative_hazard(depth_at_time(s, spec), spec))
        se = math.sqrt(exact * (1 - exact) / N)
        assert abs(np.mean(t >= s) - exact) <= 3 * se


@pytest.mark.parametrize("spec", [unit, flat], ids=["const", "affine"])
def test_jump_depth_ks_closed_form(spec, policy):
    _, depth = sample_jumps(spec, policy, 0, N)
    finite = depth[np.isfinite(depth)]
    res = stats.kstest(finite, conditional_depth_cdf(spec))
    assert res.statistic < stats.kstwo.ppf(0.99, len(finite))


def test_jump_depth_ks_tabulated_against_quadrature(policy):
    # The depth law has a 1/c tail, so tabulate the quadrature CDF on a log grid.
    spec = table_spec
    total = cumulative_hazard(math.inf, spec)
    grid = np.array(log_grid(1e-5, 1e9, 300))
    cdf_grid = np.array([-math.expm1(-cumulative_hazard(c, spec)) for c in grid]) / -math.expm1(-total)
    _, depth = sample_jumps(spec, policy, 0, N)
    finite = depth[np.isfinite(depth)]
    cdf = lambda x: np.interp(np.log(np.maximum(x, 1e-300)), np.log(grid), cdf_grid, left=0.0, right=1.0)
    res = stats.kstest(finite, cdf)
    assert res.statistic < stats.kstwo.ppf(0.99, len(finite))


def test_constant_jumps_land_exactly_on_target(policy):
    spec = BigJumpSpec(0.7, 1.3, Constant(2.5))
    for i in range(200):
        p = simulate_path(spec, policy.stream(i))
        if p.jumped:
            assert p.supremum == 2.5
            assert p.jump_size == pytest.approx(p.depth_at_jump + 2.5)


def test_affine_supremum_exceeds_offset(policy):
    seen = 0
    for i in range(300):
        p = simulate_path(flat, policy.stream(i))
        if p.jumped:
            seen += 1
            assert p.supremum == flat.h.b + p.depth_at_jump
            assert p.depth_at_jump == 0.0 or p.supremum > flat.h.b
    assert seen > 20


def test_grid_values_follow_the_path_description(policy):
    for i in range(50):
        p = simulate_path(flat, policy.stream(i), grid=(6.0, 0.25))
        before = p.grid_times < p.jump_time
        np.testing.assert_array_equal(p.grid_values[before], -depth_at_time_vec(p.grid_times[before]))
        after = ~before
        expected = flat.h(p.depth_at_jump) - flat.mu * (p.grid_times[after] - p.jump_time)
        np.testing.assert_allclose(p.grid_values[after], expected, rtol=0, atol=1e-12)
        assert p.grid_values.max() <= p.supremum + 1e-12


def depth_at_time_vec(ts):
    from supmax.simulation import profile_for

    return profile_for(flat).depth_at_time(ts)


def test_grid_does_not_change_supremum(policy):
    for i in range(100):
        a = simulate_path(unit, policy.stream(i))
        b = simulate_path(unit, policy.stream(i), grid=(0.5, 0.1))
        assert (a.jump_time, a.depth_at_jump, a.supremum) == (b.jump_time, b.depth_at_jump, b.supremum)
    sup = sample_suprema(unit, 100, policy)
    assert np.array_equal(sup, [simulate_path(unit, policy.stream(i), grid=(1.0, 0.1)).supremum for i in range(100)])


def test_grid_times():
    np.testing.assert_allclose(grid_times(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert len(grid_times(1.0, 0.1)) == 11
    with pytest.raises(ValueError):
        grid_times(1.0, 0.0)


def test_path_values_at_zero_is_positive_zero():
    v = path_values(unit, math.inf, math.inf, [0.0])
    assert v[0] == 0.0 and math.copysign(1.0, v[0]) == 1.0


# --- estimators -----------------------------------------------------------------


def test_tail_at_zero_is_one(policy):
    assert estimate_tail(unit, 0.0, 1000, policy).p_hat == 1.0


def test_example1_estimate(policy):
    assert abs(estimate_tail(unit, 1.0, N, policy).p_hat - 0.5) <= 0.01


def test_flat_tail_estimate(policy):
    assert abs(estimate_tail(flat, 1.0, N, policy).p_hat - 0.2) <= 0.01


def test_tail_estimate_record_invariants(policy):
    for est in estimate_tails(flat, [0, 0.5, 3, 30, 1e6], 5000, policy):
        assert 0 <= est.ci_low <= est.p_hat <= est.ci_high <= 1
        assert est.p_hat == est.successes / est.trials


def test_estimators_validate_inputs(policy):
    with pytest.raises(ValueError):
        estimate_tail(unit, -1.0, 10, policy)
    with pytest.raises(ValueError):
        estimate_tail(unit, 1.0, 0, policy)
    with pytest.raises(ValueError):
        estimate_truncated_mean_sup(unit, 0.0, 10, policy)
    with pytest.raises(ValueError):
        TailEstimate.from_counts(1.0, 0, 0)
    with pytest.raises(ValueError):
        MeanEstimate.from_values(np.array([]))


def test_results_do_not_depend_on_threads(policy):
    one = estimate_tails(flat, [1.0, 10.0], 150_000, policy, threads=1)
    many = estimate_tails(flat, [1.0, 10.0], 150_000, policy, threads=5)
    assert one == many
    assert estimate_truncated_mean_sup(flat, 50.0, 150_000, policy, 1) == estimate_truncated_mean_sup(
        flat, 50.0, 150_000, policy, 3
    )


def test_truncated_mean_vanishes_with_cap(policy):
    assert estimate_truncated_mean_sup(flat, 1e-9, 1000, policy).estimate <= 1e-9


def test_truncated_mean_growth(policy):
    ests = [estimate_truncated_mean_sup(flat, m, N, policy) for m in (10.0, 100.0, 1000.0)]
    assert ests[1].estimate >= math.log(101) / 5 - 3 * ests[1].se
    assert ests[0].ci_high < ests[1].ci_low
    assert ests[1].ci_high < ests[2].ci_low


def test_fault_injection_is_scoped(policy):
    clean = estimate_tail(unit, 1.0, 10_000, policy)
    with inject_jump_size_fault():
        broken = estimate_tail(unit, 1.0, 10_000, policy)
    assert broken.p_hat < clean.p_hat - 0.05
    assert estimate_tail(unit, 1.0, 10_000, policy) == clean


# --- quadratic variation --------------------------------------------------------


def _descent_only(policy):
    for i in range(1000):
        p = simulate_path(unit, policy.stream(i))
        if not p.jumped:
            return p
    raise AssertionError("no escaping replicate")


def test_qv_of_pure_descent_is_order_mesh(policy):
    p = _descent_only(policy)
    times = grid_times(4.0, 1e-3 / 8)
    values = path_values(unit, p.jump_time, p.depth_at_jump, times)
    qvs = [quadratic_variation(times, values, times[:: 2**k]).total for k in range(4)]
    # speed is at most 2, so each squared increment is below (2 mesh)^2
    for k, q in enumerate(qvs):
        mesh = 1e-3 / 8 * 2**k
        assert q <= 4.0 * 4.0 * mesh
    assert all(0.4 < a / b < 0.6 for a, b in zip(qvs, qvs[1:]))


def test_qv_of_jump_path_approaches_jump_squared(policy):
    path, errors = qv_refinement_errors(BigJumpSpec(1.0, 1.0, Constant(4.0)), policy)
    assert errors[-1] < 0.01 * path.jump_size**2
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(0.5 <= r <= 8.0 for r in ratios)


def test_qv_record_step_function():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    values = np.array([0.0, 1.0, -1.0, -1.0])
    rec = quadratic_variation(times, values, times)
    assert rec.at(-1.0) == 0.0
    assert rec.at(1.5) == 1.0
    assert rec.at(2.0) == 5.0
    assert rec.total == 5.0
    assert np.all(np.diff(rec.qv) >= 0)
    assert quadratic_variation(times, values, [0.0, 2.0]).total == 1.0


def test_qv_rejects_bad_partitions():
    times = np.linspace(0, 1, 11)
    values = np.zeros(11)
    with pytest.raises(ValueError):
        quadratic_variation(times, values, [0.5, 0.2])
    with pytest.raises(ValueError):
        quadratic_variation(times, values, [0.0, 0.05])
    with pytest.raises(ValueError):
        quadratic_variation(times, values[:5], times)
    with pytest.raises(ValueError):
        quadratic_variation(times, values, [])


def test_policy_seed_changes_results():
    a = estimate_tail(unit, 1.0, 10_000, RngPolicy(1))
    b = estimate_tail(unit, 1.0, 10_000, RngPolicy(2))
    assert a.successes != b.successes
