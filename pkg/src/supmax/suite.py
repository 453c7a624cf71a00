"""The verification suite: one check per acceptance criterion.

Each ``check_*`` function is deterministic for a given seed and returns a
:class:`CheckResult`. ``run_suite`` drives them for the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .construction import (
    Affine,
    BigJumpSpec,
    Constant,
    affine_cumulative_hazard,
    bound_tail,
    constant_cumulative_hazard,
    constant_time_of_depth,
    cumulative_hazard,
    example1_tail,
    example2_b_star,
    example2_tail,
    time_of_depth,
    uniform_lower_bound,
)
from .discrete import (
    choose_mu_for_eps,
    estimate_chain_tail,
    make_discrete_params,
    random_walk_sup,
)
from .rng import RngPolicy
from .simulation import (
    estimate_tails,
    estimate_truncated_mean_sup,
    grid_times,
    path_values,
    quadratic_variation,
    sample_jumps,
    simulate_path,
)
from .verification import check_value_identities, verify_tail_upper

SCHEMA_VERSION = 1

LATTICE_MU = (0.5, 1.0, 2.0)
LATTICE_SIGMA2 = (0.5, 1.0, 2.0)
LATTICE_CONST_A = (0.5, 1.0, 4.0)
LATTICE_AFFINE_B = (0.5, 16.0 / 9.0, 4.0)
LATTICE_LEVELS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0)


def sig6(x):
    """Round floats to 6 significant digits for stable, readable records."""
    if isinstance(x, float):
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.6g}")
    if isinstance(x, dict):
        return {k: sig6(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig6(v) for v in x]
    if isinstance(x, np.generic):
        return sig6(x.item())
    return x


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "criterion": self.criterion,
            "check": self.name,
            "verdict": self.verdict,
            "details": sig6(self.details),
        }


@dataclass(frozen=True)
class SuiteConfig:
    n: int = 100_000
    walk_n: int = 100_000
    lattice_n: int = 100_000


# The smoke suite runs every check at the sample sizes the criteria name;
# the full suite repeats them with ten times the replicates.
SMOKE = SuiteConfig()
FULL = SuiteConfig(n=1_000_000, walk_n=1_000_000, lattice_n=1_000_000)


# ---------------------------------------------------------------------------


def check_constant_tightness(policy: RngPolicy, n: int = 100_000, threads=None) -> CheckResult:
    rows, ok = [], True
    for mu, s2, a in ((1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (2.0, 1.0, 0.5)):
        est = estimate_tails(BigJumpSpec(mu, s2, Constant(a)), [a], n, policy, threads)[0]
        exact = example1_tail(mu, s2, a)
        good = abs(est.p_hat - exact) <= 0.01
        ok &= good
        rows.append({"mu": mu, "sigma2": s2, "a": a, "p_hat": est.p_hat, "exact": exact, "pass": good})
    return CheckResult(1, "constant_target_tightness", ok, {"n": n, "tolerance": 0.01, "rows": rows})


def check_uniform_lower_bound(policy: RngPolicy, n: int = 100_000, threads=None) -> CheckResult:
    mu = s2 = 1.0
    b = example2_b_star(mu, s2)
    levels = [0.0, 1.0, b, 5.0, 10.0, 20.0, 100.0]
    spec = BigJumpSpec(mu, s2, Affine(b))
    rows, ok = [], True
    for est in estimate_tails(spec, levels, n, policy, threads):
        a = est.level_a
        lb = uniform_lower_bound(spec.gamma, a)
        good = est.ci_high >= lb
        if 0 < a <= b:
            good &= abs(est.p_hat - 0.2) <= 0.01
        if a == 10.0:
            good &= abs(est.p_hat - example2_tail(mu, s2, b, a)) <= 0.005
        ok &= good
        rows.append({"a": a, "p_hat": est.p_hat, "ci_high": est.ci_high, "lower_bound": lb,
                     "analytic": example2_tail(mu, s2, b, a), "pass": good})
    return CheckResult(2, "uniform_lower_bound", ok, {"n": n, "b": b, "rows": rows})


def lattice_specs(mus=LATTICE_MU, sigma2s=LATTICE_SIGMA2):
    for mu in mus:
        for s2 in sigma2s:
            for a in LATTICE_CONST_A:
                yield BigJumpSpec(mu, s2, Constant(a))
            for b in LATTICE_AFFINE_B:
                yield BigJumpSpec(mu, s2, Affine(b))


def check_upper_bound_compliance(
    policy: RngPolicy, n: int = 100_000, threads=None, mus=LATTICE_MU, sigma2s=LATTICE_SIGMA2
) -> CheckResult:
    violations, checked = [], 0
    for spec in lattice_specs(mus, sigma2s):
        for est in estimate_tails(spec, LATTICE_LEVELS, n, policy, threads):
            checked += 1
            if verify_tail_upper(est, spec.gamma).value != "PASS":
                violations.append({"mu": spec.mu, "sigma2": spec.sigma2, "family": spec.h.family,
                                   "h_param": spec.h.param, "a": est.level_a,
                                   "ci_low": est.ci_low, "bound": bound_tail(spec.gamma, est.level_a)})
    return CheckResult(3, "upper_bound_compliance", not violations,
                       {"n": n, "estimates": checked, "violations": violations})


def conditional_depth_cdf(spec: BigJumpSpec) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of ``y(T)`` given ``T < inf``, from the families' closed-form hazards."""
    mu, s2 = spec.mu, spec.sigma2
    if isinstance(spec.h, Constant):
        a = spec.h.a
        ih = np.vectorize(lambda c: constant_cumulative_hazard(mu, s2, a, c))
    elif isinstance(spec.h, Affine):
        b = spec.h.b
        ih = np.vectorize(lambda c: affine_cumulative_hazard(mu, s2, b, c))
    else:
        raise ValueError("closed-form CDF only for constant and affine targets")
    escape = math.exp(-ih(math.inf))

    def cdf(c):
        return -np.expm1(-ih(np.asarray(c, dtype=float))) / (1.0 - escape)

    return cdf


def check_jump_law(policy: RngPolicy, n: int = 100_000) -> CheckResult:
    rows, ok = [], True
    for spec in (BigJumpSpec(1.0, 1.0, Constant(1.0)), BigJumpSpec(1.0, 1.0, Affine(16.0 / 9.0))):
        _, depth = sample_jumps(spec, policy, 0, n)
        finite = depth[np.isfinite(depth)]
        res = stats.kstest(finite, conditional_depth_cdf(spec))
        critical = float(stats.kstwo.ppf(0.99, len(finite)))
        good = res.statistic < critical
        ok &= good
        rows.append({"family": spec.h.family, "h_param": spec.h.param, "jumps": len(finite),
                     "ks": float(res.statistic), "critical_1pct": critical, "pass": good})
    return CheckResult(4, "jump_law_ks", ok, {"n": n, "rows": rows})


def check_discrete_construction(policy: RngPolicy, n: int = 100_000, threads=None) -> CheckResult:
    gamma, a, eps = 1.0, 1.0, 0.05
    mu_t = choose_mu_for_eps(gamma, a, eps)
    params = make_discrete_params(gamma, a, mu_t)
    est = estimate_chain_tail(params, n, policy, threads=threads)
    se = est.se
    lower = bound_tail(gamma, a) - eps
    ok_eps = lower - 3 * se <= est.p_hat <= bound_tail(gamma, a) + 3 * se
    demo = make_discrete_params(gamma, a, 0.25)
    demo_est = estimate_chain_tail(demo, n, policy, threads=threads)
    ok_demo = abs(demo_est.p_hat - demo.hit_probability) <= 0.01
    return CheckResult(5, "discrete_construction", ok_eps and ok_demo, {
        "n": n, "mu_tilde": mu_t, "sigma2_tilde": params.sigma2_tilde, "a_tilde": params.a_tilde,
        "guarantee": params.hit_probability, "p_hat": est.p_hat, "se": se, "eps_pass": ok_eps,
        "demo_mu_tilde": 0.25, "demo_p_hat": demo_est.p_hat, "demo_exact": demo.hit_probability,
        "demo_pass": ok_demo,
    })


def check_kingman(policy: RngPolicy, n: int = 100_000, threads=None) -> CheckResult:
    res = random_walk_sup(0.45, 10**7, n, policy, threads=threads)
    m = res.mean
    ok_mean = abs(m.estimate - 4.5) <= 0.1
    ok_bound = m.estimate + 3 * m.se <= res.kingman_mean_bound
    return CheckResult(6, "kingman_random_walk", ok_mean and ok_bound and res.capped == 0, {
        "n": n, "p_up": 0.45, "gamma": res.gamma, "estimate": m.estimate, "se": m.se,
        "exact": res.exact_mean, "kingman_bound": res.kingman_mean_bound, "capped": res.capped,
    })


def check_mean_divergence(policy: RngPolicy, n: int = 100_000, threads=None) -> CheckResult:
    spec = BigJumpSpec(1.0, 1.0, Affine(example2_b_star(1.0, 1.0)))
    rows, ok, prev = [], True, None
    for cap in (10.0, 100.0, 1000.0):
        est = estimate_truncated_mean_sup(spec, cap, n, policy, threads)
        floor = math.log1p(cap) / 5.0
        good = est.estimate >= floor - 3 * est.se
        if prev is not None:
            good &= prev.ci_high < est.ci_low
        ok &= good
        prev = est
        rows.append({"cap": cap, "estimate": est.estimate, "se": est.se, "floor": floor, "pass": good})
    return CheckResult(7, "mean_divergence", ok, {"n": n, "rows": rows})


def qv_refinement_errors(spec: BigJumpSpec, policy: RngPolicy, levels: int = 5, coarse: float = 0.01):
    """Errors ``|QV - jump_size^2|`` on meshes ``coarse / 2**k`` for the first
    replicate that jumps before ``t = 4``."""
    for i in range(10_000):
        path = simulate_path(spec, policy.stream(i))
        if path.jumped and path.jump_time <= 4.0:
            break
    else:
        raise RuntimeError("no early jump found")
    fine = coarse / 2 ** (levels - 1)
    horizon = math.ceil(path.jump_time) + 1.0
    times = grid_times(horizon, fine)
    values = path_values(spec, path.jump_time, path.depth_at_jump, times)
    errors = []
    for k in range(levels):
        stride = 2 ** (levels - 1 - k)
        part = times[::stride]
        qv = quadratic_variation(times, values, part).total
        errors.append(abs(qv - path.jump_size**2))
    return path, errors


def check_numerical_identities(policy: RngPolicy) -> CheckResult:
    ident_ok = all(check_value_identities(g, [0.0, 0.1, 1.0, 10.0, 100.0]).passed
                   for g in (0.0, 0.5, 1.0, 4.0))

    worst_time = 0.0
    for mu in LATTICE_MU:
        for s2 in LATTICE_SIGMA2:
            for a in LATTICE_CONST_A:
                spec = BigJumpSpec(mu, s2, Constant(a))
                for c in (0.1, 1.0, 10.0):
                    exact = constant_time_of_depth(mu, s2, a, c)
                    worst_time = max(worst_time, abs(time_of_depth(c, spec) - exact) / exact)
    time_ok = worst_time <= 1e-8

    worst_hazard = 0.0
    for mu in LATTICE_MU:
        for s2 in LATTICE_SIGMA2:
            for b in LATTICE_AFFINE_B:
                spec = BigJumpSpec(mu, s2, Affine(b))
                for c in (0.1, 1.0, 10.0, math.inf):
                    exact = affine_cumulative_hazard(mu, s2, b, c)
                    worst_hazard = max(worst_hazard, abs(cumulative_hazard(c, spec) - exact))
    hazard_ok = worst_hazard <= 1e-10

    _, errors = qv_refinement_errors(BigJumpSpec(1.0, 1.0, Constant(4.0)), policy)
    ratios = [e1 / e2 for e1, e2 in zip(errors, errors[1:])]
    qv_ok = all(0.5 <= r <= 8.0 for r in ratios)

    return CheckResult(8, "numerical_identities", ident_ok and time_ok and hazard_ok and qv_ok, {
        "value_identities": ident_ok, "time_of_depth_max_rel_err": worst_time,
        "cumulative_hazard_max_abs_err": worst_hazard, "qv_errors": errors, "qv_ratios": ratios,
        "qv_pass": qv_ok,
    })


def check_thread_independence(policy: RngPolicy, n: int = 100_000) -> CheckResult:
    spec = BigJumpSpec(1.0, 1.0, Affine(16.0 / 9.0))
    one = estimate_tails(spec, [1.0, 10.0], n, policy, threads=1)
    many = estimate_tails(spec, [1.0, 10.0], n, policy, threads=4)
    m1 = estimate_truncated_mean_sup(spec, 100.0, n, policy, threads=1)
    m4 = estimate_truncated_mean_sup(spec, 100.0, n, policy, threads=4)
    same = one == many and m1 == m4
    return CheckResult(9, "thread_independence", same, {"n": n})


def run_suite(policy: RngPolicy, config: SuiteConfig = FULL, threads=None) -> list[CheckResult]:
    return [
        check_constant_tightness(policy, config.n, threads),
        check_uniform_lower_bound(policy, config.n, threads),
        check_upper_bound_compliance(policy, config.lattice_n, threads),
        check_jump_law(policy, config.n),
        check_discrete_construction(policy, config.n, threads),
        check_kingman(policy, config.walk_n, threads),
        check_mean_divergence(policy, config.n, threads),
        check_numerical_identities(policy),
        check_thread_independence(policy, config.n),
    ]
