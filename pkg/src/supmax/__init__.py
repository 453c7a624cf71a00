"""Tail bounds for the supremum of drifting processes, with exact big-jump
constructions that attain them and Monte Carlo checks of both."""

from .construction import (
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
    make_spec,
    time_of_depth,
    uniform_lower_bound,
)
from .discrete import (
    DiscreteConstructionParams,
    check_discrete_condition,
    choose_mu_for_eps,
    estimate_chain_tail,
    make_discrete_params,
    random_walk_sup,
    simulate_sampled_chain,
)
from .errors import InfeasibleSpecError, NumericalError, SupmaxError
from .reports import Verdict
from .rng import ReplicateStream, RngPolicy
from .simulation import (
    MeanEstimate,
    PathRealization,
    TailEstimate,
    estimate_tail,
    estimate_tails,
    estimate_truncated_mean_sup,
    quadratic_variation,
    sample_jump,
    simulate_path,
)
from .verification import (
    check_continuous_drift,
    check_stopped_martingale,
    check_value_identities,
    equality_diagnostics,
    value_function,
    verify_tail_upper,
    verify_uniform_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "analytic_tail",
    "BigJumpSpec",
    "bound_tail",
    "check_continuous_drift",
    "check_discrete_condition",
    "check_stopped_martingale",
    "check_value_identities",
    "choose_mu_for_eps",
    "Constant",
    "cumulative_hazard",
    "depth_at_time",
    "DescentProfile",
    "DiscreteConstructionParams",
    "drift_rate",
    "equality_diagnostics",
    "estimate_chain_tail",
    "estimate_tail",
    "estimate_tails",
    "estimate_truncated_mean_sup",
    "example1_tail",
    "example2_b_star",
    "example2_tail",
    "hazard",
    "InfeasibleSpecError",
    "jump_tail",
    "kingman_bounds",
    "make_discrete_params",
    "make_spec",
    "MeanEstimate",
    "NumericalError",
    "PathRealization",
    "quadratic_variation",
    "random_walk_sup",
    "ReplicateStream",
    "RngPolicy",
    "sample_jump",
    "simulate_path",
    "simulate_sampled_chain",
    "SupmaxError",
    "Tabulated",
    "TailEstimate",
    "time_of_depth",
    "uniform_lower_bound",
    "value_function",
    "Verdict",
    "verify_tail_upper",
    "verify_uniform_sweep",
]
