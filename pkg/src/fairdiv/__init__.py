"""Fair division of indivisible items: algorithms, oracles, experiments.

The package splits into value-model plumbing (distributions, model, rng),
combinatorial machinery (matching), the allocation and assignment algorithms
themselves (allocators, assignment), exhaustive referees (oracle), and the
Monte Carlo driver (harness, cli).
"""

from .allocators import (
    AllocatorResult,
    RoundRobinTrace,
    balanced_ef_subroutine,
    default_assignment_tau,
    default_two_stage_tau,
    dispatch_threshold,
    efx_dispatch,
    efx_via_ef,
    maximum_assignment_efx,
    prop_dispatch,
    round_robin,
    round_robin_reversed_last,
    simulate_rr_generative,
    threshold_matching,
    two_stage_matching,
)
from .assignment import (
    S_STAR,
    Y_STAR,
    Z_STAR,
    TrajectoryRecord,
    greedy_assignment,
    ode_z,
    peak_stats,
    simulate_markov,
    trajectory_deviation,
)
from .distributions import (
    Distribution,
    PiecewiseLinear,
    TruncatedNormal,
    Uniform,
    conditional_max_cdf,
    mean_and_bounds,
    parse_distribution,
    sample_conditional_max,
)
from .harness import (
    ALLOCATORS,
    PRESETS,
    CellResult,
    ConfigError,
    ExperimentConfig,
    TrialOutcome,
    ks_statistic,
    parse_config,
    render_csv,
    run_experiment,
    wilson_interval,
    write_csv,
)
from .matching import (
    BipartiteGraph,
    Digraph,
    Matching,
    WeightedAssignmentProblem,
    max_cardinality_matching,
    max_weight_assignment,
    saturating_matching,
    topological_order,
)
from .model import (
    Allocation,
    Assignment,
    FairnessReport,
    Instance,
    RankingProfile,
    bundle_utility,
    fairness_report,
    is_ef_assignment,
    rankings_from_instance,
    sample_instance,
    sample_profile,
)
from .oracle import (
    CRITERIA,
    brute_max_weight,
    exists_ef_assignment_bruteforce,
    exists_fair_allocation,
)
from .rng import RngStream, derive_seed, splitmix64

__version__ = "0.1.0"

__all__ = [
    "ALLOCATORS",
    "AllocatorResult",
    "Allocation",
    "Assignment",
    "BipartiteGraph",
    "CRITERIA",
    "CellResult",
    "ConfigError",
    "Digraph",
    "Distribution",
    "ExperimentConfig",
    "FairnessReport",
    "Instance",
    "Matching",
    "PRESETS",
    "PiecewiseLinear",
    "RankingProfile",
    "RngStream",
    "RoundRobinTrace",
    "S_STAR",
    "TrajectoryRecord",
    "TrialOutcome",
    "TruncatedNormal",
    "Uniform",
    "WeightedAssignmentProblem",
    "Y_STAR",
    "Z_STAR",
    "balanced_ef_subroutine",
    "brute_max_weight",
    "bundle_utility",
    "conditional_max_cdf",
    "default_assignment_tau",
    "default_two_stage_tau",
    "derive_seed",
    "dispatch_threshold",
    "efx_dispatch",
    "efx_via_ef",
    "exists_ef_assignment_bruteforce",
    "exists_fair_allocation",
    "fairness_report",
    "greedy_assignment",
    "is_ef_assignment",
    "ks_statistic",
    "max_cardinality_matching",
    "max_weight_assignment",
    "mean_and_bounds",
    "maximum_assignment_efx",
    "ode_z",
    "parse_config",
    "parse_distribution",
    "peak_stats",
    "prop_dispatch",
    "rankings_from_instance",
    "render_csv",
    "round_robin",
    "round_robin_reversed_last",
    "run_experiment",
    "sample_conditional_max",
    "sample_instance",
    "sample_profile",
    "saturating_matching",
    "simulate_markov",
    "simulate_rr_generative",
    "splitmix64",
    "threshold_matching",
    "topological_order",
    "trajectory_deviation",
    "two_stage_matching",
    "wilson_interval",
    "write_csv",
    "__version__",
]
