"""Online file caching on bipartite user-cache networks.

A trace-driven simulator and policy library: a follow-the-perturbed-leader
caching policy with LP relaxation and three rounding schemes, reactive
baselines, hindsight benchmarks, regret accounting, and an experiment
harness with a CLI front end.
"""

from .baselines import BaselineResult, belady_offline, lfu_step, lru_step, run_reactive
from .bounds import (
    BoundReport,
    bound_report,
    build_y_perp,
    regret_lower_bound,
    regret_upper_bound,
    top_load_closed_form,
    top_load_monte_carlo,
)
from .errors import (
    BudgetExceededError,
    CatalogOverflowError,
    ConfigurationError,
    FeasibilityError,
    InvalidDegreeError,
    LeadCacheError,
    PreconditionError,
    SolverError,
    TraceParseError,
)
from .harness import ExperimentConfig, hindsight_benchmark, run_experiment
from .lp import FractionalAllocation, LPInstance, build_lp, solve_lp, support_weights
from .model import (
    BipartiteNetwork,
    CacheColoring,
    CacheConfiguration,
    VirtualAction,
    build_random_network,
    cache_conflicts,
    greedy_cache_coloring,
)
from .policy import (
    PolicyResult,
    PolicyState,
    learning_rate,
    perturbed_counts,
    run_policy,
    step,
)
from .reward import (
    fetch_count,
    fetch_event,
    fetch_rate,
    hindsight_opt_exact,
    hindsight_upper_bound,
    hit_rate,
    linear_reward,
    recall_distances,
    regret_series,
    replay_hits,
    reward,
    virtual_reward,
)
from .rounding import (
    SurrogateEvaluator,
    approximation_factor,
    exact_ilp,
    madow_round,
    madow_sample,
    maximize_weighted_coverage,
    pipage_round,
    repair_marginals,
    replacement_round,
)
from .traces import (
    RequestTrace,
    gen_adversarial_uniform,
    gen_renewal,
    gen_zipf,
    load_trace,
    save_trace,
    split_intervals,
    zipf_weights,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult",
    "BipartiteNetwork",
    "BoundReport",
    "BudgetExceededError",
    "CacheColoring",
    "CacheConfiguration",
    "CatalogOverflowError",
    "ConfigurationError",
    "ExperimentConfig",
    "FeasibilityError",
    "FractionalAllocation",
    "InvalidDegreeError",
    "LPInstance",
    "LeadCacheError",
    "PolicyResult",
    "PolicyState",
    "PreconditionError",
    "RequestTrace",
    "SolverError",
    "SurrogateEvaluator",
    "TraceParseError",
    "VirtualAction",
    "approximation_factor",
    "belady_offline",
    "bound_report",
    "build_lp",
    "build_random_network",
    "build_y_perp",
    "cache_conflicts",
    "exact_ilp",
    "fetch_count",
    "fetch_event",
    "fetch_rate",
    "gen_adversarial_uniform",
    "gen_renewal",
    "gen_zipf",
    "greedy_cache_coloring",
    "hindsight_benchmark",
    "hindsight_opt_exact",
    "hindsight_upper_bound",
    "hit_rate",
    "learning_rate",
    "lfu_step",
    "linear_reward",
    "load_trace",
    "lru_step",
    "madow_round",
    "madow_sample",
    "maximize_weighted_coverage",
    "perturbed_counts",
    "pipage_round",
    "recall_distances",
    "regret_lower_bound",
    "regret_series",
    "regret_upper_bound",
    "repair_marginals",
    "replacement_round",
    "replay_hits",
    "reward",
    "run_experiment",
    "run_policy",
    "run_reactive",
    "save_trace",
    "solve_lp",
    "split_intervals",
    "step",
    "support_weights",
    "top_load_closed_form",
    "top_load_monte_carlo",
    "virtual_reward",
    "zipf_weights",
]
