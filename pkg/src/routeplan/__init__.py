"""Joint GPU setup selection and latency-aware routing for multi-model LLM serving."""
from .errors import ConfigurationError, PlannerError, ValidationError
from .latency import (
    LatencyProfile,
    ProfileLibrary,
    latency_at,
    latency_slope,
    load_profiles,
    system_latency,
    system_latency_grad,
)
from .routing import (
    BetaParams,
    PGAParams,
    RoutingContext,
    optimize_beta,
    optimize_fractions,
    project_simplex,
)
from .score_dual import (
    SubgradientParams,
    assign_prompts,
    dual_objective,
    exact_score_oracle,
    solve_dual,
)
from .setup_search import (
    MemoryTable,
    ModelSetup,
    SearchContext,
    SetupSpace,
    SystemSetup,
    compute_demand,
    enumerate_setups,
    ffd_feasible,
    retain,
    select_setup,
    shard_memory_list,
)
from .workload import ScoreMatrix, load_scores, synth_scores, write_scores

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "PlannerError",
    "ValidationError",
    "LatencyProfile",
    "ProfileLibrary",
    "latency_at",
    "latency_slope",
    "load_profiles",
    "system_latency",
    "system_latency_grad",
    "BetaParams",
    "PGAParams",
    "RoutingContext",
    "optimize_beta",
    "optimize_fractions",
    "project_simplex",
    "SubgradientParams",
    "assign_prompts",
    "dual_objective",
    "exact_score_oracle",
    "solve_dual",
    "MemoryTable",
    "ModelSetup",
    "SearchContext",
    "SetupSpace",
    "SystemSetup",
    "compute_demand",
    "enumerate_setups",
    "ffd_feasible",
    "retain",
    "select_setup",
    "shard_memory_list",
    "ScoreMatrix",
    "load_scores",
    "synth_scores",
    "write_scores",
]
