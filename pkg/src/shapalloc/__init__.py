"""Exact, bounded, and sampled Shapley values for allocation games.

The game: agents are interested in subsets of indivisible valued goods, each
agent may hold at most ``k`` of them, and a coalition's worth is the best
total value it can secure.  This package computes each agent's fair share of
the grand-coalition worth (its Shapley value) exactly where feasible, and by
guaranteed intervals or randomized estimates where not, after shrinking the
instance with value-preserving simplifications.
"""

from .model import (
    AgentsGraph,
    AllocationScenario,
    CharacteristicCache,
    Coalition,
    ScenarioError,
    build_agents_graph,
    char_value,
    component_of,
    connected_components,
    iter_bits,
    load_scenario,
    marginal_contribution,
    marginal_restricted,
    mask_from_bool,
    mask_from_indices,
    save_scenario,
)
from .matching import (
    Allocation,
    MatchingInstance,
    build_instance,
    optimal_allocation,
    optimal_value_only,
)
from .preprocess import (
    PreprocessReport,
    drop_empty_agents,
    prune_useless_goods,
    run_pipeline,
    separate_singletons,
    split_components,
    strip_null_goods,
)
from .exact import ComponentTooLarge, exact_shapley, shapley_weight
from .bounds import profile_weight, shapley_bounds
from .sampling import (
    AgentRange,
    FprasConfig,
    RangeSamplerConfig,
    compute_ranges,
    fpras_shapley,
    hoeffding_sample_count,
    range_sampler_shapley,
)
from .generator import extract_subgraph, generate
from .report import AgentResult, ShapleyReport, merge_reports

__version__ = "0.1.0"

__all__ = [
    "AgentRange",
    "AgentResult",
    "AgentsGraph",
    "Allocation",
    "AllocationScenario",
    "CharacteristicCache",
    "Coalition",
    "ComponentTooLarge",
    "FprasConfig",
    "MatchingInstance",
    "PreprocessReport",
    "RangeSamplerConfig",
    "ScenarioError",
    "ShapleyReport",
    "build_agents_graph",
    "build_instance",
    "char_value",
    "component_of",
    "compute_ranges",
    "connected_components",
    "drop_empty_agents",
    "exact_shapley",
    "extract_subgraph",
    "fpras_shapley",
    "generate",
    "iter_bits",
    "load_scenario",
    "hoeffding_sample_count",
    "marginal_contribution",
    "marginal_restricted",
    "mask_from_bool",
    "mask_from_indices",
    "merge_reports",
    "optimal_allocation",
    "optimal_value_only",
    "profile_weight",
    "prune_useless_goods",
    "range_sampler_shapley",
    "run_pipeline",
    "save_scenario",
    "separate_singletons",
    "shapley_bounds",
    "shapley_weight",
    "split_components",
    "strip_null_goods",
]
