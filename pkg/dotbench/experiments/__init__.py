"""Stability and sample-complexity experiments built on the DOT solver."""
from dotbench.experiments.complexity import (
    PartitionScheme,
    dyadic_partition,
    fit_slope,
    intrinsic_dimension_demo,
    is_refinement,
    locate,
    reference_problem,
    reference_value,
    refinement_chain,
    richardson,
    sample_complexity_run,
)
from dotbench.experiments.shadow_stability import (
    ShadowResult,
    project_to_marginals,
    random_feasible_coupling,
    shadow,
    stability_experiment,
    strong_convexity_check,
    strong_convexity_suite,
    value_continuity_check,
)

__all__ = [
    'PartitionScheme',
    'ShadowResult',
    'dyadic_partition',
    'fit_slope',
    'intrinsic_dimension_demo',
    'is_refinement',
    'locate',
    'project_to_marginals',
    'random_feasible_coupling',
    'reference_problem',
    'reference_value',
    'refinement_chain',
    'richardson',
    'sample_complexity_run',
    'shadow',
    'stability_experiment',
    'strong_convexity_check',
    'strong_convexity_suite',
    'value_continuity_check',
]
