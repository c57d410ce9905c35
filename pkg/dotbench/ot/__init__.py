"""Divergences, discrete measures, exact OT and the DOT solver."""
from dotbench.ot.divergence import (
    DivergenceKind,
    DivergenceSpec,
    alpha_divergence,
    convexity_params,
    entropic,
    phi,
    poly_dual,
    psi,
    psi_prime,
    psi_second,
)
from dotbench.ot.exact import TransportPlan, coupling_distance, marginal_tuple_distance, wasserstein
from dotbench.ot.measure import (
    Curve,
    DiscreteMeasure,
    MarginalTuple,
    Resample,
    UniformCube,
    empirical,
    make_rng,
    product,
)
from dotbench.ot.solver import (
    CostKind,
    CostSpec,
    Coupling,
    DOTSolver,
    DualPotentials,
    ProblemSpec,
    Solution,
    build_cost,
    objective,
    potential_lipschitz,
    root_update,
    solve,
    support_count,
)

__all__ = [
    'CostKind',
    'CostSpec',
    'Coupling',
    'Curve',
    'DOTSolver',
    'DiscreteMeasure',
    'DivergenceKind',
    'DivergenceSpec',
    'DualPotentials',
    'MarginalTuple',
    'ProblemSpec',
    'Resample',
    'Solution',
    'TransportPlan',
    'UniformCube',
    'alpha_divergence',
    'build_cost',
    'convexity_params',
    'coupling_distance',
    'empirical',
    'entropic',
    'make_rng',
    'marginal_tuple_distance',
    'objective',
    'phi',
    'poly_dual',
    'potential_lipschitz',
    'product',
    'psi',
    'psi_prime',
    'psi_second',
    'root_update',
    'solve',
    'support_count',
    'wasserstein',
]
