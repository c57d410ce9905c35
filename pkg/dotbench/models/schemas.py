"""Pydantic models for config validation and report serialization."""
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from dotbench.core.config import DEBUG, DEFAULTS


class AlphaDivergence(BaseModel):
    """Alpha-divergence fragment: {"alpha": a} with 1 < a <= 2."""
    model_config = ConfigDict(extra='forbid')
    alpha: float = Field(..., gt=1.0, le=2.0, description="Power of the alpha-divergence")


class PolyDualDivergence(BaseModel):
    """Polynomial dual fragment: {"poly_beta": b}, psi(y) = (y_+)^b up to a shift."""
    model_config = ConfigDict(extra='forbid')
    poly_beta: int = Field(..., ge=2, description="Integer power of the conjugate")


DivergenceField = Union[Literal['entropic'], AlphaDivergence, PolyDualDivergence]


class SolverOptions(BaseModel):
    """Options of the generalized Sinkhorn solver."""
    model_config = ConfigDict(extra='forbid')
    tol: float = Field(DEFAULTS['solver_tol'], gt=0, description="Max first-order residual at convergence")
    root_tol: float = Field(DEFAULTS['root_tol'], gt=0, description="Tolerance on |F - 1| per atom")
    max_iters: int = Field(DEFAULTS['max_iters'], ge=1, description="Maximum number of block sweeps")
    sweep: Literal['gauss-seidel', 'jacobi'] = Field(DEFAULTS['sweep'])
    jobs: int = Field(1, ge=1, description="Threads for jacobi-mode atom solves")
    debug_crosscheck: bool = Field(DEBUG, description="Cross-check closed-form entropic updates")


class MeasureConfig(BaseModel):
    """A discrete measure as JSON: {"points": [[...]], "weights": [...]}."""
    model_config = ConfigDict(extra='forbid')
    points: List[List[float]] = Field(..., min_length=1)
    weights: Optional[List[float]] = Field(None, description="Uniform when omitted")

    @field_validator('points', mode='before')
    @classmethod
    def promote_scalars(cls, v):
        if isinstance(v, list) and v and not isinstance(v[0], list):
            return [[x] for x in v]
        return v

    @model_validator(mode='after')
    def check_lengths(self):
        if self.weights is not None and len(self.weights) != len(self.points):
            raise ValueError(f'weights has {len(self.weights)} entries for {len(self.points)} points')
        return self


class CostConfig(BaseModel):
    """Cost fragment."""
    model_config = ConfigDict(extra='forbid')
    kind: Literal['sq_euclidean_sum', 'power_distance', 'explicit'] = 'sq_euclidean_sum'
    power: float = Field(2.0, ge=1.0)
    tensor: Optional[list] = None
    lipschitz: Optional[float] = Field(None, ge=0)

    @model_validator(mode='after')
    def explicit_needs_tensor(self):
        if self.kind == 'explicit' and self.tensor is None:
            raise ValueError('explicit cost requires "tensor"')
        return self


class ProblemConfig(BaseModel):
    """A complete DOT problem."""
    model_config = ConfigDict(extra='forbid')
    marginals: List[MeasureConfig] = Field(..., min_length=2)
    cost: CostConfig = Field(default_factory=CostConfig)
    divergence: DivergenceField = 'entropic'
    epsilon: float = Field(1.0, gt=0)
    p: float = Field(2.0, ge=1.0, description="Exponent of the product metric")


class SamplerConfig(BaseModel):
    """Source of empirical samples."""
    model_config = ConfigDict(extra='forbid')
    kind: Literal['uniform_cube', 'resample', 'curve']
    d: int = Field(1, ge=1)
    measure: Optional[MeasureConfig] = None
    curve: Optional[Literal['helix', 'line']] = None


class FigureConfig(BaseModel):
    """Support-size figure recipe."""
    model_config = ConfigDict(extra='forbid')
    epsilon: float = Field(DEFAULTS['figure_epsilon'], gt=0)
    inverse_weight: bool = Field(
        True, description="Read epsilon as a cost multiplier, i.e. regularization weight 1/epsilon"
    )
    atoms: int = Field(DEFAULTS['figure_atoms'], ge=2)
    divergences: List[DivergenceField] = Field(default_factory=lambda: list(DEFAULTS['figure_divergences']))
    threshold: float = Field(DEFAULTS['support_threshold'], ge=0)


class PerturbConfig(BaseModel):
    """How perturbed marginals are generated."""
    model_config = ConfigDict(extra='forbid')
    kind: Literal['jitter', 'translation'] = 'jitter'
    dirichlet: Optional[float] = Field(None, gt=0, description="Concentration for weight perturbation")


class StabilityConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')
    q: float = Field(DEFAULTS['stability_q'], ge=1.0)
    levels: List[float] = Field(default_factory=lambda: list(DEFAULTS['stability_levels']))
    perturbation: PerturbConfig = Field(default_factory=PerturbConfig)

    @field_validator('levels')
    @classmethod
    def nonnegative_levels(cls, v):
        if any(level < 0 for level in v):
            raise ValueError('levels must be nonnegative')
        return v


class StrongConvexityConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')
    divergences: List[DivergenceField] = Field(
        default_factory=lambda: ['entropic', {'alpha': 1.5}, {'alpha': 2.0}]
    )
    pairs: int = Field(200, ge=1, description="Random (instance, coupling) pairs per divergence")
    couplings_per_instance: int = Field(10, ge=1)
    q: float = Field(1.0, ge=1.0)
    epsilon: float = Field(1.0, gt=0)


class ComplexityConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')
    sampler: SamplerConfig = Field(default_factory=lambda: SamplerConfig(kind='uniform_cube', d=3))
    divergence: DivergenceField = {'alpha': 2.0}
    epsilon: float = Field(1.0, gt=0)
    cost_power: float = Field(2.0, ge=1.0)
    n_values: List[int] = Field(default_factory=lambda: list(DEFAULTS['n_values']))
    replications: int = Field(DEFAULTS['replications'], ge=1)
    grid_points_per_axis: Optional[int] = Field(None, ge=2)

    @field_validator('n_values')
    @classmethod
    def increasing(cls, v):
        if not v or any(b <= a for a, b in zip(v, v[1:])) or v[0] < 1:
            raise ValueError('n_values must be positive and strictly increasing')
        return v


class IntrinsicDemoConfig(ComplexityConfig):
    sampler: SamplerConfig = Field(default_factory=lambda: SamplerConfig(kind='curve', d=3, curve='helix'))
    baseline: bool = Field(True, description="Also run the ambient-cube baseline")


class RunConfig(BaseModel):
    """Everything a CLI invocation needs."""
    model_config = ConfigDict(extra='forbid')
    command: Literal['solve', 'figure', 'stability', 'strong-convexity', 'complexity', 'intrinsic-demo']
    out_dir: str = 'out'
    seed: int = DEFAULTS['seed']
    jobs: int = Field(1, ge=1)
    problem: Optional[ProblemConfig] = None
    solver: SolverOptions = Field(default_factory=SolverOptions)
    figure: FigureConfig = Field(default_factory=FigureConfig)
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    strong_convexity: StrongConvexityConfig = Field(default_factory=StrongConvexityConfig)
    complexity: ComplexityConfig = Field(default_factory=ComplexityConfig)
    intrinsic_demo: IntrinsicDemoConfig = Field(default_factory=IntrinsicDemoConfig)

    @model_validator(mode='after')
    def solve_needs_problem(self):
        if self.command == 'solve' and self.problem is None:
            raise ValueError('the solve command requires a "problem" section')
        return self


class StabilityRow(BaseModel):
    """One perturbation level of the stability experiment."""
    level: float = Field(..., description="Requested perturbation size")
    delta: float = Field(..., description="Realized W_p distance between marginal tuples")
    wq: float = Field(..., description="W_q distance between the two optimizers")
    ratio: float = Field(..., description="(W_q - N^(1/q-1/p) delta)_+ / (L delta)^(1/2q)")
    value: float
    value_perturbed: float
    value_gap: float = Field(..., description="|OT(mu) - OT(mu~)|")
    continuity_bound: float = Field(..., description="L * delta")
    continuity_ok: bool


class StabilityReport(BaseModel):
    rows: List[StabilityRow]
    slope: Optional[float] = Field(None, description="log-log slope of W_q against delta")
    ratio_spread: float = Field(..., description="max/min of the positive ratios")
    lipschitz: float
    n_marginals: int
    p: float
    q: float


class StrongConvexityRow(BaseModel):
    divergence: str
    instance: int
    lhs: float
    rhs: float
    slack: float
    ok: bool


class RateReport(BaseModel):
    """Monte-Carlo estimate of the plug-in error decay."""
    n_values: List[int]
    mean_abs_errors: List[float]
    std_errors: List[float]
    replications: int
    slope: float
    intercept: float
    slope_ci: List[float] = Field(..., min_length=2, max_length=2)
    fit_excludes_smallest_n: bool = False
    failures: int = 0
    reference_value: float
    discretization_bias: Optional[float] = None
    bias_ok: Optional[bool] = None
    label: str = ''

    @field_validator('mean_abs_errors')
    @classmethod
    def nonnegative(cls, v):
        if any(e < 0 for e in v):
            raise ValueError('errors must be nonnegative')
        return v


class IntrinsicDemoReport(BaseModel):
    curve: RateReport
    baseline: Optional[RateReport] = None


class FigurePanel(BaseModel):
    divergence: str
    support: int
    cells: int
    symmetric_error: float
    value: float
    iterations: int


class FigureSummary(BaseModel):
    epsilon: float
    regularization_weight: float
    panels: List[FigurePanel]
    reference_supports: Dict[str, int] = Field(
        default_factory=lambda: {'entropic': 100, 'sparse_a': 44, 'sparse_b': 28},
        description="Support sizes reported for the original figure; recorded, not asserted"
    )
