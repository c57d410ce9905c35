"""
Intrinsic-dimension partitions and the Monte-Carlo sample-complexity harness.

Partitions are regular grids on [0, 1]^d; a cell (j_1, ..., j_d) of a grid with
m cells per axis is the product of the half-open intervals (j/m, (j+1)/m], with
the lowest cell closed at 0, so boundary points belong to the lexicographically
smallest cell.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from dotbench.core.config import DEFAULTS
from dotbench.core.errors import (
    CapacityError,
    CertificateError,
    ConvergenceError,
    DomainError,
    DotBenchError,
    ValidationError,
)
from dotbench.models.schemas import IntrinsicDemoReport, RateReport, SolverOptions
from dotbench.monitoring.logging import experiment_logger
from dotbench.monitoring.metrics import track_experiment_task
from dotbench.ot import divergence as div
from dotbench.ot.measure import MarginalTuple, Sampler, UniformCube, empirical, make_rng
from dotbench.ot.solver import CostKind, ProblemSpec, build_cost, solve


@dataclass(frozen=True)
class PartitionScheme:
    """Regular grid of m^d cubes of side 1/m covering [0, 1]^d."""
    d: int
    m: int
    epsilon: float
    K: float
    level: int = 0
    s: float = 1.0

    @property
    def d_mu(self) -> int:
        return self.d

    @property
    def side(self) -> float:
        return 1.0 / self.m

    @property
    def diameter(self) -> float:
        return math.sqrt(self.d) / self.m

    @property
    def count(self) -> int:
        return self.m ** self.d

    @property
    def bound(self) -> float:
        """K * epsilon^(-d_mu), the certified cell-count bound."""
        return self.K * self.epsilon ** (-self.d)

    def cells(self) -> np.ndarray:
        """(count, d, 2) array of [lower, upper] corners in C order of the cell index."""
        idx = np.indices((self.m,) * self.d).reshape(self.d, -1).T
        return np.stack([idx / self.m, (idx + 1) / self.m], axis=-1)


def _cells_per_axis(d: int, resolution: float) -> int:
    # guard against ceil(27.000000000000004)
    return int(math.ceil(math.sqrt(d) / resolution * (1.0 - 1e-12)))


def _check_capacity(d: int, m: int):
    count = m ** d
    if count > DEFAULTS['partition_capacity']:
        raise CapacityError(
            f"partition with {count} cells exceeds capacity {int(DEFAULTS['partition_capacity'])}",
            {'d': d, 'cells_per_axis': m},
        )


def dyadic_partition(d: int, epsilon: float) -> PartitionScheme:
    """Cubes of side <= epsilon / sqrt(d) covering [0, 1]^d, certifying I(d, s) with K = (2 sqrt d)^d."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    m = _cells_per_axis(d, epsilon)
    _check_capacity(d, m)
    return PartitionScheme(d=d, m=m, epsilon=float(epsilon), K=(2.0 * math.sqrt(d)) ** d)


def refinement_chain(d: int, epsilon: float, T: int) -> List[PartitionScheme]:
    """Nested grids A_1 (finest) .. A_T (coarsest).

    The coarsest grid has m_T = ceil(sqrt(d) / (3^(T-1) epsilon)) cells per axis and
    level t has m_t = m_T 3^(T-t), so every cell of A_{t-1} splits a cell of A_t into
    3^d pieces. Level t has diameter <= 3^(t-1) epsilon and at most
    K (3^t epsilon)^(-d) cells with K = (3 sqrt d + 1)^d; its `epsilon` field is 3^t epsilon.
    """
    if T < 1:
        raise DomainError(f"chain length must be >= 1, got {T}")
    if not 0 < epsilon or epsilon * 3 ** T > 1 + 1e-12:
        raise DomainError(f"need 0 < epsilon and epsilon * 3^T <= 1, got epsilon={epsilon}, T={T}")
    m_top = _cells_per_axis(d, 3 ** (T - 1) * epsilon)
    _check_capacity(d, m_top * 3 ** (T - 1))
    K = (3.0 * math.sqrt(d) + 1.0) ** d
    return [
        PartitionScheme(d=d, m=m_top * 3 ** (T - t), epsilon=3 ** t * epsilon, K=K, level=t)
        for t in range(1, T + 1)
    ]


def locate(scheme: PartitionScheme, points: np.ndarray) -> np.ndarray:
    """Flat C-order cell index of each point of [0, 1]^d."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != scheme.d:
        raise ValidationError(f"points have dimension {pts.shape[1]}, partition has {scheme.d}")
    axis_idx = np.clip(np.ceil(pts * scheme.m).astype(int) - 1, 0, scheme.m - 1)
    return np.ravel_multi_index(tuple(axis_idx.T), (scheme.m,) * scheme.d)


def is_refinement(fine: PartitionScheme, coarse: PartitionScheme) -> np.ndarray:
    """Parent index in `coarse` of every cell of `fine`; raises if some cell is not contained."""
    if fine.d != coarse.d:
        raise ValidationError("partitions live in different dimensions")
    j = np.arange(fine.m)
    lower, upper = j / fine.m, (j + 1) / fine.m
    parent = np.clip(np.ceil(0.5 * (lower + upper) * coarse.m).astype(int) - 1, 0, coarse.m - 1)
    tol = 1e-12
    contained = (parent / coarse.m <= lower + tol) & (upper <= (parent + 1) / coarse.m + tol)
    if not contained.all():
        raise ValidationError(
            f"{int((~contained).sum())} axis intervals of the fine grid straddle coarse cells",
            {'fine_m': fine.m, 'coarse_m': coarse.m},
        )
    grids = np.meshgrid(*([parent] * fine.d), indexing='ij')
    return np.ravel_multi_index(tuple(g.reshape(-1) for g in grids), (coarse.m,) * coarse.d)


def reference_points_per_axis(sampler: Sampler) -> int:
    table = DEFAULTS['grid_points_per_axis']
    return int(table.get(sampler.intrinsic_dim, table[max(table)]))


def reference_resolutions(points_per_axis: int) -> Tuple[int, int, int]:
    """Fine, middle and coarse points per axis of the reference grids."""
    if points_per_axis < 4:
        raise ValidationError(f"reference grids need at least 4 points per axis, got {points_per_axis}")
    return points_per_axis, (3 * points_per_axis) // 4, points_per_axis // 2


def reference_problem(
    sampler: Sampler,
    divergence: Any,
    epsilon: float = 1.0,
    cost_power: float = 2.0,
    n_marginals: int = 2,
    points_per_axis: Optional[int] = None,
) -> Tuple[ProblemSpec, ProblemSpec, ProblemSpec]:
    """Midpoint-grid proxies of the population problem at three resolutions, finest first."""
    spec = div.from_config(divergence)
    resolutions = reference_resolutions(points_per_axis or reference_points_per_axis(sampler))
    kind = CostKind.SQ_EUCLIDEAN_SUM if cost_power == 2.0 else CostKind.POWER_DISTANCE
    problems = []
    for m in resolutions:
        measure = sampler.reference_measure(m)
        marginals = MarginalTuple(tuple([measure] * n_marginals), 2.0)
        problems.append(ProblemSpec(marginals, build_cost(marginals, kind, cost_power), spec, epsilon))
    return problems[0], problems[1], problems[2]


def richardson(fine_value: float, coarse_value: float, fine_m: int, coarse_m: int) -> float:
    """Eliminate the m^-2 term of a midpoint-grid value V_m = V + a m^-2 + O(m^-4)."""
    if fine_m == coarse_m:
        return float(fine_value)
    u_fine, u_coarse = fine_m ** -2.0, coarse_m ** -2.0
    return float(fine_value + (fine_value - coarse_value) * u_fine / (u_coarse - u_fine))


def reference_value(
    sampler: Sampler,
    divergence: Any,
    epsilon: float = 1.0,
    cost_power: float = 2.0,
    points_per_axis: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
) -> Tuple[ProblemSpec, float, float]:
    """Fine-grid problem, extrapolated population value and its bias estimate.

    The value extrapolates the fine and middle grids; the bias estimate is its
    distance to the extrapolation of the middle and coarse grids.
    """
    points_per_axis = points_per_axis or reference_points_per_axis(sampler)
    m_fine, m_mid, m_coarse = reference_resolutions(points_per_axis)
    problems = reference_problem(sampler, divergence, epsilon, cost_power, points_per_axis=points_per_axis)
    problems[0].marginals.check_capacity()
    v_fine, v_mid, v_coarse = (solve(prob, opts).value for prob in problems)
    value = richardson(v_fine, v_mid, m_fine, m_mid)
    bias = abs(value - richardson(v_mid, v_coarse, m_mid, m_coarse))
    experiment_logger.debug(
        f"reference grids {m_fine}/{m_mid}/{m_coarse}: values {v_fine:.6f}/{v_mid:.6f}/{v_coarse:.6f}, "
        f"extrapolated {value:.6f}, bias {bias:.2e}"
    )
    return problems[0], value, bias


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci: Tuple[float, float]
    excludes_smallest_n: bool


def _curvature_flagged(x: np.ndarray, y: np.ndarray) -> bool:
    if x.size < 5:
        return False
    coef, cov = np.polyfit(x, y, 2, cov=True)
    se = math.sqrt(max(cov[0, 0], 0.0))
    return abs(coef[0]) > 2.0 * se


def fit_slope(
    n_values: Sequence[int],
    samples: Sequence[np.ndarray],
    rng: np.random.Generator,
    resamples: Optional[int] = None,
) -> SlopeFit:
    """Least-squares slope of log mean error on log n with a bootstrap CI over replications.

    The smallest n is dropped when a quadratic term is significant (|a| > 2 se).
    """
    resamples = DEFAULTS['bootstrap_resamples'] if resamples is None else resamples
    tiny = np.finfo(float).tiny
    x = np.log(np.asarray(n_values, dtype=float))
    means = np.array([max(float(np.mean(s)), tiny) for s in samples])
    y = np.log(means)

    start = 1 if _curvature_flagged(x, y) else 0
    slope, intercept = np.polyfit(x[start:], y[start:], 1)

    boot = np.empty(resamples)
    for b in range(resamples):
        resampled = [max(float(np.mean(rng.choice(s, size=s.size))), tiny) for s in samples[start:]]
        boot[b] = np.polyfit(x[start:], np.log(resampled), 1)[0]
    low, high = np.percentile(boot, [2.5, 97.5])
    return SlopeFit(float(slope), float(intercept), (float(low), float(high)), bool(start))


@track_experiment_task('complexity')
def _plug_in_error(
    reference: ProblemSpec,
    sampler: Sampler,
    target: float,
    n: int,
    n_index: int,
    replication: int,
    seed: int,
    opts: Optional[SolverOptions],
) -> float:
    measures = tuple(
        empirical(sampler, n, seed, n_index, replication, i) for i in range(reference.n_marginals)
    )
    problem = reference.with_marginals(MarginalTuple(measures, reference.p))
    return abs(solve(problem, opts).value - target)


def _replication(
    reference: ProblemSpec,
    sampler: Sampler,
    target: float,
    n: int,
    n_index: int,
    replication: int,
    seed: int,
    opts: Optional[SolverOptions],
) -> Optional[float]:
    """|OT(reference) - OT(empirical)| for one draw; None when the solve fails."""
    try:
        return _plug_in_error(reference, sampler, target, n, n_index, replication, seed, opts)
    except DotBenchError as exc:
        experiment_logger.warning(f"replication n={n} r={replication} failed: {exc}")
        return None


def sample_complexity_run(
    sampler: Sampler,
    divergence: Any,
    n_values: Sequence[int],
    replications: int,
    seed: int = 0,
    epsilon: float = 1.0,
    cost_power: float = 2.0,
    opts: Optional[SolverOptions] = None,
    jobs: int = 1,
    points_per_axis: Optional[int] = None,
    label: str = '',
    require_bias_ok: bool = True,
) -> RateReport:
    """Monte-Carlo estimate of E|OT(mu) - OT(mu^n)| against n with a fitted log-log slope.

    Raises CertificateError when the reference bias is not below `bias_fraction` of
    the smallest mean error, unless `require_bias_ok` is False; the report then
    carries `bias_ok=False`.
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValidationError("n_values must be strictly increasing")
    reference, target, bias = reference_value(sampler, divergence, epsilon, cost_power, points_per_axis, opts)

    tasks = [(k, n, r) for k, n in enumerate(n_values) for r in range(replications)]
    results = Parallel(n_jobs=jobs, prefer='threads')(
        delayed(_replication)(reference, sampler, target, n, k, r, seed, opts)
        for k, n, r in tasks
    )

    failures = sum(value is None for value in results)
    if failures > DEFAULTS['max_failure_fraction'] * len(tasks):
        raise ConvergenceError(
            f"{failures} of {len(tasks)} replications failed",
            residual=float('nan'),
            iterations=0,
            context={'failures': failures, 'tasks': len(tasks), 'label': label},
        )

    samples: List[np.ndarray] = []
    for k in range(len(n_values)):
        values = [v for (kk, _, _), v in zip(tasks, results) if kk == k and v is not None]
        samples.append(np.asarray(values, dtype=float))
    means = [float(s.mean()) for s in samples]
    std_errors = [float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0 for s in samples]

    fit = fit_slope(n_values, samples, make_rng(seed, 2 ** 31 - 1))
    bias_ok = bias == 0.0 or bias < DEFAULTS['bias_fraction'] * min(means)
    report = RateReport(
        n_values=n_values,
        mean_abs_errors=means,
        std_errors=std_errors,
        replications=replications,
        slope=fit.slope,
        intercept=fit.intercept,
        slope_ci=list(fit.ci),
        fit_excludes_smallest_n=fit.excludes_smallest_n,
        failures=failures,
        reference_value=target,
        discretization_bias=bias,
        bias_ok=bool(bias_ok),
        label=label or repr(sampler),
    )
    if not bias_ok:
        message = (
            f"{report.label}: discretization bias {bias:.3e} is not below "
            f"{DEFAULTS['bias_fraction']:.0%} of the smallest error {min(means):.3e}"
        )
        if require_bias_ok:
            raise CertificateError(message, {'bias': bias, 'smallest_error': min(means), 'label': report.label})
        experiment_logger.warning(message)
    return report


def intrinsic_dimension_demo(
    curve: Sampler,
    divergence: Any,
    n_values: Sequence[int],
    replications: int,
    seed: int = 0,
    epsilon: float = 1.0,
    cost_power: float = 2.0,
    opts: Optional[SolverOptions] = None,
    jobs: int = 1,
    baseline: bool = True,
    require_bias_ok: bool = True,
) -> IntrinsicDemoReport:
    """Rate on a curve in R^3 next to the ambient-cube baseline with the same settings."""
    params: Dict[str, Any] = dict(
        divergence=divergence, n_values=n_values, replications=replications, seed=seed,
        epsilon=epsilon, cost_power=cost_power, opts=opts, jobs=jobs, require_bias_ok=require_bias_ok,
    )
    curve_report = sample_complexity_run(curve, label=f'curve:{getattr(curve, "name", curve)}', **params)
    baseline_report = None
    if baseline:
        baseline_report = sample_complexity_run(UniformCube(curve.dim), label=f'cube:d={curve.dim}', **params)
    return IntrinsicDemoReport(curve=curve_report, baseline=baseline_report)
