"""
Shadow couplings, strong-convexity certification and optimizer stability.

The shadow of a coupling pi of mu on a perturbed tuple mu~ pushes pi through
the product of per-marginal optimal transport kernels K_i = theta_i / mu_i.
The stability experiment perturbs the marginals at a sequence of W_p levels
and compares the optimizers with exact W_q.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist

from dotbench.core.config import DEFAULTS
from dotbench.core.errors import ConvergenceError, DotBenchError, ValidationError
from dotbench.models.schemas import (
    PerturbConfig,
    SolverOptions,
    StabilityReport,
    StabilityRow,
    StrongConvexityRow,
)
from dotbench.monitoring.logging import experiment_logger, log_experiment_row
from dotbench.monitoring.metrics import track_experiment_task
from dotbench.ot import divergence as div
from dotbench.ot.divergence import DivergenceSpec
from dotbench.ot.exact import TransportPlan, coupling_distance, marginal_tuple_distance, wasserstein
from dotbench.ot.measure import DiscreteMeasure, MarginalTuple, jitter, make_rng, marginal, translate
from dotbench.ot.solver import (
    Coupling,
    ProblemSpec,
    Solution,
    build_cost,
    objective,
    solve,
)


@dataclass(frozen=True, eq=False)
class ShadowResult:
    shadow: Coupling
    transport_cost: float
    divergence_before: float
    divergence_after: float
    plans: List[TransportPlan]


def shadow(pi: Coupling, target: MarginalTuple, p: float, spec: DivergenceSpec) -> ShadowResult:
    """Move `pi` onto `target` with the product of optimal W_p kernels."""
    source = pi.marginals
    if len(source) != len(target):
        raise ValidationError(f"cannot shadow {len(source)} marginals onto {len(target)}")
    plans = [wasserstein(a, b, p)[1] for a, b in zip(source, target)]

    mass = pi.mass
    for plan in plans:
        # contracting axis 0 appends the new axis last, so N steps restore the order
        mass = np.tensordot(mass, plan.kernel(), axes=([0], [0]))

    cost_p = 0.0
    for i, plan in enumerate(plans):
        kernel_cost = (plan.kernel() * cdist(plan.rows.points, plan.cols.points) ** p).sum(axis=1)
        cost_p += float(pi.marginal(i) @ kernel_cost)

    result = Coupling(target, mass)
    P = source.product_weights()
    P_target = target.product_weights()
    return ShadowResult(
        shadow=result,
        transport_cost=cost_p ** (1.0 / p),
        divergence_before=div.divergence_value(spec, pi.mass / P, P),
        divergence_after=div.divergence_value(spec, np.maximum(mass / P_target, 0.0), P_target),
        plans=plans,
    )


def project_to_marginals(
    tensor: np.ndarray,
    marginals: MarginalTuple,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
) -> Coupling:
    """Iterative proportional fitting of a positive tensor onto Pi(mu)."""
    tol = DEFAULTS['ipf_tol'] if tol is None else tol
    max_iters = DEFAULTS['ipf_max_iters'] if max_iters is None else max_iters
    mass = np.array(tensor, dtype=float)
    if mass.shape != marginals.shape or np.any(mass <= 0):
        raise ValidationError("iterative fitting needs a positive tensor of the product shape")
    n = len(marginals)
    for iteration in range(max_iters):
        for i, m in enumerate(marginals):
            view = [1] * n
            view[i] = m.size
            mass *= (m.weights / marginal(mass, i)).reshape(view)
        residual = max(np.abs(marginal(mass, i) - m.weights).max() for i, m in enumerate(marginals))
        if residual <= tol:
            return Coupling(marginals, mass)
    raise ConvergenceError("iterative proportional fitting did not converge",
                           residual=float(residual), iterations=max_iters)


def random_feasible_coupling(
    pi_star: Coupling,
    rng: np.random.Generator,
    mix: Optional[float] = None,
    sigma: float = 1.0,
) -> Coupling:
    """(1 - t) pi* + t Q with Q a fitted random tilt of P and t ~ U(0, 1] unless given."""
    marginals = pi_star.marginals
    tilt = marginals.product_weights() * np.exp(sigma * rng.standard_normal(marginals.shape))
    other = project_to_marginals(tilt, marginals)
    t = float(1.0 - rng.random()) if mix is None else float(mix)
    return Coupling(marginals, (1.0 - t) * pi_star.mass + t * other.mass)


def _rho(marginals: MarginalTuple, base_index: int, q: float) -> np.ndarray:
    """rho(x) = d_{X,p}(x0, x)^q with x0 the product atom at flat index `base_index`."""
    p = marginals.p
    base = np.unravel_index(base_index, marginals.shape)
    n = len(marginals)
    total = np.zeros(marginals.shape)
    for i, m in enumerate(marginals):
        view = [1] * n
        view[i] = m.size
        part = np.linalg.norm(m.points - m.points[base[i]], axis=1) ** p
        total = total + part.reshape(view)
    return total ** (q / p)


def strong_convexity_check(
    prob: ProblemSpec,
    pi: Coupling,
    q: float = 1.0,
    solution: Optional[Solution] = None,
    base_index: int = 0,
    opts: Optional[SolverOptions] = None,
) -> Dict[str, Any]:
    """Evaluate (sum rho |pi* - pi|)^2 <= 4 max(l1, l2) (int rho^2 d(P + pi* + pi)) (F(pi) - F(pi*)) / eps."""
    residual = pi.feasibility_residual()
    if residual > DEFAULTS['feasibility_tol']:
        raise ValidationError("coupling is not feasible for the problem's marginals", {'residual': residual})
    lambda1, lambda2 = div.convexity_params(prob.divergence)
    solution = solution or solve(prob, opts)
    pi_star = solution.coupling

    rho = _rho(prob.marginals, base_index, q)
    lhs = float(np.sum(rho * np.abs(pi_star.mass - pi.mass))) ** 2
    weight = float(np.sum(rho ** 2 * (prob.marginals.product_weights() + pi_star.mass + pi.mass)))
    excess = (objective(pi, prob) - objective(pi_star, prob)) / prob.epsilon
    rhs = 4.0 * max(lambda1, lambda2) * weight * excess
    scale = max(1.0, abs(lhs), abs(rhs))
    ok = lhs <= rhs + DEFAULTS['strong_convexity_scale_tol'] * scale
    return {'lhs': lhs, 'rhs': rhs, 'slack': rhs - lhs, 'ok': bool(ok)}


def random_problem(
    rng: np.random.Generator,
    spec: DivergenceSpec,
    epsilon: float = 1.0,
    n_marginals: int = 2,
    max_atoms: int = 6,
) -> ProblemSpec:
    """Small random 1-D instance with Dirichlet weights and the quadratic pairwise cost."""
    measures = []
    for _ in range(n_marginals):
        size = int(rng.integers(2, max_atoms + 1))
        points = np.sort(rng.random(size))
        weights = rng.dirichlet(np.full(size, 2.0))
        weights = np.maximum(weights, 1e-3)
        measures.append(DiscreteMeasure(points, weights / weights.sum()))
    marginals = MarginalTuple(tuple(measures), 2.0)
    return ProblemSpec(marginals, build_cost(marginals), spec, epsilon)


def strong_convexity_suite(
    divergences: Sequence[Any],
    pairs: int = 200,
    couplings_per_instance: int = 10,
    q: float = 1.0,
    epsilon: float = 1.0,
    seed: int = 0,
    opts: Optional[SolverOptions] = None,
) -> List[StrongConvexityRow]:
    """Check the strong-convexity inequality on `pairs` random (instance, coupling) pairs per divergence."""
    rows: List[StrongConvexityRow] = []
    instances = -(-pairs // couplings_per_instance)
    for d_index, fragment in enumerate(divergences):
        spec = div.from_config(fragment)
        done = 0
        for k in range(instances):
            rng = make_rng(seed, d_index, k)
            prob = random_problem(rng, spec, epsilon, n_marginals=2 + k % 2)
            solution = solve(prob, opts)
            for _ in range(min(couplings_per_instance, pairs - done)):
                pi = random_feasible_coupling(solution.coupling, rng)
                check = strong_convexity_check(prob, pi, q, solution=solution)
                rows.append(StrongConvexityRow(divergence=spec.label, instance=k, **check))
                done += 1
        failed = sum(not r.ok for r in rows if r.divergence == spec.label)
        experiment_logger.info(f"strong convexity {spec.label}: {done} pairs, {failed} violations")
    return rows


def jitter_perturbation(
    marginals: MarginalTuple,
    delta_target: float,
    rng: np.random.Generator,
    dirichlet: Optional[float] = None,
) -> MarginalTuple:
    """Jitter every atom by delta_target / N^(1/p) so that W_p(mu; mu~) <= delta_target."""
    amplitude = delta_target / len(marginals) ** (1.0 / marginals.p)
    return MarginalTuple(tuple(jitter(m, amplitude, rng, dirichlet) for m in marginals), marginals.p)


def translation_perturbation(
    marginals: MarginalTuple,
    delta_target: float,
    rng: np.random.Generator,
) -> MarginalTuple:
    """Translate each marginal by a random vector of norm delta_target / N^(1/p)."""
    amplitude = delta_target / len(marginals) ** (1.0 / marginals.p)
    moved = []
    for m in marginals:
        direction = rng.standard_normal(m.dim)
        moved.append(translate(m, amplitude * direction / np.linalg.norm(direction)))
    return MarginalTuple(tuple(moved), marginals.p)


def perturb(marginals: MarginalTuple, level: float, rng: np.random.Generator,
            perturbation: Optional[PerturbConfig] = None) -> MarginalTuple:
    perturbation = perturbation or PerturbConfig()
    if level == 0:
        return marginals
    if perturbation.kind == 'translation':
        return translation_perturbation(marginals, level, rng)
    return jitter_perturbation(marginals, level, rng, perturbation.dirichlet)


def _hull(*tuples: MarginalTuple) -> np.ndarray:
    return np.vstack([m.points for t in tuples for m in t])


def value_continuity_check(
    prob: ProblemSpec,
    target: MarginalTuple,
    opts: Optional[SolverOptions] = None,
    solution: Optional[Solution] = None,
    perturbed: Optional[Solution] = None,
) -> Dict[str, float]:
    """|OT(mu) - OT(mu~)| against L * W_p(mu; mu~), with L taken on the hull of both supports."""
    hull = _hull(prob.marginals, target)
    lipschitz = build_cost(prob.marginals, prob.cost.kind, prob.cost.power, hull=hull).lipschitz
    other = prob.with_marginals(target, hull=hull)
    solution = solution or solve(prob, opts)
    perturbed = perturbed or solve(other, opts)
    delta = marginal_tuple_distance(prob.marginals, target, prob.p)
    gap = abs(solution.value - perturbed.value)
    bound = lipschitz * delta
    tol = DEFAULTS['continuity_rel_tol']
    return {
        'value': solution.value,
        'value_perturbed': perturbed.value,
        'value_gap': gap,
        'delta': delta,
        'lipschitz': lipschitz,
        'bound': bound,
        'ok': bool(gap <= bound * (1.0 + tol) + 1e-12 * max(1.0, abs(solution.value))),
    }


@track_experiment_task('stability')
def _stability_level(
    prob: ProblemSpec,
    solution: Solution,
    level_index: int,
    level: float,
    q: float,
    seed: int,
    perturbation: Optional[PerturbConfig],
    opts: Optional[SolverOptions],
) -> StabilityRow:
    try:
        rng = make_rng(seed, level_index)
        target = perturb(prob.marginals, level, rng, perturbation)
        hull = _hull(prob.marginals, target)
        other = prob.with_marginals(target, hull=hull)
        perturbed = solve(other, opts)
        continuity = value_continuity_check(prob, target, opts, solution=solution, perturbed=perturbed)
        delta = continuity['delta']
        wq = coupling_distance(solution.coupling, perturbed.coupling, q) if level > 0 else 0.0
        n = prob.n_marginals
        lipschitz = continuity['lipschitz']
        ratio = 0.0
        if delta > 0:
            ratio = max(wq - n ** (1.0 / q - 1.0 / prob.p) * delta, 0.0) / (lipschitz * delta) ** (1.0 / (2 * q))
        return StabilityRow(
            level=level,
            delta=delta,
            wq=wq,
            ratio=ratio,
            value=continuity['value'],
            value_perturbed=continuity['value_perturbed'],
            value_gap=continuity['value_gap'],
            continuity_bound=continuity['bound'],
            continuity_ok=continuity['ok'],
        )
    except DotBenchError as exc:
        raise exc.annotate(level=level, level_index=level_index)


def log_log_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def stability_experiment(
    prob: ProblemSpec,
    perturbation: Optional[PerturbConfig] = None,
    q: float = 2.0,
    levels: Optional[Sequence[float]] = None,
    seed: int = 0,
    opts: Optional[SolverOptions] = None,
    jobs: int = 1,
) -> StabilityReport:
    """Solve the base and perturbed problems per level and compare optimizers in W_q."""
    if not 1.0 <= q <= prob.p:
        raise ValidationError(f"q must lie in [1, p] = [1, {prob.p}], got {q}")
    levels = list(DEFAULTS['stability_levels'] if levels is None else levels)
    solution = solve(prob, opts)
    rows = Parallel(n_jobs=jobs, prefer='threads')(
        delayed(_stability_level)(prob, solution, k, level, q, seed, perturbation, opts)
        for k, level in enumerate(levels)
    )
    for row in rows:
        log_experiment_row('stability', {'level': row.level, 'delta': row.delta, 'wq': row.wq, 'ratio': row.ratio})

    positive = [r.ratio for r in rows if r.ratio > 0]
    spread = max(positive) / min(positive) if positive else 1.0
    return StabilityReport(
        rows=rows,
        slope=log_log_slope([r.delta for r in rows], [r.wq for r in rows]),
        ratio_spread=float(spread),
        lipschitz=prob.cost.lipschitz,
        n_marginals=prob.n_marginals,
        p=prob.p,
        q=q,
    )
