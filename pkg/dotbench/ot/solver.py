"""
Divergence-regularized multi-marginal optimal transport (DOT) solver.

    minimize  <c, pi> + epsilon * D_phi(pi, P)  over couplings pi of mu_1..mu_N

The problem is rescaled to epsilon = 1 (c <- c / epsilon) and solved by block
dual ascent on potentials h_1..h_N. Updating block i solves, for every atom x_i,
the monotone scalar equation

    F(v) = sum_z psi'(v + h^{-i}(z) - c(x_i, z)) P^{-i}(z) = 1

so the generic kind reduces to safeguarded Newton-bisection per atom and the
entropic kind to a log-sum-exp. The optimal coupling has density psi'(h - c)
with respect to P = mu_1 x ... x mu_N.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from dotbench.core.config import DEFAULTS
from dotbench.core.errors import (
    ConfigError,
    ConvergenceError,
    NumericError,
    ValidationError,
)
from dotbench.models.schemas import ProblemConfig, SolverOptions
from dotbench.monitoring.logging import solver_logger
from dotbench.monitoring.metrics import Timer, record_solve
from dotbench.ot import divergence as div
from dotbench.ot.divergence import DivergenceKind, DivergenceSpec
from dotbench.ot.measure import DiscreteMeasure, MarginalTuple, diameter, marginal


class CostKind(str, Enum):
    SQ_EUCLIDEAN_SUM = 'sq_euclidean_sum'
    POWER_DISTANCE = 'power_distance'
    EXPLICIT = 'explicit'


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Cost tensor on the product support with its Lipschitz constant w.r.t. d_{X,p}."""
    kind: CostKind
    tensor: np.ndarray
    lipschitz: float
    power: float = 2.0


def _pairwise_tensor(marginals: MarginalTuple, power: float) -> np.ndarray:
    shape = marginals.shape
    n = len(shape)
    tensor = np.zeros(shape)
    for i in range(n):
        for j in range(i + 1, n):
            if power == 2.0:
                block = cdist(marginals[i].points, marginals[j].points, 'sqeuclidean')
            else:
                block = cdist(marginals[i].points, marginals[j].points) ** power
            view = [1] * n
            view[i], view[j] = shape[i], shape[j]
            tensor = tensor + block.reshape(view)
    return tensor


def pairwise_lipschitz(power: float, diam: float, n_marginals: int, p: float) -> float:
    """L = r D^(r-1) (N-1) N^(1-1/p) for sum_{i<j} ||x_i - x_j||^r on a set of diameter D."""
    return float(power * diam ** (power - 1.0) * (n_marginals - 1) * n_marginals ** (1.0 - 1.0 / p))


def partial_lipschitz(tensor: np.ndarray, marginals: MarginalTuple, i: int) -> float:
    """max over atom pairs (x, x') of marginal i of sup_z |c(x, z) - c(x', z)| / |x - x'|."""
    points = marginals[i].points
    if points.shape[0] < 2:
        return 0.0
    rows = np.moveaxis(tensor, i, 0).reshape(points.shape[0], -1)
    dist = cdist(points, points)
    best = 0.0
    for a in range(points.shape[0] - 1):
        spread = np.abs(rows[a + 1:] - rows[a]).max(axis=1)
        best = max(best, float(np.max(spread / dist[a, a + 1:])))
    return best


def build_cost(
    marginals: MarginalTuple,
    kind: Any = CostKind.SQ_EUCLIDEAN_SUM,
    power: float = 2.0,
    tensor: Optional[Any] = None,
    lipschitz: Optional[float] = None,
    hull: Optional[np.ndarray] = None,
) -> CostSpec:
    """Evaluate a cost on the product support.

    Args:
        marginals: the marginal tuple; its p fixes the product metric
        kind: sq_euclidean_sum, power_distance or explicit
        power: exponent r of power_distance
        tensor: explicit cost values, shape equal to marginals.shape
        lipschitz: user Lipschitz constant for explicit costs
        hull: extra points whose span must be covered by the Lipschitz bound

    Returns:
        CostSpec with tensor and Lipschitz constant
    """
    try:
        kind = CostKind(kind)
    except ValueError:
        raise ConfigError(f"unknown cost kind {kind!r}")
    marginals.check_capacity()

    if kind is CostKind.EXPLICIT:
        if tensor is None:
            raise ConfigError("explicit cost requires a tensor")
        values = np.asarray(tensor, dtype=float)
        if values.shape != marginals.shape:
            raise ValidationError(f"cost tensor shape {values.shape} != product shape {marginals.shape}")
        if lipschitz is None:
            # |c(x) - c(y)| <= sum_i L_i |x_i - y_i| <= ||L||_{p'} d_{X,p}(x, y)
            partial = np.array([partial_lipschitz(values, marginals, i) for i in range(len(marginals))])
            lipschitz = float(np.max(partial)) if marginals.p == 1 else float(
                np.sum(partial ** (marginals.p / (marginals.p - 1.0))) ** (1.0 - 1.0 / marginals.p)
            )
        return CostSpec(kind, values, float(lipschitz), power)

    if len(set(marginals.dims)) != 1:
        raise ValidationError(f"built-in costs need equal dimensions, got {marginals.dims}")
    r = 2.0 if kind is CostKind.SQ_EUCLIDEAN_SUM else float(power)
    if r < 1:
        raise ConfigError(f"cost power must be >= 1, got {r}")
    support = np.vstack([m.points for m in marginals] + ([np.asarray(hull, float)] if hull is not None else []))
    values = _pairwise_tensor(marginals, r)
    L = pairwise_lipschitz(r, diameter(support), len(marginals), marginals.p) if lipschitz is None else lipschitz
    return CostSpec(kind, values, float(L), r)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A DOT instance: marginals, cost, divergence and regularization weight."""
    marginals: MarginalTuple
    cost: CostSpec
    divergence: DivergenceSpec
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.cost.tensor.shape != self.marginals.shape:
            raise ValidationError(
                f"cost tensor shape {self.cost.tensor.shape} != product shape {self.marginals.shape}"
            )
        if not np.all(np.isfinite(self.cost.tensor)):
            raise ValidationError("cost tensor must be finite on the product support")

    @property
    def n_marginals(self) -> int:
        return len(self.marginals)

    @property
    def p(self) -> float:
        return self.marginals.p

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return replace(self, epsilon=float(epsilon))

    def with_marginals(self, marginals: MarginalTuple, hull: Optional[np.ndarray] = None) -> "ProblemSpec":
        """Same cost law on new marginals; explicit tensors cannot be re-evaluated."""
        if self.cost.kind is CostKind.EXPLICIT:
            raise ConfigError("an explicit cost tensor cannot be moved to perturbed marginals")
        cost = build_cost(marginals, self.cost.kind, self.cost.power, hull=hull)
        return replace(self, marginals=marginals, cost=cost)


def problem_from_config(config: Any) -> ProblemSpec:
    """Build a ProblemSpec from a ProblemConfig (or its dict form)."""
    if isinstance(config, dict):
        config = ProblemConfig.model_validate(config)
    marginals = MarginalTuple(tuple(DiscreteMeasure.from_dict(m) for m in config.marginals), config.p)
    cost = build_cost(
        marginals,
        config.cost.kind,
        config.cost.power,
        tensor=config.cost.tensor,
        lipschitz=config.cost.lipschitz,
    )
    return ProblemSpec(marginals, cost, div.from_config(config.divergence), config.epsilon)


def direct_sum(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """h_1 + ... + h_N broadcast to the product tensor."""
    n = len(vectors)
    total = np.zeros(tuple(v.size for v in vectors))
    for i, v in enumerate(vectors):
        view = [1] * n
        view[i] = v.size
        total = total + v.reshape(view)
    return total


@dataclass(frozen=True, eq=False)
class DualPotentials:
    """Per-marginal potentials in original units with the normalization shifts applied."""
    h: Tuple[np.ndarray, ...]
    offsets: np.ndarray

    def direct_sum(self) -> np.ndarray:
        return direct_sum(self.h)

    def rescaled(self, epsilon: float) -> List[np.ndarray]:
        return [v / epsilon for v in self.h]

    def integrals(self, marginals: MarginalTuple) -> np.ndarray:
        return np.array([float(v @ m.weights) for v, m in zip(self.h, marginals)])


@dataclass(frozen=True, eq=False)
class Coupling:
    """N-way probability tensor over the product support of `marginals`."""
    marginals: MarginalTuple
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != self.marginals.shape:
            raise ValidationError(f"coupling shape {mass.shape} != product shape {self.marginals.shape}")
        object.__setattr__(self, 'mass', mass)

    @classmethod
    def product(cls, marginals: MarginalTuple) -> "Coupling":
        return cls(marginals, marginals.product_weights())

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.marginals.product_weights()

    def marginal(self, i: int) -> np.ndarray:
        return marginal(self.mass, i)

    def feasibility_residual(self) -> float:
        return float(max(np.abs(self.marginal(i) - m.weights).max() for i, m in enumerate(self.marginals)))


@dataclass(frozen=True, eq=False)
class Solution:
    potentials: DualPotentials
    coupling: Coupling
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    residual: float
    divergence_label: str = ''
    residuals: List[np.ndarray] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.primal_value

    def to_dict(self) -> Dict[str, Any]:
        return {
            'divergence': self.divergence_label,
            'value': self.primal_value,
            'primal_value': self.primal_value,
            'dual_value': self.dual_value,
            'gap': self.gap,
            'iterations': self.iterations,
            'max_residual': self.residual,
            'residuals': [r.tolist() for r in self.residuals],
            'potentials': [h.tolist() for h in self.potentials.h],
            'coupling': self.coupling.mass.tolist(),
        }


def _solve_atoms_generic(
    spec: DivergenceSpec,
    B: np.ndarray,
    W: np.ndarray,
    root_tol: float,
    max_steps: int,
    doublings: int,
) -> np.ndarray:
    """Vectorized safeguarded Newton-bisection for sum_k psi'(v_a + B[a, k]) W[k] = 1."""
    n = B.shape[0]
    # psi'(x0) = 1, so F(x0 - max B) <= 1 <= F(x0 - min B) whenever W sums to one
    lo = spec.x0 - B.max(axis=1)
    hi = spec.x0 - B.min(axis=1)
    width = np.maximum(hi - lo, 1.0)
    for expansion in range(doublings + 1):
        f_lo = np.asarray(div.psi_prime(spec, lo[:, None] + B)) @ W - 1.0
        f_hi = np.asarray(div.psi_prime(spec, hi[:, None] + B)) @ W - 1.0
        bad_lo, bad_hi = f_lo > root_tol, f_hi < -root_tol
        if not (bad_lo.any() or bad_hi.any()):
            break
        if expansion == doublings:
            raise NumericError(
                f"root bracket did not close after {doublings} doublings",
                {'divergence': spec.label, 'atoms': int(np.count_nonzero(bad_lo | bad_hi))},
            )
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
        width = width * 2.0

    v = 0.5 * (lo + hi)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        args = v[idx, None] + B[idx]
        f = np.asarray(div.psi_prime(spec, args)) @ W - 1.0
        df = np.asarray(div.psi_second(spec, args)) @ W
        lo[idx] = np.where(f < 0, v[idx], lo[idx])
        hi[idx] = np.where(f > 0, v[idx], hi[idx])

        step = np.divide(f, df, out=np.full_like(f, np.nan), where=df > 0)
        newton = v[idx] - step
        inside = np.isfinite(newton) & (newton > lo[idx]) & (newton < hi[idx])
        proposal = np.where(inside, newton, 0.5 * (lo[idx] + hi[idx]))

        converged = np.abs(f) <= root_tol
        span = hi[idx] - lo[idx]
        collapsed = span <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(v[idx]))
        # a collapsed bracket is a root only if F is continuous across it
        stuck = collapsed & ~converged & (np.abs(f) > root_tol + df * span + 64 * np.finfo(float).eps)
        if stuck.any():
            raise NumericError(
                "root bracket collapsed without meeting the root tolerance",
                {'divergence': spec.label, 'atoms': int(stuck.sum()), 'max_abs_f': float(np.abs(f[stuck]).max())},
            )
        done = converged | collapsed
        v[idx] = np.where(done, v[idx], proposal)
        active[idx[done]] = False

    if active.any():
        raise NumericError(
            f"root solve did not converge in {max_steps} steps",
            {'divergence': spec.label, 'atoms': int(active.sum())},
        )
    return v


def _solve_atoms_entropic(B: np.ndarray, W: np.ndarray) -> np.ndarray:
    # e^{v} sum_k e^{B - 1} W = 1
    return -logsumexp(B - 1.0, b=W[None, :], axis=1)


class DOTSolver:
    """Generalized Sinkhorn iteration for one ProblemSpec.

    Internal state lives in rescaled units (epsilon = 1); potentials are
    multiplied by epsilon again when the solution is assembled.
    """

    def __init__(self, prob: ProblemSpec, opts: Optional[SolverOptions] = None):
        self.prob = prob
        self.opts = opts or SolverOptions()
        self.spec = prob.divergence
        if not div.is_dual_regular(self.spec):
            raise ConfigError(f"divergence {self.spec.label} is not dual regular")
        self.cost = prob.cost.tensor / prob.epsilon
        self.weights = [m.weights for m in prob.marginals]
        self.P = prob.marginals.product_weights()
        n = prob.n_marginals
        self.h = [np.full(m.size, self.spec.x0 / n) for m in prob.marginals]
        self.iterations = 0

    # -- block updates ---------------------------------------------------
    def block_inputs(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """(B, W): B[a, z] = h^{-i}(z) - c~(x_a, z) and W = P^{-i} flattened."""
        others = direct_sum([self.h[j] if j != i else np.zeros_like(self.h[i]) for j in range(len(self.h))])
        B = np.moveaxis(others - self.cost, i, 0).reshape(self.h[i].size, -1)
        W = self.prob.marginals.leave_one_out_weights(i).reshape(-1)
        return B, W

    def solve_rows(self, B: np.ndarray, W: np.ndarray) -> np.ndarray:
        if self.spec.kind is DivergenceKind.ENTROPIC:
            v = _solve_atoms_entropic(B, W)
            if self.opts.debug_crosscheck:
                check = self._generic(B, W)
                err = float(np.max(np.abs(check - v)))
                if err > 1e-8 * max(1.0, float(np.max(np.abs(v)))):
                    raise NumericError("closed-form entropic update disagrees with the root finder",
                                       {'max_abs_diff': err})
                solver_logger.debug(f"entropic cross-check ok, max diff {err:.2e}")
            return v
        return self._generic(B, W)

    def _generic(self, B: np.ndarray, W: np.ndarray) -> np.ndarray:
        return _solve_atoms_generic(
            self.spec, B, W, self.opts.root_tol, DEFAULTS['root_max_steps'], DEFAULTS['bracket_doublings'],
        )

    def update_block(self, i: int):
        B, W = self.block_inputs(i)
        if self.opts.sweep == 'jacobi' and self.opts.jobs > 1 and B.shape[0] > 1:
            chunk = DEFAULTS['jacobi_chunk']
            pieces = Parallel(n_jobs=self.opts.jobs, prefer='threads')(
                delayed(self.solve_rows)(B[s:s + chunk], W) for s in range(0, B.shape[0], chunk)
            )
            self.h[i] = np.concatenate(pieces)
        else:
            self.h[i] = self.solve_rows(B, W)

    def sweep(self):
        for i in range(len(self.h)):
            self.update_block(i)
        self.iterations += 1

    # -- diagnostics -----------------------------------------------------
    def density(self) -> np.ndarray:
        return np.asarray(div.psi_prime(self.spec, direct_sum(self.h) - self.cost))

    def residuals(self) -> List[np.ndarray]:
        """pi_i / mu_i - 1 per marginal; zero exactly at a dual optimizer."""
        mass = self.density() * self.P
        return [marginal(mass, i) / w - 1.0 for i, w in enumerate(self.weights)]

    def max_residual(self) -> float:
        return float(max(np.abs(r).max() for r in self.residuals()))

    def normalize(self) -> np.ndarray:
        """Shift potentials so that every integral of h_i dmu_i is equal; h is unchanged."""
        integrals = np.array([h @ w for h, w in zip(self.h, self.weights)])
        offsets = integrals.mean() - integrals
        self.h = [h + o for h, o in zip(self.h, offsets)]
        return offsets

    # -- driver ----------------------------------------------------------
    def run(self) -> Solution:
        label = self.spec.label
        timer = Timer()
        try:
            with timer:
                residual = self.max_residual()
                while residual > self.opts.tol:
                    if self.iterations >= self.opts.max_iters:
                        raise ConvergenceError(
                            f"no convergence after {self.iterations} sweeps (residual {residual:.3e})",
                            residual=residual,
                            iterations=self.iterations,
                            context={'divergence': label, 'epsilon': self.prob.epsilon},
                        )
                    self.sweep()
                    residual = self.max_residual()
                    solver_logger.debug(f"sweep {self.iterations}: residual {residual:.3e}")
        except Exception:
            record_solve(label, 'failure', self.iterations, timer.elapsed)
            raise
        offsets = self.normalize()
        solution = self.assemble(residual, offsets)
        record_solve(label, 'success', self.iterations, timer.elapsed)
        return solution

    def assemble(self, residual: float, offsets: np.ndarray) -> Solution:
        eps = self.prob.epsilon
        y = direct_sum(self.h) - self.cost
        density = np.asarray(div.psi_prime(self.spec, y))
        mass = density * self.P
        coupling = Coupling(self.prob.marginals, mass)
        primal = float(np.sum(self.prob.cost.tensor * mass)) + eps * div.divergence_value(self.spec, density, self.P)
        dual = eps * (
            sum(float(h @ w) for h, w in zip(self.h, self.weights))
            - float(np.sum(np.asarray(div.psi(self.spec, y)) * self.P))
        )
        potentials = DualPotentials(tuple(eps * h for h in self.h), eps * offsets)
        return Solution(
            potentials=potentials,
            coupling=coupling,
            primal_value=primal,
            dual_value=dual,
            gap=primal - dual,
            iterations=self.iterations,
            residual=residual,
            divergence_label=self.spec.label,
            residuals=self.residuals(),
        )


def solve(prob: ProblemSpec, opts: Optional[SolverOptions] = None) -> Solution:
    """Solve OT_phi(mu) and return potentials, coupling, values and gap."""
    return DOTSolver(prob, opts).run()


def root_update(
    i: int,
    atom: int,
    h: Sequence[np.ndarray],
    prob: ProblemSpec,
    opts: Optional[SolverOptions] = None,
) -> float:
    """Solve F(x_i, v) = 1 for one atom with potentials `h` in rescaled units."""
    solver = DOTSolver(prob, opts)
    solver.h = [np.asarray(v, dtype=float).copy() for v in h]
    B, W = solver.block_inputs(i)
    return float(solver.solve_rows(B[atom:atom + 1], W)[0])


def objective(pi: Coupling, prob: ProblemSpec) -> float:
    """<c, pi> + epsilon * D_phi(pi, P); inf when pi charges a P-null cell."""
    if pi.mass.shape != prob.marginals.shape:
        raise ValidationError(f"coupling shape {pi.mass.shape} != product shape {prob.marginals.shape}")
    P = prob.marginals.product_weights()
    if np.any((P == 0) & (pi.mass > 0)):
        return float('inf')
    return float(np.sum(prob.cost.tensor * pi.mass)) + prob.epsilon * divergence_of(pi, prob)


def divergence_of(pi: Coupling, prob: ProblemSpec) -> float:
    """D_phi(pi, P) = sum phi(d pi / dP) P."""
    P = prob.marginals.product_weights()
    return div.divergence_value(prob.divergence, np.maximum(pi.mass / P, 0.0), P)


def support_count(pi: Coupling, threshold: float = 0.0) -> int:
    """Number of cells with density > threshold * max density."""
    if threshold < 0:
        raise ValidationError(f"threshold must be >= 0, got {threshold}")
    density = pi.density
    return int(np.count_nonzero(density > threshold * density.max()))


def potential_lipschitz(h: DualPotentials, marginals: MarginalTuple) -> List[float]:
    """Largest difference quotient |h_i(x) - h_i(x')| / |x - x'| per marginal."""
    quotients = []
    for v, m in zip(h.h, marginals):
        if m.size < 2:
            quotients.append(0.0)
            continue
        dist = cdist(m.points, m.points)
        diff = np.abs(v[:, None] - v[None, :])
        upper = np.triu_indices(m.size, k=1)
        quotients.append(float(np.max(diff[upper] / dist[upper])))
    return quotients


def _scaled_state(potentials: DualPotentials, prob: ProblemSpec) -> Tuple[np.ndarray, np.ndarray]:
    y = direct_sum(potentials.rescaled(prob.epsilon)) - prob.cost.tensor / prob.epsilon
    return y, prob.marginals.product_weights()


def first_order_residuals(potentials: DualPotentials, prob: ProblemSpec) -> List[np.ndarray]:
    """F_i(x_i) - 1 at every atom of every marginal."""
    y, P = _scaled_state(potentials, prob)
    mass = np.asarray(div.psi_prime(prob.divergence, y)) * P
    return [marginal(mass, i) / m.weights - 1.0 for i, m in enumerate(prob.marginals)]


def dual_curvature(potentials: DualPotentials, prob: ProblemSpec) -> List[np.ndarray]:
    """g_i(x_i) = sum psi''(h - c~) P^{-i}, the slope of F in v."""
    y, P = _scaled_state(potentials, prob)
    curvature = np.asarray(div.psi_second(prob.divergence, y)) * P
    return [marginal(curvature, i) / m.weights for i, m in enumerate(prob.marginals)]


def sinkhorn_reference(
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    epsilon: float,
    tol: float = 1e-12,
    max_iters: int = 100_000,
) -> Tuple[float, np.ndarray]:
    """Classical log-domain Sinkhorn for <C, pi> + epsilon KL(pi | a x b).

    Returns:
        (value, plan)
    """
    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    for iteration in range(max_iters):
        f = -epsilon * logsumexp((g[None, :] - cost) / epsilon + log_b[None, :], axis=1)
        g = -epsilon * logsumexp((f[:, None] - cost) / epsilon + log_a[:, None], axis=0)
        log_plan = (f[:, None] + g[None, :] - cost) / epsilon + log_a[:, None] + log_b[None, :]
        plan = np.exp(log_plan)
        if np.abs(plan.sum(axis=1) - a).max() <= tol:
            break
    else:
        raise ConvergenceError("reference Sinkhorn did not converge", residual=float(
            np.abs(plan.sum(axis=1) - a).max()), iterations=max_iters)
    ratio = log_plan - log_a[:, None] - log_b[None, :]
    value = float(np.sum(cost * plan) + epsilon * np.sum(plan * ratio))
    return value, plan


def lipschitz_epsilon_sweep(
    prob: ProblemSpec,
    epsilons: Sequence[float],
    opts: Optional[SolverOptions] = None,
) -> List[Dict[str, float]]:
    """Potential difference quotients against the cost's Lipschitz bounds for several epsilon."""
    partial = [partial_lipschitz(prob.cost.tensor, prob.marginals, i) for i in range(prob.n_marginals)]
    rows = []
    for eps in epsilons:
        solution = solve(prob.with_epsilon(eps), opts)
        quotients = potential_lipschitz(solution.potentials, prob.marginals)
        for i, quotient in enumerate(quotients):
            rows.append({
                'epsilon': float(eps),
                'marginal': i,
                'quotient': quotient,
                'partial_bound': partial[i],
                'lipschitz': prob.cost.lipschitz,
            })
    return rows
