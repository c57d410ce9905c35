"""
Exact discrete optimal transport.

The transportation LP is solved with the HiGHS dual simplex (scipy.optimize.linprog)
and every solution is certified by complementary slackness against the dual
prices the solver returns.
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from dotbench.core.config import DEFAULTS
from dotbench.core.errors import CapacityError, CertificateError, NumericError, ValidationError
from dotbench.monitoring.metrics import ENABLE_METRICS, exact_ot_solves_total
from dotbench.ot.measure import DiscreteMeasure, MarginalTuple, product_cost_matrix, product_indices

if TYPE_CHECKING:
    from dotbench.ot.solver import Coupling


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal plan between two discrete measures with its dual prices."""
    rows: DiscreteMeasure
    cols: DiscreteMeasure
    mass: np.ndarray
    u: np.ndarray
    v: np.ndarray
    cost: float

    def feasibility_residual(self) -> float:
        return float(max(
            np.abs(self.mass.sum(axis=1) - self.rows.weights).max(),
            np.abs(self.mass.sum(axis=0) - self.cols.weights).max(),
        ))

    def kernel(self) -> np.ndarray:
        """Row-normalized plan, K(x, .) = mass(x, .) / mu(x)."""
        return self.mass / self.rows.weights[:, None]


def _check_size(m: int, n: int, limit: Optional[int]):
    limit = DEFAULTS['exact_ot_atoms'] if limit is None else limit
    if m > limit or n > limit:
        raise CapacityError(
            f"exact transport between {m} and {n} atoms exceeds the {limit}-atom limit",
            {'rows': m, 'cols': n, 'limit': limit},
        )


def _constraint_matrix(m: int, n: int) -> sparse.csr_matrix:
    # row sums then column sums; the last column constraint is implied
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    return sparse.vstack([rows, cols]).tocsr()[:-1]


def certify(cost: np.ndarray, mass: np.ndarray, u: np.ndarray, v: np.ndarray,
            tol: Optional[float] = None) -> float:
    """Complementary-slackness check; returns the slackness sum or raises CertificateError."""
    tol = DEFAULTS['exact_ot_tol'] if tol is None else tol
    scale = max(1.0, float(np.abs(cost).max()))
    reduced = cost - u[:, None] - v[None, :]
    worst = float(reduced.min())
    slackness = float(np.sum(mass * np.abs(reduced)))
    if worst < -tol * scale or slackness > tol * scale:
        raise CertificateError(
            "transport plan failed its optimality certificate",
            {'min_reduced_cost': worst, 'slackness': slackness, 'scale': scale},
        )
    return slackness


def transport(a: np.ndarray, b: np.ndarray, cost: np.ndarray,
              limit: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve min <cost, mass> over couplings of weight vectors a and b.

    Returns:
        (mass, u, v) with u, v the dual prices (v normalized so its last entry is 0)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = cost.shape
    if (m, n) != (a.size, b.size):
        raise ValidationError(f"cost shape {cost.shape} does not match weights ({a.size}, {b.size})")
    _check_size(m, n, limit)

    result = linprog(
        cost.reshape(-1),
        A_eq=_constraint_matrix(m, n),
        b_eq=np.concatenate([a, b])[:-1],
        bounds=(0, None),
        method='highs-ds',
        options={'primal_feasibility_tolerance': 1e-10, 'dual_feasibility_tolerance': 1e-10},
    )
    if result.status != 0:
        raise NumericError(f"transportation LP failed: {result.message}", {'status': result.status})
    if ENABLE_METRICS:
        exact_ot_solves_total.inc()

    mass = np.maximum(result.x.reshape(m, n), 0.0)
    prices = np.append(result.eqlin.marginals, 0.0)
    u, v = prices[:m], prices[m:]
    certify(cost, mass, u, v)
    return mass, u, v


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float,
                limit: Optional[int] = None) -> Tuple[float, TransportPlan]:
    """W_p(mu, nu) and an optimal plan."""
    if mu.dim != nu.dim:
        raise ValidationError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if p < 1 or not np.isfinite(p):
        raise ValidationError(f"p must be a finite real >= 1, got {p}")
    cost = cdist(mu.points, nu.points) ** p
    mass, u, v = transport(mu.weights, nu.weights, cost, limit)
    total = float(np.sum(cost * mass))
    plan = TransportPlan(mu, nu, mass, u, v, total)
    return max(total, 0.0) ** (1.0 / p), plan


def marginal_tuple_distance(mu: MarginalTuple, nu: MarginalTuple, p: float) -> float:
    """W_p(mu; nu) = (sum_i W_p(mu_i, nu_i)^p)^(1/p)."""
    if len(mu) != len(nu) or mu.dims != nu.dims:
        raise ValidationError(
            "marginal tuples differ in length or dimensions",
            {'left': mu.dims, 'right': nu.dims},
        )
    total = sum(wasserstein(a, b, p)[0] ** p for a, b in zip(mu, nu))
    return float(total ** (1.0 / p))


def _flatten(coupling: "Coupling") -> Tuple[np.ndarray, np.ndarray]:
    flat = coupling.mass.reshape(-1)
    keep = np.flatnonzero(flat > 0)
    idx = product_indices(coupling.mass.shape)[keep]
    weights = flat[keep]
    return idx, weights / weights.sum()


def coupling_distance(pi: "Coupling", other: "Coupling", q: float,
                      limit: Optional[int] = None) -> float:
    """W_q between two couplings as measures on the product space with metric d_{X,q}."""
    left, right = pi.marginals, other.marginals
    if len(left) != len(right) or left.dims != right.dims:
        raise ValidationError("couplings live on different product spaces")
    idx_x, a = _flatten(pi)
    idx_y, b = _flatten(other)
    cost = product_cost_matrix(
        [m.points for m in left], idx_x, [m.points for m in right], idx_y, q,
    )
    mass, _, _ = transport(a, b, cost, limit)
    return float(max(np.sum(cost * mass), 0.0) ** (1.0 / q))
