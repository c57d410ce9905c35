"""
phi-divergence generators, their convex conjugates and regularity metadata.

Three families are built in, each with a closed-form conjugate:

* Entropic:      phi(x) = x log x,                         psi(y) = exp(y - 1)
* Alpha(a):      phi(x) = (x^a - a(x - 1) - 1)/(a(a - 1)),  psi(y) = (u^b - 1)/a
                 with u = (1 + (a - 1) y)_+ and b = a/(a - 1)
* PolyDual(b):   psi(y) = (y_+)^b + k_b, phi its conjugate,
                 k_b = (b - 1) b^(-b/(b - 1)) so that phi(1) = 0

The regularization weight epsilon never enters a DivergenceSpec; the solver
rescales the cost instead.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import xlogy

from dotbench.core.errors import ConfigError, DomainError, UnsupportedDivergenceError

ArrayLike = Union[float, np.ndarray]


class DivergenceKind(str, Enum):
    ENTROPIC = 'entropic'
    ALPHA = 'alpha'
    POLY_DUAL = 'poly_dual'


@dataclass(frozen=True)
class DivergenceSpec:
    """A conjugate pair (phi, psi) with its regularity metadata."""
    kind: DivergenceKind
    alpha: Optional[float] = None
    beta: Optional[int] = None
    lambda1: Optional[float] = field(init=False, default=None)
    lambda2: Optional[float] = field(init=False, default=None)
    x0: float = field(init=False, default=0.0)
    delta: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind is DivergenceKind.ENTROPIC:
            params = (0.0, 1.0, 1.0, 1.0)
        elif self.kind is DivergenceKind.ALPHA:
            a = self.alpha
            if a is None or not 1.0 < a <= 2.0:
                raise ConfigError(f"alpha must lie in (1, 2], got {a}")
            # psi'' > 0 exactly where 1 + (a - 1) y > 0
            params = (a - 1.0, 2.0 - a, 0.0, 0.5 / (a - 1.0))
        elif self.kind is DivergenceKind.POLY_DUAL:
            b = self.beta
            if b is None or int(b) != b or b < 2:
                raise ConfigError(f"poly_beta must be an integer >= 2, got {b}")
            x0 = float(b) ** (-1.0 / (b - 1))
            lam = (2.0, 0.0) if b == 2 else (None, None)
            params = (lam[0], lam[1], x0, 0.5 * x0)
        else:
            raise ConfigError(f"unknown divergence kind {self.kind!r}")
        for name, value in zip(('lambda1', 'lambda2', 'x0', 'delta'), params):
            object.__setattr__(self, name, value)

    @property
    def label(self) -> str:
        if self.kind is DivergenceKind.ENTROPIC:
            return 'entropic'
        if self.kind is DivergenceKind.ALPHA:
            return f'alpha-{self.alpha:g}'
        return f'poly-{self.beta}'

    @property
    def shift(self) -> float:
        """Constant k_b added to (y_+)^b for PolyDual so that phi(1) = 0."""
        if self.kind is not DivergenceKind.POLY_DUAL:
            return 0.0
        b = self.beta
        return (b - 1.0) * b ** (-b / (b - 1.0))


def entropic() -> DivergenceSpec:
    return DivergenceSpec(DivergenceKind.ENTROPIC)


def alpha_divergence(alpha: float) -> DivergenceSpec:
    return DivergenceSpec(DivergenceKind.ALPHA, alpha=float(alpha))


def poly_dual(beta: int) -> DivergenceSpec:
    return DivergenceSpec(DivergenceKind.POLY_DUAL, beta=int(beta))


def from_config(fragment: Any) -> DivergenceSpec:
    """Build a spec from "entropic" | {"alpha": a} | {"poly_beta": b} (or the pydantic models)."""
    if isinstance(fragment, DivergenceSpec):
        return fragment
    if hasattr(fragment, 'model_dump'):
        fragment = fragment.model_dump()
    if fragment == 'entropic':
        return entropic()
    if isinstance(fragment, dict) and len(fragment) == 1:
        if 'alpha' in fragment:
            return alpha_divergence(fragment['alpha'])
        if 'poly_beta' in fragment:
            return poly_dual(fragment['poly_beta'])
    raise ConfigError(f"unknown divergence fragment {fragment!r}", {'divergence': repr(fragment)})


def _out(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def phi(spec: DivergenceSpec, x: ArrayLike) -> ArrayLike:
    """phi(x) for x >= 0; phi(1) = 0 for every kind."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or np.any(np.isnan(xs)):
        raise DomainError("phi is only defined on [0, inf)", {'min_x': float(np.nanmin(xs)) if xs.size else None})
    if spec.kind is DivergenceKind.ENTROPIC:
        values = xlogy(xs, xs)
    elif spec.kind is DivergenceKind.ALPHA:
        a = spec.alpha
        values = (xs ** a - a * (xs - 1.0) - 1.0) / (a * (a - 1.0))
    else:
        b = spec.beta
        values = (b - 1.0) * (xs / b) ** (b / (b - 1.0)) - spec.shift
    return _out(values, x)


def phi_prime(spec: DivergenceSpec, x: ArrayLike) -> ArrayLike:
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("phi' is only defined on [0, inf)")
    with np.errstate(divide='ignore'):
        if spec.kind is DivergenceKind.ENTROPIC:
            values = np.log(xs) + 1.0
        elif spec.kind is DivergenceKind.ALPHA:
            a = spec.alpha
            values = (xs ** (a - 1.0) - 1.0) / (a - 1.0)
        else:
            b = spec.beta
            values = (xs / b) ** (1.0 / (b - 1.0))
    return _out(values, x)


def phi_second(spec: DivergenceSpec, x: ArrayLike) -> ArrayLike:
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("phi'' is only defined on [0, inf)")
    with np.errstate(divide='ignore'):
        if spec.kind is DivergenceKind.ENTROPIC:
            values = 1.0 / xs
        elif spec.kind is DivergenceKind.ALPHA:
            values = xs ** (spec.alpha - 2.0)
        else:
            b = spec.beta
            values = (xs / b) ** ((2.0 - b) / (b - 1.0)) / (b * (b - 1.0))
    return _out(values, x)


def psi(spec: DivergenceSpec, y: ArrayLike) -> ArrayLike:
    """Convex conjugate psi(y) = sup_{x >= 0} (x y - phi(x))."""
    ys = np.asarray(y, dtype=float)
    if spec.kind is DivergenceKind.ENTROPIC:
        values = np.exp(ys - 1.0)
    elif spec.kind is DivergenceKind.ALPHA:
        a = spec.alpha
        u = np.maximum(1.0 + (a - 1.0) * ys, 0.0)
        values = (u ** (a / (a - 1.0)) - 1.0) / a
    else:
        values = np.maximum(ys, 0.0) ** spec.beta + spec.shift
    return _out(values, y)


def psi_prime(spec: DivergenceSpec, y: ArrayLike) -> ArrayLike:
    """psi'(y) >= 0, nondecreasing; the optimal density is psi'(h - c)."""
    ys = np.asarray(y, dtype=float)
    if spec.kind is DivergenceKind.ENTROPIC:
        values = np.exp(ys - 1.0)
    elif spec.kind is DivergenceKind.ALPHA:
        a = spec.alpha
        values = np.maximum(1.0 + (a - 1.0) * ys, 0.0) ** (1.0 / (a - 1.0))
    else:
        b = spec.beta
        values = b * np.maximum(ys, 0.0) ** (b - 1)
    return _out(values, y)


def psi_second(spec: DivergenceSpec, y: ArrayLike) -> ArrayLike:
    ys = np.asarray(y, dtype=float)
    if spec.kind is DivergenceKind.ENTROPIC:
        values = np.exp(ys - 1.0)
    elif spec.kind is DivergenceKind.ALPHA:
        a = spec.alpha
        u = np.maximum(1.0 + (a - 1.0) * ys, 0.0)
        positive = u > 0
        values = np.where(positive, np.power(np.where(positive, u, 1.0), (2.0 - a) / (a - 1.0)), 0.0)
    else:
        b = spec.beta
        positive = ys > 0
        values = np.where(positive, b * (b - 1) * np.maximum(ys, 0.0) ** (b - 2), 0.0)
    return _out(values, y)


def scaled_psi(spec: DivergenceSpec, y: ArrayLike, epsilon: float) -> ArrayLike:
    """Conjugate of epsilon * phi, i.e. epsilon * psi(y / epsilon).

    For PolyDual this is (y_+)^b / epsilon^(b - 1) plus epsilon * k_b.
    """
    ys = np.asarray(y, dtype=float)
    return _out(epsilon * np.asarray(psi(spec, ys / epsilon)), y)


def scaled_psi_prime(spec: DivergenceSpec, y: ArrayLike, epsilon: float) -> ArrayLike:
    ys = np.asarray(y, dtype=float)
    return _out(np.asarray(psi_prime(spec, ys / epsilon)), y)


def convexity_params(spec: DivergenceSpec) -> Tuple[float, float]:
    """(lambda1, lambda2) with 1/phi''(x) <= lambda1 + lambda2 x."""
    if spec.lambda1 is None or spec.lambda2 is None:
        raise UnsupportedDivergenceError(
            f"no (lambda1, lambda2) certificate for {spec.label}",
            {'divergence': spec.label},
        )
    return spec.lambda1, spec.lambda2


def divergence_value(spec: DivergenceSpec, density: np.ndarray, weights: np.ndarray) -> float:
    """D_phi(Q, P) = sum phi(dQ/dP) dP."""
    return float(np.sum(np.asarray(phi(spec, np.asarray(density, dtype=float))) * weights))


def brute_force_conjugate(f: Callable[[np.ndarray], np.ndarray], y: ArrayLike, grid: np.ndarray) -> ArrayLike:
    """Grid maximization sup_{x in grid} (x y - f(x))."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    values = np.max(np.outer(ys, grid) - f(grid)[None, :], axis=1)
    return _out(values if np.ndim(y) else values[0], y)


def is_dual_regular(spec: DivergenceSpec) -> bool:
    """psi'(x0) = 1, psi'' > 0 on [x0 - delta, inf) and psi'(y) >= y eventually."""
    if abs(psi_prime(spec, spec.x0) - 1.0) > 1e-12:
        return False
    probe = spec.x0 - spec.delta + np.array([0.0, 0.5, 1.0, 10.0]) * max(spec.delta, 1.0)
    if np.any(np.asarray(psi_second(spec, probe)) <= 0):
        return False
    far = np.array([1e3, 1e4])
    return bool(np.all(np.asarray(psi_prime(spec, far)) >= far))
