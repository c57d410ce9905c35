"""
Discrete measures, marginal tuples, product measures and empirical sampling.

All randomness goes through numpy's PCG64 bit generator seeded by a
SeedSequence built from integer keys, so a (seed, keys) pair names one stream
on every platform.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from dotbench.core.config import DEFAULTS
from dotbench.core.errors import CapacityError, ConfigError, ValidationError


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for the stream (seed, *keys)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _as_points(points: Any) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError(f"points must be a non-empty (n, d) array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud in R^d with positive weights summing to one."""
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _as_points(self.points)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != points.shape[0]:
            raise ValidationError(
                f"{weights.shape[0]} weights for {points.shape[0]} points",
                {'points': points.shape[0], 'weights': weights.shape[0]},
            )
        if not np.all(np.isfinite(points)):
            raise ValidationError("points must be finite")
        if np.any(weights <= 0):
            raise ValidationError("weights must be strictly positive")
        total = weights.sum()
        if abs(total - 1.0) > DEFAULTS['weight_tol'] * max(1, weights.size):
            raise ValidationError(f"weights sum to {total!r}, expected 1", {'sum': float(total)})
        if np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise ValidationError("support points must be pairwise distinct")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'weights', weights)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def uniform(cls, points: Any) -> "DiscreteMeasure":
        pts = _as_points(points)
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @classmethod
    def from_samples(cls, samples: Any) -> "DiscreteMeasure":
        """Empirical measure of the samples; duplicates are merged with summed weights."""
        pts = _as_points(samples)
        atoms, counts = np.unique(pts, axis=0, return_counts=True)
        return cls(atoms, counts / pts.shape[0])

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def to_dict(self) -> Dict[str, List]:
        return {'points': self.points.tolist(), 'weights': self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: Union[Dict[str, Any], Any]) -> "DiscreteMeasure":
        """Build from {"points": [[...]], "weights": [...]} or a MeasureConfig."""
        if hasattr(data, 'model_dump'):
            data = data.model_dump()
        points = data.get('points')
        if points is None:
            raise ConfigError('measure needs "points"')
        weights = data.get('weights')
        if weights is None:
            return cls.uniform(points)
        return cls(points, weights)


@dataclass(frozen=True, eq=False)
class MarginalTuple:
    """Ordered marginals mu_1..mu_N with product metric exponent p."""
    marginals: Tuple[DiscreteMeasure, ...]
    p: float = 2.0

    def __post_init__(self):
        marginals = tuple(self.marginals)
        if len(marginals) < 2:
            raise ValidationError(f"need at least two marginals, got {len(marginals)}")
        if not self.p >= 1:
            raise ValidationError(f"metric exponent p must be >= 1, got {self.p}")
        object.__setattr__(self, 'marginals', marginals)

    def __len__(self) -> int:
        return len(self.marginals)

    def __getitem__(self, i: int) -> DiscreteMeasure:
        return self.marginals[i]

    def __iter__(self):
        return iter(self.marginals)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(m.size for m in self.marginals)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(m.dim for m in self.marginals)

    def replace(self, i: int, measure: DiscreteMeasure) -> "MarginalTuple":
        marginals = list(self.marginals)
        marginals[i] = measure
        return MarginalTuple(tuple(marginals), self.p)

    def check_capacity(self, limit: Optional[float] = None):
        limit = DEFAULTS['product_capacity'] if limit is None else limit
        count = int(np.prod(self.shape, dtype=np.int64))
        if count > limit:
            raise CapacityError(
                f"product support has {count} atoms, limit is {int(limit)}",
                {'shape': self.shape, 'limit': limit},
            )
        return count

    def product_weights(self) -> np.ndarray:
        """Weights of P = mu_1 x ... x mu_N as an N-way tensor."""
        self.check_capacity()
        return outer_weights([m.weights for m in self.marginals])

    def leave_one_out_weights(self, i: int) -> np.ndarray:
        """Weights of P^{-i}, the product of all marginals but the i-th."""
        return outer_weights([m.weights for j, m in enumerate(self.marginals) if j != i])

    def to_dict(self) -> Dict[str, Any]:
        return {'marginals': [m.to_dict() for m in self.marginals], 'p': self.p}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MarginalTuple":
        return cls(tuple(DiscreteMeasure.from_dict(m) for m in data['marginals']), float(data.get('p', 2.0)))


def outer_weights(weights: Sequence[np.ndarray]) -> np.ndarray:
    tensor = np.ones(())
    for w in weights:
        tensor = np.multiply.outer(tensor, w)
    return tensor


def marginal(tensor: np.ndarray, axis: int) -> np.ndarray:
    """Sum a coupling tensor over every axis but one."""
    others = tuple(a for a in range(tensor.ndim) if a != axis)
    return tensor.sum(axis=others)


def product_indices(shape: Sequence[int]) -> np.ndarray:
    """(prod(shape), N) array of multi-indices in C order."""
    return np.indices(tuple(shape)).reshape(len(shape), -1).T


def product(t: MarginalTuple, limit: Optional[float] = None) -> DiscreteMeasure:
    """Product measure on the concatenated space; atoms in C order of the tensor."""
    t.check_capacity(limit)
    idx = product_indices(t.shape)
    points = np.hstack([m.points[idx[:, i]] for i, m in enumerate(t.marginals)])
    return DiscreteMeasure(points, t.product_weights().reshape(-1))


def product_metric_distance(x: Sequence[np.ndarray], y: Sequence[np.ndarray], p: float) -> float:
    """d_{X,p}(x, y) = (sum_i ||x_i - y_i||^p)^(1/p)."""
    parts = [np.linalg.norm(np.atleast_1d(np.asarray(a, float) - np.asarray(b, float))) for a, b in zip(x, y)]
    return float(np.sum(np.power(parts, p)) ** (1.0 / p))


def product_cost_matrix(
    points_x: Sequence[np.ndarray],
    idx_x: np.ndarray,
    points_y: Sequence[np.ndarray],
    idx_y: np.ndarray,
    p: float,
) -> np.ndarray:
    """Matrix of d_{X,p}^p between product atoms given per-marginal supports and multi-indices."""
    total = np.zeros((idx_x.shape[0], idx_y.shape[0]))
    for i, (px, py) in enumerate(zip(points_x, points_y)):
        block = cdist(px, py) ** p
        total += block[np.ix_(idx_x[:, i], idx_y[:, i])]
    return total


def translate(measure: DiscreteMeasure, shift: Any) -> DiscreteMeasure:
    return DiscreteMeasure(measure.points + np.asarray(shift, dtype=float), measure.weights.copy())


def jitter(
    measure: DiscreteMeasure,
    amplitude: float,
    rng: np.random.Generator,
    dirichlet: Optional[float] = None,
) -> DiscreteMeasure:
    """Move every atom by exactly `amplitude` in a random direction.

    The atom count stays fixed, so W_p(measure, result) <= amplitude.
    With `dirichlet`, weights are also redrawn from Dirichlet(dirichlet * n * w).
    """
    directions = rng.standard_normal(measure.points.shape)
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    points = measure.points + amplitude * directions / norms
    weights = measure.weights.copy()
    if dirichlet is not None:
        weights = rng.dirichlet(dirichlet * measure.size * measure.weights)
        weights = np.maximum(weights, np.finfo(float).tiny)
        weights = weights / weights.sum()
    return DiscreteMeasure(points, weights)


class Sampler:
    """Source of i.i.d. samples with a fine-grid reference discretization."""

    kind = 'sampler'

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def reference_measure(self, points_per_axis: int) -> DiscreteMeasure:
        raise NotImplementedError


class UniformCube(Sampler):
    """Uniform law on [0, 1]^d."""

    kind = 'uniform_cube'

    def __init__(self, d: int):
        if d < 1:
            raise ConfigError(f"cube dimension must be >= 1, got {d}")
        self.d = int(d)

    @property
    def dim(self) -> int:
        return self.d

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, self.d))

    def reference_measure(self, points_per_axis: int) -> DiscreteMeasure:
        centers = (np.arange(points_per_axis) + 0.5) / points_per_axis
        grid = np.stack(np.meshgrid(*([centers] * self.d), indexing='ij'), axis=-1).reshape(-1, self.d)
        return DiscreteMeasure.uniform(grid)

    def __repr__(self):
        return f'UniformCube(d={self.d})'


class Resample(Sampler):
    """Draws atoms of a fixed discrete measure with its weights."""

    kind = 'resample'

    def __init__(self, measure: DiscreteMeasure):
        self.measure = measure

    @property
    def dim(self) -> int:
        return self.measure.dim

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.measure.points[rng.choice(self.measure.size, size=n, p=self.measure.weights)]

    def reference_measure(self, points_per_axis: int) -> DiscreteMeasure:
        return self.measure

    def __repr__(self):
        return f'Resample(size={self.measure.size})'


def _helix(t: np.ndarray) -> np.ndarray:
    return np.stack([0.5 + 0.5 * np.cos(4 * np.pi * t), 0.5 + 0.5 * np.sin(4 * np.pi * t), t], axis=-1)


def _line(t: np.ndarray) -> np.ndarray:
    # unit-speed diagonal, isometric to [0, 1]
    return np.stack([t, t, t], axis=-1) / np.sqrt(3.0)


CURVES = {'helix': _helix, 'line': _line}


class Curve(Sampler):
    """Pushforward of Uniform[0, 1] through a Lipschitz curve in R^3."""

    kind = 'curve'

    def __init__(self, name: str):
        if name not in CURVES:
            raise ConfigError(f"unknown curve {name!r}; expected one of {sorted(CURVES)}")
        self.name = name
        self.gamma = CURVES[name]

    @property
    def dim(self) -> int:
        return 3

    @property
    def intrinsic_dim(self) -> int:
        return 1

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.gamma(rng.random(n))

    def reference_measure(self, points_per_axis: int) -> DiscreteMeasure:
        t = (np.arange(points_per_axis) + 0.5) / points_per_axis
        return DiscreteMeasure.uniform(self.gamma(t))

    def __repr__(self):
        return f'Curve({self.name!r})'


def sampler_from_config(config: Any) -> Sampler:
    """Build a sampler from a SamplerConfig or its dict form."""
    if isinstance(config, Sampler):
        return config
    if hasattr(config, 'model_dump'):
        config = config.model_dump()
    kind = config.get('kind')
    if kind == 'uniform_cube':
        return UniformCube(config.get('d', 1))
    if kind == 'resample':
        if config.get('measure') is None:
            raise ConfigError('resample sampler needs "measure"')
        return Resample(DiscreteMeasure.from_dict(config['measure']))
    if kind == 'curve':
        return Curve(config.get('curve') or 'helix')
    raise ConfigError(f"unknown sampler kind {kind!r}", {'sampler': kind})


def empirical(source: Sampler, n: int, seed: Union[int, np.random.Generator], *keys: int) -> DiscreteMeasure:
    """Empirical measure of n draws from `source`, deterministic per (seed, keys)."""
    if not isinstance(source, Sampler):
        raise ConfigError(f"unknown sample source {source!r}")
    if n < 1:
        raise ValidationError(f"sample size must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, *keys)
    return DiscreteMeasure.from_samples(source.sample(n, rng))


def diameter(points: np.ndarray) -> float:
    """Euclidean diameter of a finite point set."""
    if points.shape[0] < 2:
        return 0.0
    if points.shape[0] > 2000:
        # bounding-box diagonal, an upper bound
        span = points.max(axis=0) - points.min(axis=0)
        return float(np.linalg.norm(span))
    return float(cdist(points, points).max())
