"""
Prometheus metrics for solver runs and experiment tasks.
Metrics live on a dedicated registry and are dumped to a textfile by the CLI.
"""

import time
from functools import wraps
from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, Info, write_to_textfile

from dotbench.core.config import APP_VERSION, ENABLE_METRICS

registry = CollectorRegistry()

# Solver Metrics
solves_total = Counter(
    'dot_solves_total',
    'Total number of DOT solves',
    ['divergence', 'status'],
    registry=registry,
)

solver_iterations = Histogram(
    'dot_solver_iterations',
    'Block sweeps needed until the first-order residual met the tolerance',
    buckets=(1, 10, 50, 100, 500, 1000, 5000, 10000, float('inf')),
    registry=registry,
)

solve_duration = Histogram(
    'dot_solve_duration_seconds',
    'Wall time spent per DOT solve',
    ['divergence'],
    buckets=(0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 30.0, float('inf')),
    registry=registry,
)

exact_ot_solves_total = Counter(
    'exact_ot_solves_total',
    'Total number of exact transport LP solves',
    registry=registry,
)

# Experiment Metrics
experiment_tasks_total = Counter(
    'experiment_tasks_total',
    'Experiment tasks (levels, replications) by outcome',
    ['experiment', 'status'],
    registry=registry,
)

errors_total = Counter(
    'errors_total',
    'Total number of errors',
    ['error_type', 'component'],
    registry=registry,
)

app_info = Info('dotbench', 'Package information', registry=registry)


def setup_metrics():
    """Initialize package metrics with default values."""
    app_info.info({'version': APP_VERSION})


def record_solve(divergence: str, status: str, iterations: int, duration: float):
    """Record one DOT solve."""
    if not ENABLE_METRICS:
        return
    solves_total.labels(divergence=divergence, status=status).inc()
    solve_duration.labels(divergence=divergence).observe(duration)
    if status == 'success':
        solver_iterations.observe(iterations)


def track_experiment_task(experiment: str):
    """Decorator to count experiment task outcomes."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                result = func(*args, **kwargs)
                if ENABLE_METRICS:
                    experiment_tasks_total.labels(experiment=experiment, status='success').inc()
                return result
            except Exception as e:
                if ENABLE_METRICS:
                    experiment_tasks_total.labels(experiment=experiment, status='failure').inc()
                    errors_total.labels(error_type=type(e).__name__, component=experiment).inc()
                raise
        return wrapper
    return decorator


class Timer:
    """Context manager measuring wall time in seconds."""

    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


def write_metrics(path: Path):
    """Write the registry to a Prometheus textfile."""
    if ENABLE_METRICS:
        write_to_textfile(str(path), registry)
