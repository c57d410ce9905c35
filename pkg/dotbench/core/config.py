"""Core configuration and constants."""
import os
from typing import Any, Dict


# Package metadata
APP_NAME = "dotbench"
APP_VERSION = "0.1.0"
APP_DESCRIPTION = "Divergence-regularized multi-marginal optimal transport solver and stability benchmarks"

# Environment
DEBUG = os.getenv('DEBUG', 'false').lower() == 'true'
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

# Metrics Configuration
ENABLE_METRICS = os.getenv('ENABLE_METRICS', 'true').lower() == 'true'


def default_jobs() -> int:
    """Worker count fallback used when --jobs is not given."""
    raw = os.getenv('DOTBENCH_JOBS', '1')
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# Bump whenever a value below changes; recorded in every metadata.json
DEFAULTS_VERSION = 2

DEFAULTS: Dict[str, Any] = {
    # dot_solver
    'solver_tol': 1e-9,
    'root_tol': 1e-12,
    'max_iters': 10_000,
    'sweep': 'gauss-seidel',
    'bracket_doublings': 200,
    'root_max_steps': 200,
    'jacobi_chunk': 64,
    'feasibility_tol': 1e-8,
    # measure
    'product_capacity': 1_000_000,
    'weight_tol': 1e-12,
    # exact_ot
    'exact_ot_atoms': 500,
    'exact_ot_tol': 1e-9,
    # shadow_stability
    'ipf_tol': 1e-10,
    'ipf_max_iters': 100_000,
    'strong_convexity_scale_tol': 1e-9,
    'continuity_rel_tol': 1e-6,
    'stability_levels': [2.0 ** -k for k in range(3, 9)],
    'stability_q': 2.0,
    # complexity
    'partition_capacity': 1_000_000,
    'grid_points_per_axis': {1: 64, 2: 16, 3: 8},
    'n_values': [32, 64, 128, 256, 512],
    'replications': 20,
    'bootstrap_resamples': 1000,
    'max_failure_fraction': 0.10,
    'bias_fraction': 0.10,
    # figure recipe
    'figure_epsilon': 100.0,
    'figure_atoms': 10,
    'figure_divergences': ['entropic', {'alpha': 2.0}, {'alpha': 1.5}],
    'support_threshold': 0.0,
    # cli
    'seed': 0,
}

# Exit codes per failure class
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_CAPACITY = 4
EXIT_CERTIFICATE = 5

# SVG styling
HEATMAP_CELL_PX = 36
PLOT_WIDTH_PX = 520
PLOT_HEIGHT_PX = 400
ZERO_CELL_COLOR = '#FFFFFF'
HATCH_COLOR = '#B0B0B0'
SCATTER_COLOR = '#4ECDC4'
FIT_LINE_COLOR = '#FF6B6B'
