"""
Test configuration and shared fixtures.
"""
import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dotbench.models.schemas import SolverOptions  # noqa: E402
from dotbench.ot import divergence as div  # noqa: E402
from dotbench.ot.measure import DiscreteMeasure, MarginalTuple, make_rng  # noqa: E402
from dotbench.ot.solver import ProblemSpec, build_cost  # noqa: E402


@pytest.fixture(scope="session")
def test_fixtures_dir():
    """Return path to test fixtures directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    """Deterministic generator for tests that need random input."""
    return make_rng(1234)


@pytest.fixture(scope="session")
def tight_opts():
    """Solver options tight enough for comparisons against reference values."""
    return SolverOptions(tol=1e-11, root_tol=1e-13)


@pytest.fixture(scope="session")
def grid_marginals():
    """Two uniform marginals on {0, 1/9, ..., 1}."""
    grid = DiscreteMeasure.uniform(np.linspace(0.0, 1.0, 10))
    return MarginalTuple((grid, grid), 2.0)


@pytest.fixture(scope="session")
def small_marginals():
    """Two small 1-D marginals with unequal sizes and non-uniform weights."""
    mu = DiscreteMeasure(np.array([0.0, 0.4, 1.0]), np.array([0.2, 0.5, 0.3]))
    nu = DiscreteMeasure(np.array([0.1, 0.3, 0.7, 0.9]), np.array([0.1, 0.4, 0.3, 0.2]))
    return MarginalTuple((mu, nu), 2.0)


@pytest.fixture(scope="session")
def three_marginals():
    """Three 1-D marginals for multi-marginal checks."""
    a = DiscreteMeasure(np.array([0.0, 0.5, 1.0]), np.array([0.3, 0.3, 0.4]))
    b = DiscreteMeasure(np.array([0.2, 0.8]), np.array([0.6, 0.4]))
    c = DiscreteMeasure(np.array([0.1, 0.4, 0.6, 0.9]), np.array([0.25, 0.25, 0.25, 0.25]))
    return MarginalTuple((a, b, c), 2.0)


@pytest.fixture
def make_problem():
    """Factory: ProblemSpec with the quadratic pairwise cost."""
    def _make(marginals, divergence='entropic', epsilon=1.0):
        return ProblemSpec(marginals, build_cost(marginals), div.from_config(divergence), epsilon)
    return _make
