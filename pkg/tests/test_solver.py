"""
Test cases for the DOT solver, cost construction and solution diagnostics.
"""
import pytest
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist
from scipy.special import xlogy

from dotbench.cli.commands import figure_problem
from dotbench.core.errors import CapacityError, ConfigError, ConvergenceError, NumericError, ValidationError
from dotbench.experiments.shadow_stability import project_to_marginals
from dotbench.models.schemas import SolverOptions
from dotbench.ot import divergence as div
from dotbench.ot.measure import DiscreteMeasure, MarginalTuple, make_rng
from dotbench.ot.solver import (
    CostKind,
    Coupling,
    DOTSolver,
    ProblemSpec,
    _solve_atoms_generic,
    build_cost,
    direct_sum,
    dual_curvature,
    first_order_residuals,
    lipschitz_epsilon_sweep,
    objective,
    pairwise_lipschitz,
    problem_from_config,
    root_update,
    sinkhorn_reference,
    solve,
    support_count,
)

SPARSE_AND_SMOOTH = ['entropic', {'alpha': 1.5}, {'alpha': 2.0}, {'poly_beta': 2}, {'poly_beta': 3}]


def _gap_ok(solution):
    return abs(solution.gap) <= 1e-6 * max(1.0, abs(solution.primal_value))


class TestBuildCost:
    """Test cases for cost tensors and their Lipschitz constants."""

    def test_quadratic_pairwise_tensor(self, small_marginals):
        """Test the two-marginal quadratic cost is |x1 - x2|^2."""
        cost = build_cost(small_marginals)
        expected = cdist(small_marginals[0].points, small_marginals[1].points, 'sqeuclidean')
        assert np.allclose(cost.tensor, expected)
        assert cost.kind is CostKind.SQ_EUCLIDEAN_SUM

    def test_three_marginal_tensor_sums_pairs(self, three_marginals):
        """Test the N-marginal cost sums all pairwise terms."""
        tensor = build_cost(three_marginals).tensor
        x, y, z = (m.points[:, 0] for m in three_marginals)
        assert tensor[2, 1, 0] == pytest.approx((x[2] - y[1]) ** 2 + (x[2] - z[0]) ** 2 + (y[1] - z[0]) ** 2)

    def test_power_distance(self, small_marginals):
        """Test the |x1 - x2|^r cost."""
        cost = build_cost(small_marginals, 'power_distance', power=1.0)
        assert np.allclose(cost.tensor, cdist(small_marginals[0].points, small_marginals[1].points))

    def test_lipschitz_constant(self, grid_marginals):
        """Test L = r D^(r-1) (N-1) N^(1-1/p) on the unit interval."""
        assert build_cost(grid_marginals).lipschitz == pytest.approx(2.0 * np.sqrt(2.0))
        assert pairwise_lipschitz(2.0, 1.0, 3, 2.0) == pytest.approx(2.0 * 2.0 * np.sqrt(3.0))

    def test_hull_enlarges_lipschitz(self, grid_marginals):
        """Test extra hull points widen the diameter."""
        wide = build_cost(grid_marginals, hull=np.array([[2.0]]))
        assert wide.lipschitz == pytest.approx(2.0 * 2.0 * np.sqrt(2.0))

    def test_explicit_cost_lipschitz(self, small_marginals):
        """Test the explicit-cost bound covers the quadratic cost's true slope."""
        tensor = build_cost(small_marginals).tensor
        explicit = build_cost(small_marginals, 'explicit', tensor=tensor.tolist())
        assert explicit.kind is CostKind.EXPLICIT
        assert 0 < explicit.lipschitz <= 4.0

    def test_explicit_shape_mismatch(self, small_marginals):
        """Test an explicit tensor of the wrong shape."""
        with pytest.raises(ValidationError):
            build_cost(small_marginals, 'explicit', tensor=np.zeros((2, 2)))

    def test_unknown_kind(self, small_marginals):
        """Test an unknown cost kind."""
        with pytest.raises(ConfigError):
            build_cost(small_marginals, 'manhattan')

    def test_capacity(self):
        """Test product supports above the limit are refused."""
        big = MarginalTuple(
            (DiscreteMeasure.uniform(np.arange(1001.0)), DiscreteMeasure.uniform(np.arange(1000.0))), 2.0,
        )
        with pytest.raises(CapacityError):
            build_cost(big)


class TestProblemSpec:
    """Test cases for problem construction."""

    def test_epsilon_must_be_positive(self, small_marginals):
        """Test epsilon <= 0 is rejected."""
        with pytest.raises(ConfigError):
            ProblemSpec(small_marginals, build_cost(small_marginals), div.entropic(), 0.0)

    def test_cost_shape_must_match(self, small_marginals, grid_marginals):
        """Test a cost evaluated on other marginals is rejected."""
        with pytest.raises(ValidationError):
            ProblemSpec(small_marginals, build_cost(grid_marginals), div.entropic(), 1.0)

    def test_explicit_cost_cannot_move(self, small_marginals):
        """Test explicit tensors are tied to their support."""
        cost = build_cost(small_marginals, 'explicit', tensor=np.zeros(small_marginals.shape))
        prob = ProblemSpec(small_marginals, cost, div.entropic(), 1.0)
        with pytest.raises(ConfigError):
            prob.with_marginals(small_marginals)

    def test_problem_from_config(self):
        """Test a JSON-style problem description."""
        prob = problem_from_config({
            'marginals': [{'points': [0.0, 1.0]}, {'points': [0.0, 0.5, 1.0], 'weights': [0.2, 0.3, 0.5]}],
            'divergence': {'alpha': 2.0},
            'epsilon': 0.5,
        })
        assert prob.marginals.shape == (2, 3)
        assert prob.divergence.label == 'alpha-2'
        assert prob.epsilon == 0.5


class TestSolve:
    """Test cases for the generalized Sinkhorn solver."""

    def test_entropic_matches_reference_sinkhorn(self, small_marginals, make_problem, tight_opts):
        """Test the entropic solve against classical log-domain Sinkhorn."""
        prob = make_problem(small_marginals, 'entropic', 0.5)
        solution = solve(prob, tight_opts)
        a, b = small_marginals[0].weights, small_marginals[1].weights
        value, plan = sinkhorn_reference(a, b, prob.cost.tensor, 0.5)
        assert solution.value == pytest.approx(value, abs=1e-8)
        assert np.allclose(solution.coupling.mass, plan, atol=1e-9)

    @pytest.mark.parametrize('divergence', SPARSE_AND_SMOOTH, ids=str)
    def test_feasible_with_small_gap(self, small_marginals, make_problem, divergence):
        """Test marginals are met and primal and dual values agree."""
        solution = solve(make_problem(small_marginals, divergence, 0.2))
        assert solution.coupling.feasibility_residual() <= 1e-8
        assert solution.residual <= 1e-9
        assert _gap_ok(solution)

    @pytest.mark.parametrize('divergence', ['entropic', {'alpha': 1.5}, {'poly_beta': 2}], ids=str)
    def test_three_marginals(self, three_marginals, make_problem, divergence):
        """Test the multi-marginal solve."""
        solution = solve(make_problem(three_marginals, divergence, 0.3))
        assert solution.coupling.mass.shape == (3, 2, 4)
        assert solution.coupling.feasibility_residual() <= 1e-8
        assert _gap_ok(solution)

    @pytest.mark.parametrize('divergence', SPARSE_AND_SMOOTH, ids=str)
    def test_zero_cost_returns_product(self, small_marginals, divergence):
        """Test c = 0 is optimal at pi = P with no sweeps."""
        cost = build_cost(small_marginals, 'explicit', tensor=np.zeros(small_marginals.shape))
        prob = ProblemSpec(small_marginals, cost, div.from_config(divergence), 1.0)
        solution = solve(prob)
        assert solution.iterations == 0
        assert np.allclose(solution.coupling.mass, small_marginals.product_weights())
        assert solution.value == pytest.approx(0.0, abs=1e-12)

    def test_coupling_matches_density_formula(self, make_problem, grid_marginals):
        """Test the returned coupling equals psi'((h1 + h2 - c) / eps) P evaluated directly."""
        prob = make_problem(grid_marginals, {'alpha': 2.0}, 0.05)
        solution = solve(prob)
        y = (solution.potentials.direct_sum() - prob.cost.tensor) / prob.epsilon
        direct = div.psi_prime(prob.divergence, y) * grid_marginals.product_weights()
        assert np.allclose(solution.coupling.mass, direct, atol=1e-10)

    def test_potentials_are_normalized(self, three_marginals, make_problem):
        """Test every potential integrates to the same value."""
        prob = make_problem(three_marginals, 'entropic', 0.5)
        integrals = solve(prob).potentials.integrals(three_marginals)
        assert np.allclose(integrals, integrals[0], atol=1e-12)

    def test_first_order_residuals_vanish(self, small_marginals, make_problem):
        """Test F_i(x_i) = 1 at the returned potentials."""
        prob = make_problem(small_marginals, {'alpha': 1.5}, 0.3)
        solution = solve(prob)
        for r in first_order_residuals(solution.potentials, prob):
            assert np.abs(r).max() <= 1e-8

    def test_dual_curvature_positive(self, small_marginals, make_problem):
        """Test the dual is strictly concave in each atom's potential at the optimum."""
        prob = make_problem(small_marginals, 'entropic', 0.3)
        for g in dual_curvature(solve(prob).potentials, prob):
            assert np.all(g > 0)

    def test_jacobi_matches_gauss_seidel(self, grid_marginals, make_problem):
        """Test thread-parallel atom updates give the same coupling."""
        prob = make_problem(grid_marginals, {'alpha': 2.0}, 0.1)
        sequential = solve(prob, SolverOptions(sweep='gauss-seidel'))
        parallel = solve(prob, SolverOptions(sweep='jacobi', jobs=2))
        assert parallel.iterations == sequential.iterations
        assert np.allclose(parallel.coupling.mass, sequential.coupling.mass, atol=1e-12)

    def test_debug_crosscheck(self, small_marginals, make_problem):
        """Test the closed-form entropic update agrees with the root finder."""
        prob = make_problem(small_marginals, 'entropic', 0.5)
        plain = solve(prob)
        checked = solve(prob, SolverOptions(debug_crosscheck=True))
        assert np.allclose(plain.coupling.mass, checked.coupling.mass)

    def test_iteration_limit_raises(self, grid_marginals, make_problem):
        """Test hitting max_iters raises ConvergenceError with residual and count."""
        prob = make_problem(grid_marginals, 'entropic', 0.01)
        with pytest.raises(ConvergenceError) as excinfo:
            solve(prob, SolverOptions(max_iters=1, tol=1e-14))
        assert excinfo.value.iterations == 1
        assert excinfo.value.exit_code == 3
        assert 'residual' in excinfo.value.context

    def test_root_update_reproduces_fixed_point(self, small_marginals, make_problem, tight_opts):
        """Test one atom update at the optimum returns its own potential."""
        prob = make_problem(small_marginals, {'poly_beta': 2}, 0.4)
        solution = solve(prob, tight_opts)
        h = solution.potentials.rescaled(prob.epsilon)
        assert root_update(1, 2, h, prob, tight_opts) == pytest.approx(h[1][2], abs=1e-8)

    def test_solution_to_dict(self, small_marginals, make_problem):
        """Test the JSON view of a solution."""
        data = solve(make_problem(small_marginals)).to_dict()
        assert set(data) >= {'value', 'gap', 'iterations', 'potentials', 'coupling', 'residuals'}
        assert len(data['potentials']) == 2
        assert np.array(data['coupling']).shape == (3, 4)


class TestObjective:
    """Test cases for the primal objective."""

    def test_product_coupling(self, small_marginals, make_problem):
        """Test the objective at P is the expected cost."""
        prob = make_problem(small_marginals, 'entropic', 0.7)
        P = small_marginals.product_weights()
        assert objective(Coupling.product(small_marginals), prob) == pytest.approx(np.sum(prob.cost.tensor * P))

    def test_optimum_beats_feasible_couplings(self, small_marginals, make_problem, rng):
        """Test no random feasible coupling has a lower objective."""
        prob = make_problem(small_marginals, {'alpha': 2.0}, 0.3)
        solution = solve(prob)
        assert objective(solution.coupling, prob) == pytest.approx(solution.value, abs=1e-10)
        P = small_marginals.product_weights()
        for _ in range(20):
            other = project_to_marginals(P * np.exp(rng.standard_normal(P.shape)), small_marginals)
            assert objective(other, prob) >= solution.value - 1e-9

    def test_shape_mismatch(self, small_marginals, grid_marginals, make_problem):
        """Test a coupling over another product support."""
        with pytest.raises(ValidationError):
            objective(Coupling.product(grid_marginals), make_problem(small_marginals))


class TestSupport:
    """Test cases for support counts on the support-size figure instance."""

    def test_product_has_full_support(self, grid_marginals):
        """Test the product measure charges every cell."""
        assert support_count(Coupling.product(grid_marginals)) == 100

    def test_negative_threshold(self, grid_marginals):
        """Test a negative threshold is rejected."""
        with pytest.raises(ValidationError):
            support_count(Coupling.product(grid_marginals), -1.0)

    @pytest.mark.integration
    def test_entropic_full_support(self):
        """Test entropic regularization never produces exact zeros."""
        solution = solve(figure_problem(0.01, 10, 'entropic'))
        assert support_count(solution.coupling) == 100

    @pytest.mark.integration
    @pytest.mark.parametrize('divergence', [{'alpha': 2.0}, {'alpha': 1.5}], ids=str)
    def test_sparse_divergences(self, divergence):
        """Test alpha-divergences give a sparse, symmetric optimizer."""
        solution = solve(figure_problem(0.01, 10, divergence))
        density = solution.coupling.density
        assert support_count(solution.coupling) < 100
        assert np.abs(density - density.T).max() < 1e-6
        assert np.all(np.diag(density) > 0)


class TestPotentialRegularity:
    """Test cases for Lipschitz bounds on the dual potentials."""

    @pytest.mark.integration
    @pytest.mark.parametrize('divergence', ['entropic', {'poly_beta': 2}], ids=str)
    def test_quotients_bounded_across_epsilon(self, grid_marginals, make_problem, divergence):
        """Test potential difference quotients stay below Lip(c) for eps in {0.1, 1, 10}."""
        prob = make_problem(grid_marginals, divergence, 1.0)
        rows = lipschitz_epsilon_sweep(prob, [0.1, 1.0, 10.0])
        assert len(rows) == 6
        for row in rows:
            assert row['quotient'] <= row['lipschitz'] * (1 + 1e-6)
            assert row['quotient'] <= row['partial_bound'] * (1 + 1e-6) + 1e-9


class TestDirectSum:
    """Test cases for the direct sum helper."""

    def test_broadcast(self):
        """Test (h1 + h2)(i, j) = h1(i) + h2(j)."""
        total = direct_sum([np.array([1.0, 2.0]), np.array([10.0, 20.0, 30.0])])
        assert total.shape == (2, 3)
        assert total[1, 2] == 32.0


def _random_cost_instance(rng, max_atoms=30):
    """Two random marginals with an explicit cost drawn from U[0, 1]."""
    measures = []
    for _ in range(2):
        size = int(rng.integers(2, max_atoms + 1))
        weights = np.maximum(rng.dirichlet(np.full(size, 2.0)), 1e-3)
        measures.append(DiscreteMeasure(np.sort(rng.random(size)), weights / weights.sum()))
    marginals = MarginalTuple(tuple(measures), 2.0)
    cost = build_cost(marginals, 'explicit', tensor=rng.random(marginals.shape))
    return marginals, cost


def _dual_value(solver):
    """Dual objective at the solver's current potentials, in original units."""
    y = direct_sum(solver.h) - solver.cost
    integrals = sum(float(h @ w) for h, w in zip(solver.h, solver.weights))
    return solver.prob.epsilon * (integrals - float(np.sum(div.psi(solver.spec, y) * solver.P)))


class TestOracles:
    """Test cases comparing the solver against independent oracles."""

    def test_entropic_agrees_with_sinkhorn_on_random_instances(self, tight_opts):
        """Test 20 random instances up to 30x30 against log-domain Sinkhorn."""
        rng = make_rng(2024)
        for k in range(20):
            marginals, cost = _random_cost_instance(rng)
            epsilon = (0.05, 0.5, 5.0)[k % 3]
            solution = solve(ProblemSpec(marginals, cost, div.entropic(), epsilon), tight_opts)
            value, plan = sinkhorn_reference(marginals[0].weights, marginals[1].weights, cost.tensor, epsilon)
            assert solution.value == pytest.approx(value, abs=1e-8)
            assert np.abs(solution.coupling.mass - plan).max() <= 1e-6

    def test_two_atom_value_matches_line_search(self, tight_opts):
        """Test the 2x2 swap-cost instance against a bounded scalar search over the diagonal mass."""
        two = DiscreteMeasure.uniform([0.0, 1.0])
        marginals = MarginalTuple((two, two), 2.0)
        prob = ProblemSpec(marginals, build_cost(marginals), div.entropic(), 1.0)
        assert np.allclose(prob.cost.tensor, [[0.0, 1.0], [1.0, 0.0]])

        def value(t):
            return (1.0 - 2.0 * t) + 2.0 * xlogy(t, 4.0 * t) + 2.0 * xlogy(0.5 - t, 4.0 * (0.5 - t))

        search = minimize_scalar(value, bounds=(0.0, 0.5), method='bounded', options={'xatol': 1e-12})
        solution = solve(prob, tight_opts)
        assert solution.value == pytest.approx(search.fun, abs=1e-9)
        # stationarity gives t / (1/2 - t) = e
        assert solution.coupling.mass[0, 0] == pytest.approx(0.5 * np.e / (1.0 + np.e), abs=1e-9)

    @pytest.mark.parametrize('divergence', ['entropic', {'alpha': 1.5}, {'poly_beta': 2}], ids=str)
    def test_epsilon_rescaling(self, small_marginals, make_problem, divergence):
        """Test OT with weight eps equals eps times OT of c / eps with weight 1."""
        prob = make_problem(small_marginals, divergence, 0.3)
        unit = ProblemSpec(
            small_marginals,
            build_cost(small_marginals, 'explicit', tensor=prob.cost.tensor / 0.3),
            prob.divergence,
            1.0,
        )
        assert solve(prob).value == pytest.approx(0.3 * solve(unit).value, abs=1e-10)

    @pytest.mark.parametrize('i', [0, 1])
    def test_entropic_root_update_closed_form(self, small_marginals, make_problem, rng, i):
        """Test v = -log sum exp(h^{-i} - c~ - 1) P^{-i} for arbitrary potentials."""
        prob = make_problem(small_marginals, 'entropic', 0.5)
        h = [rng.standard_normal(m.size) for m in small_marginals]
        other = 1 - i
        scaled = np.moveaxis(prob.cost.tensor / prob.epsilon, i, 0)
        opts = SolverOptions(debug_crosscheck=True)
        for atom in range(small_marginals[i].size):
            expected = -np.log(np.sum(np.exp(h[other] - scaled[atom] - 1.0) * small_marginals[other].weights))
            assert root_update(i, atom, h, prob, opts) == pytest.approx(expected, abs=1e-10)

    def test_alpha_two_root_update_closed_form(self, small_marginals, make_problem, rng):
        """Test Alpha(2) with every term active gives v = -sum (h - c~) P^{-i}."""
        prob = make_problem(small_marginals, {'alpha': 2.0}, 10.0)
        h = [0.1 * rng.standard_normal(m.size) for m in small_marginals]
        w = small_marginals[1].weights
        for atom in range(small_marginals[0].size):
            B = h[1] - prob.cost.tensor[atom] / prob.epsilon
            assert np.all(1.0 - B @ w + B > 0)
            assert root_update(0, atom, h, prob) == pytest.approx(-(B @ w), abs=1e-10)

    @pytest.mark.parametrize('divergence', ['entropic', {'alpha': 1.5}, {'alpha': 2.0}], ids=str)
    def test_dual_ascent_respects_weak_duality(self, three_marginals, make_problem, tight_opts, divergence):
        """Test the dual never decreases across sweeps and never exceeds the primal optimum."""
        prob = make_problem(three_marginals, divergence, 0.3)
        final = solve(prob, tight_opts)
        solver = DOTSolver(prob, tight_opts)
        duals = [_dual_value(solver)]
        while solver.max_residual() > tight_opts.tol and solver.iterations < 5000:
            solver.sweep()
            duals.append(_dual_value(solver))
        assert len(duals) > 1
        for before, after in zip(duals, duals[1:]):
            assert after >= before - 1e-12 * max(1.0, abs(before))
        assert max(duals) <= final.primal_value + 1e-10

    def test_collapsed_bracket_with_jump_raises(self, monkeypatch):
        """Test a discontinuous F whose bracket shrinks to a point is not accepted as a root."""
        monkeypatch.setattr(div, 'psi_prime', lambda spec, y: np.where(np.asarray(y) > 0.25, 2.0, 0.5))
        monkeypatch.setattr(div, 'psi_second', lambda spec, y: np.zeros_like(np.asarray(y, dtype=float)))
        B = np.array([[0.0, 1.0]])
        W = np.array([0.5, 0.5])
        with pytest.raises(NumericError):
            _solve_atoms_generic(div.alpha_divergence(2.0), B, W, 1e-12, 200, 200)
