"""
Test cases for shadows, the strong-convexity certifier and the stability experiment.
"""
import pytest
import numpy as np

from dotbench.cli.commands import figure_problem
from dotbench.core.errors import UnsupportedDivergenceError, ValidationError
from dotbench.experiments.shadow_stability import (
    log_log_slope,
    perturb,
    project_to_marginals,
    random_feasible_coupling,
    random_problem,
    shadow,
    stability_experiment,
    strong_convexity_check,
    strong_convexity_suite,
    translation_perturbation,
    value_continuity_check,
)
from dotbench.models.schemas import PerturbConfig
from dotbench.ot import divergence as div
from dotbench.ot.exact import marginal_tuple_distance
from dotbench.ot.measure import MarginalTuple, jitter, make_rng, translate
from dotbench.ot.solver import Coupling, solve


class TestShadow:
    """Test cases for shadow couplings."""

    def test_translation_moves_product(self, small_marginals):
        """Test the shadow of P under a translation is the translated product."""
        moved = MarginalTuple(tuple(translate(m, 0.3) for m in small_marginals), 2.0)
        result = shadow(Coupling.product(small_marginals), moved, 2.0, div.entropic())
        assert np.allclose(result.shadow.mass, moved.product_weights(), atol=1e-12)
        assert result.transport_cost == pytest.approx(np.sqrt(0.18), abs=1e-9)

    def test_shadow_meets_target_marginals(self, small_marginals, make_problem, rng):
        """Test the shadow is a coupling of the perturbed tuple."""
        pi = solve(make_problem(small_marginals, {'alpha': 2.0}, 0.3)).coupling
        target = MarginalTuple(tuple(jitter(m, 0.05, rng, dirichlet=20.0) for m in small_marginals), 2.0)
        result = shadow(pi, target, 2.0, div.alpha_divergence(2.0))
        assert result.shadow.feasibility_residual() <= 1e-8
        assert result.transport_cost == pytest.approx(marginal_tuple_distance(small_marginals, target, 2.0),
                                                      abs=1e-8)

    def test_shadow_does_not_increase_divergence(self, small_marginals, make_problem, rng):
        """Test data processing: D(shadow, P~) <= D(pi, P)."""
        pi = solve(make_problem(small_marginals, 'entropic', 0.2)).coupling
        target = MarginalTuple(tuple(jitter(m, 0.05, rng, dirichlet=20.0) for m in small_marginals), 2.0)
        result = shadow(pi, target, 2.0, div.entropic())
        assert result.divergence_after <= result.divergence_before + 1e-9

    def test_length_mismatch(self, small_marginals, three_marginals):
        """Test shadowing onto a tuple of another length."""
        with pytest.raises(ValidationError):
            shadow(Coupling.product(small_marginals), three_marginals, 2.0, div.entropic())


class TestFeasibleCouplings:
    """Test cases for iterative fitting and random feasible couplings."""

    def test_projection_is_feasible(self, three_marginals, rng):
        """Test fitting a random positive tensor onto the marginals."""
        tensor = np.exp(rng.standard_normal(three_marginals.shape))
        assert project_to_marginals(tensor, three_marginals).feasibility_residual() <= 1e-10

    def test_projection_needs_positive_tensor(self, small_marginals):
        """Test zeros are rejected."""
        with pytest.raises(ValidationError):
            project_to_marginals(np.zeros(small_marginals.shape), small_marginals)

    def test_random_feasible_coupling(self, small_marginals, rng):
        """Test the mixture stays feasible and mix = 0 returns the input."""
        base = Coupling.product(small_marginals)
        assert random_feasible_coupling(base, rng).feasibility_residual() <= 1e-9
        same = random_feasible_coupling(base, rng, mix=0.0)
        assert np.allclose(same.mass, base.mass)


class TestStrongConvexity:
    """Test cases for the strong-convexity certifier."""

    @pytest.mark.integration
    def test_product_coupling_on_support_figure_instance(self):
        """Test pi = P on the entropic support-figure instance passes with positive slack."""
        prob = figure_problem(0.01, 10, 'entropic')
        result = strong_convexity_check(prob, Coupling.product(prob.marginals), q=1.0)
        assert result['ok']
        assert result['slack'] > 0

    @pytest.mark.parametrize('divergence', ['entropic', {'alpha': 1.5}, {'alpha': 2.0}, {'poly_beta': 2}], ids=str)
    def test_random_pairs_hold(self, small_marginals, make_problem, divergence):
        """Test the inequality on random feasible couplings."""
        prob = make_problem(small_marginals, divergence, 0.5)
        solution = solve(prob)
        rng = make_rng(5)
        for _ in range(5):
            pi = random_feasible_coupling(solution.coupling, rng)
            assert strong_convexity_check(prob, pi, q=1.0, solution=solution)['ok']

    def test_optimizer_itself(self, small_marginals, make_problem):
        """Test pi = pi* gives zero left-hand side."""
        prob = make_problem(small_marginals, 'entropic', 0.5)
        solution = solve(prob)
        result = strong_convexity_check(prob, solution.coupling, solution=solution)
        assert result['lhs'] == pytest.approx(0.0, abs=1e-20)
        assert result['ok']

    def test_infeasible_coupling(self, small_marginals, make_problem):
        """Test a coupling with wrong marginals is rejected."""
        prob = make_problem(small_marginals)
        bad = Coupling(small_marginals, np.full(small_marginals.shape, 1.0 / 12))
        with pytest.raises(ValidationError):
            strong_convexity_check(prob, bad)

    def test_unsupported_divergence(self, small_marginals, make_problem):
        """Test PolyDual(3) has no certificate."""
        prob = make_problem(small_marginals, {'poly_beta': 3})
        with pytest.raises(UnsupportedDivergenceError):
            strong_convexity_check(prob, Coupling.product(small_marginals))

    def test_suite(self):
        """Test the randomized suite produces one row per pair and no violations."""
        rows = strong_convexity_suite(['entropic', {'alpha': 2.0}], pairs=6, couplings_per_instance=3, seed=1)
        assert len(rows) == 12
        assert {r.divergence for r in rows} == {'entropic', 'alpha-2'}
        assert all(r.ok for r in rows)

    def test_suite_is_deterministic(self):
        """Test identical seeds give identical rows."""
        first = strong_convexity_suite(['entropic'], pairs=4, couplings_per_instance=2, seed=3)
        second = strong_convexity_suite(['entropic'], pairs=4, couplings_per_instance=2, seed=3)
        assert [r.model_dump() for r in first] == [r.model_dump() for r in second]


class TestPerturbations:
    """Test cases for perturbation generators and value continuity."""

    def test_translation_realizes_level(self, small_marginals, rng):
        """Test translations split the level evenly so W_p(mu; mu~) equals it."""
        moved = translation_perturbation(small_marginals, 0.1, rng)
        assert marginal_tuple_distance(small_marginals, moved, 2.0) == pytest.approx(0.1, abs=1e-9)

    def test_jitter_bounded_by_level(self, small_marginals, rng):
        """Test jitter never exceeds the requested level."""
        moved = perturb(small_marginals, 0.1, rng, PerturbConfig(kind='jitter'))
        assert marginal_tuple_distance(small_marginals, moved, 2.0) <= 0.1 + 1e-9

    def test_zero_level_is_identity(self, small_marginals, rng):
        """Test level 0 returns the marginals unchanged."""
        assert perturb(small_marginals, 0.0, rng) is small_marginals

    def test_value_continuity_tiny_jitter(self, rng):
        """Test |OT(mu) - OT(mu~)| <= L W_p(mu; mu~) for a small jitter of the figure instance."""
        prob = figure_problem(1.0, 10, 'entropic')
        target = perturb(prob.marginals, 1e-3, rng)
        result = value_continuity_check(prob, target)
        assert result['ok']
        assert result['value_gap'] <= result['bound']


class TestStabilityExperiment:
    """Test cases for the optimizer stability experiment."""

    @pytest.mark.integration
    def test_geometric_levels(self):
        """Test ratios stay bounded and the slope is at least 1/(2q) - 0.1."""
        prob = figure_problem(1.0, 10, 'entropic')
        levels = [2.0 ** -k for k in range(3, 9)]
        report = stability_experiment(prob, q=2.0, levels=levels, seed=0)
        assert len(report.rows) == 6
        assert all(r.continuity_ok for r in report.rows)
        assert all(r.delta <= r.level + 1e-9 for r in report.rows)
        assert report.slope is not None and report.slope >= 1.0 / 4.0 - 0.1
        assert report.ratio_spread < 10.0

    def test_zero_level_row(self, small_marginals, make_problem):
        """Test a zero level gives zero distance and ratio."""
        report = stability_experiment(make_problem(small_marginals, 'entropic', 0.5), q=1.0, levels=[0.0, 0.05])
        assert report.rows[0].wq == 0.0
        assert report.rows[0].ratio == 0.0
        assert report.rows[1].wq > 0.0

    def test_q_above_p_rejected(self, small_marginals, make_problem):
        """Test q must lie in [1, p]."""
        with pytest.raises(ValidationError):
            stability_experiment(make_problem(small_marginals), q=3.0, levels=[0.1])

    def test_parallel_matches_serial(self, small_marginals, make_problem):
        """Test worker count does not change the report."""
        prob = make_problem(small_marginals, {'alpha': 2.0}, 0.5)
        serial = stability_experiment(prob, q=2.0, levels=[0.05, 0.1], seed=4, jobs=1)
        threaded = stability_experiment(prob, q=2.0, levels=[0.05, 0.1], seed=4, jobs=2)
        assert serial.model_dump() == threaded.model_dump()


class TestLogLogSlope:
    """Test cases for the log-log slope helper."""

    def test_power_law(self):
        """Test y = x^0.5 has slope 0.5."""
        x = np.array([1.0, 2.0, 4.0, 8.0])
        assert log_log_slope(x, np.sqrt(x)) == pytest.approx(0.5)

    def test_too_few_points(self):
        """Test fewer than two positive points give None."""
        assert log_log_slope([0.0, 1.0], [0.0, 2.0]) is None


@pytest.mark.slow
class TestRandomizedSuites:
    """Test cases running the shadow, strong-convexity and continuity checks on many random instances."""

    DIVERGENCES = ['entropic', {'alpha': 1.5}, {'alpha': 2.0}]

    def test_shadow_properties(self):
        """Test marginals, transport cost and divergence monotonicity on 100 random instances."""
        for k in range(100):
            rng = make_rng(41, k)
            spec = div.from_config(self.DIVERGENCES[k % 3])
            prob = random_problem(rng, spec, epsilon=0.5, n_marginals=2 + k % 2)
            pi = solve(prob).coupling
            target = perturb(prob.marginals, 0.05, rng, PerturbConfig(kind='jitter', dirichlet=20.0))
            result = shadow(pi, target, 2.0, spec)
            assert result.shadow.feasibility_residual() <= 1e-8
            assert result.transport_cost <= marginal_tuple_distance(prob.marginals, target, 2.0) + 1e-9
            assert result.divergence_after <= result.divergence_before + 1e-9

    def test_strong_convexity_pairs(self):
        """Test the inequality on 200 random (instance, coupling) pairs per divergence."""
        rows = strong_convexity_suite(self.DIVERGENCES, pairs=200, couplings_per_instance=10, seed=0)
        assert len(rows) == 600
        violations = [r for r in rows if not r.ok]
        assert violations == []

    def test_value_continuity_pairs(self):
        """Test |OT(mu) - OT(mu~)| <= L W_p(mu; mu~) on 100 random perturbed pairs."""
        for k in range(100):
            rng = make_rng(42, k)
            spec = div.from_config(self.DIVERGENCES[k % 3])
            prob = random_problem(rng, spec, epsilon=(0.2, 1.0)[k % 2], n_marginals=2 + k % 2)
            level = float(rng.uniform(1e-3, 0.1))
            dirichlet = 20.0 if k % 4 == 0 else None
            target = perturb(prob.marginals, level, rng, PerturbConfig(kind='jitter', dirichlet=dirichlet))
            result = value_continuity_check(prob, target)
            assert result['ok'], result
