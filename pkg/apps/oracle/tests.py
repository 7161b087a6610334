"""
Tests for the oracle app.

This test suite covers:
- Exact values, truncated returns and return Jacobians
- Fisher spectrum and the exact NPG direction
- Trajectory enumeration and the exact estimator expectations
- Grid reference optimum
"""
import math

import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    OracleError,
    UnsupportedShapeError,
)
from apps.core.rng import RngStream
from apps.estimators.services import EstimatorService
from apps.mdp import catalog
from apps.mdp.domain import TrajectoryBatch
from apps.mdp.services import MdpService
from apps.oracle.services import OracleService
from apps.oracle.utils import exact_report
from apps.policy.domain import PolicyParams
from apps.policy.services import PolicyService
from apps.scalarization.domain import AlphaFair, KinkedQuadratic, WeightedSum
from apps.scalarization.services import ScalarizationService


def exact_f(mdp, theta, f, horizon=None):
    policy = PolicyParams.for_mdp(mdp, theta)
    if horizon is None:
        return f.value(OracleService.exact_values(mdp, policy).J)
    return f.value(OracleService.exact_returns_truncated(mdp, policy, horizon))


class ExactValuesTestCase(SimpleTestCase):
    """Test cases for exact_values and exact_returns_truncated."""

    def test_constant_reward(self):
        """Test r = 1, gamma = 0.9 gives J = 10."""
        mdp = catalog.constant_reward(1.0, 0.9)
        values = OracleService.exact_values(mdp, PolicyParams.for_mdp(mdp))

        np.testing.assert_allclose(values.J, [10.0])

    def test_uniform_bandit(self):
        """Test the uniform symmetric bandit gives J = (5, 5)."""
        mdp = catalog.symmetric_bandit(0.9)
        values = OracleService.exact_values(mdp, PolicyParams.for_mdp(mdp))

        np.testing.assert_allclose(values.J, [5.0, 5.0])
        np.testing.assert_allclose(values.occupancy, [[0.5, 0.5]])

    def test_monte_carlo_cross_check(self):
        """Test J matches long rollouts on a random MDP within 3 sigma."""
        mdp = catalog.three_state_random(0.9, seed=4)
        policy = PolicyParams.for_mdp(mdp, [0.2, -0.5, 1.0, 0.1, -0.3, 0.4])
        count = 20_000
        batch = MdpService.sample_batch(
            mdp, policy, 200, RngStream(master_seed=12), count, threads=4
        )
        returns = MdpService.batch_returns(batch, mdp)
        J = OracleService.exact_values(mdp, policy).J
        sigma = returns.std(axis=0, ddof=1) / math.sqrt(count)

        self.assertTrue(np.all(np.abs(returns.mean(axis=0) - J) <= 3 * sigma))

    def test_long_horizon_matches_infinite(self):
        """Test J_H approaches J once gamma^H is negligible."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.3, 0.1, -0.4, 0.9])
        J_H = OracleService.exact_returns_truncated(mdp, policy, 400)
        J = OracleService.exact_values(mdp, policy).J

        np.testing.assert_allclose(J_H, J, atol=1e-10)

    def test_short_horizon(self):
        """Test r = 1, gamma = 0.5, H = 3 gives 1.75."""
        mdp = catalog.constant_reward(1.0, 0.5)
        J_H = OracleService.exact_returns_truncated(
            mdp, PolicyParams.for_mdp(mdp), 3
        )

        np.testing.assert_allclose(J_H, [1.75])

    def test_matches_enumeration(self):
        """Test J_H equals the path-weighted mean of truncated returns."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.5, -0.5, 0.2, 0.0])
        enumeration = OracleService.enumerate_trajectories(mdp, policy, 3)

        self.assertAlmostEqual(enumeration.probs.sum(), 1.0)
        np.testing.assert_allclose(
            enumeration.probs @ enumeration.returns,
            OracleService.exact_returns_truncated(mdp, policy, 3),
            atol=1e-12,
        )

    def test_advantages_are_centred(self):
        """Test sum_a pi(a|s) A_m(s, a) = 0 in every state."""
        mdp = catalog.three_state_random(0.9)
        policy = PolicyParams.for_mdp(
            mdp, np.random.default_rng(2).normal(size=6)
        )
        values = OracleService.exact_values(mdp, policy)
        centred = np.einsum('sa,msa->ms', values.probs, values.A_adv)

        np.testing.assert_allclose(centred, np.zeros((2, 3)), atol=1e-10)

    def test_occupancy_consistency(self):
        """Test nu sums over actions to d and d is a distribution."""
        mdp = catalog.three_state_random(0.9, seed=4)
        policy = PolicyParams.for_mdp(
            mdp, np.random.default_rng(4).normal(size=6)
        )
        values = OracleService.exact_values(mdp, policy)

        np.testing.assert_allclose(
            values.occupancy.sum(axis=1), values.state_occupancy, atol=1e-12
        )
        self.assertAlmostEqual(values.state_occupancy.sum(), 1.0)
        self.assertTrue(np.all(values.state_occupancy >= 0.0))
        np.testing.assert_allclose(
            values.J, values.occupancy.reshape(-1)
            @ mdp.rewards.reshape(2, -1).T / (1.0 - 0.9),
        )

    def test_singular_solve(self):
        """Test a singular system raises OracleError."""
        with self.assertRaises(OracleError):
            OracleService._solve(np.zeros((2, 2)), np.ones(2), 'test')


class GradientTestCase(SimpleTestCase):
    """Test cases for the exact scalarized gradient."""

    def setUp(self):
        """Set up a chain MDP and an AlphaFair utility."""
        self.mdp = catalog.two_state_chain(0.9)
        # returns on this chain stay above the floor for every theta
        self.f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        self.rng = np.random.default_rng(7)

    def test_symmetric_zero_gradient(self):
        """Test w = (1,1) on the uniform symmetric bandit has zero gradient."""
        mdp = catalog.symmetric_bandit(0.9)
        grad = OracleService.exact_scalarized_gradient(
            mdp, PolicyParams.for_mdp(mdp), WeightedSum((1.0, 1.0))
        )

        np.testing.assert_allclose(grad, np.zeros(2), atol=1e-12)

    def test_finite_differences(self):
        """Test both modes match central differences at random theta."""
        step = 1e-5
        for _ in range(20):
            theta = self.rng.normal(size=4)
            policy = PolicyParams.for_mdp(self.mdp, theta)
            for horizon in (None, 6):
                grad = OracleService.exact_scalarized_gradient(
                    self.mdp, policy, self.f, horizon
                )
                numeric = np.array([
                    (exact_f(self.mdp, theta + step * e, self.f, horizon)
                     - exact_f(self.mdp, theta - step * e, self.f, horizon))
                    / (2 * step)
                    for e in np.eye(4)
                ])
                np.testing.assert_allclose(grad, numeric, atol=1e-6)

    def test_gradient_norm_bound(self):
        """Test ||grad f|| <= C M G_1 / (1 - gamma)^2."""
        constants = ScalarizationService.constants(self.f, 0.9)
        bound = OracleService.gradient_norm_bound(constants)
        for _ in range(10):
            policy = PolicyParams.for_mdp(self.mdp, self.rng.normal(size=4))
            grad = OracleService.exact_scalarized_gradient(
                self.mdp, policy, self.f
            )
            self.assertLessEqual(np.linalg.norm(grad), bound)

    def test_horizon_bias_bound(self):
        """Test ||grad f(J) - grad f(J_H)|| stays below its bound."""
        constants = ScalarizationService.constants(self.f, 0.9)
        policy = PolicyParams.for_mdp(self.mdp, [0.3, -0.2, 0.5, 0.1])
        infinite = OracleService.exact_scalarized_gradient(
            self.mdp, policy, self.f
        )
        for horizon in (2, 5, 20):
            truncated = OracleService.exact_scalarized_gradient(
                self.mdp, policy, self.f, horizon
            )
            self.assertLessEqual(
                np.linalg.norm(infinite - truncated),
                OracleService.horizon_gradient_bound(constants, horizon),
            )

    def test_enumerated_reinforce_mean(self):
        """Test the path mean of reinforce_grad equals grad f(J_H)."""
        policy = PolicyParams.for_mdp(self.mdp, [0.4, -0.1, -0.6, 0.3])
        enumeration = OracleService.enumerate_trajectories(
            self.mdp, policy, 3
        )
        J_H = OracleService.exact_returns_truncated(self.mdp, policy, 3)
        batch = TrajectoryBatch(enumeration.states, enumeration.actions)
        grads = EstimatorService.batch_gradients(
            batch, self.f.grad(J_H), policy, self.mdp
        )

        np.testing.assert_allclose(
            enumeration.probs @ grads,
            OracleService.exact_scalarized_gradient(
                self.mdp, policy, self.f, 3
            ),
            atol=1e-10,
        )


class FisherTestCase(SimpleTestCase):
    """Test cases for exact_fisher and exact_npg_direction."""

    def test_shift_directions_are_null(self):
        """Test per-state all-ones shifts lie in the null space."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.3, -0.7, 1.2, 0.4])
        fisher = OracleService.exact_fisher(mdp, policy).fisher
        for shift in ([1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]):
            self.assertLessEqual(np.linalg.norm(fisher @ shift), 1e-12)

    def test_uniform_bandit_spectrum(self):
        """Test the uniform 2-arm Fisher has eigenvalues {0, 0.5}."""
        mdp = catalog.symmetric_bandit(0.9)
        spectrum = OracleService.exact_fisher(mdp, PolicyParams.for_mdp(mdp))

        np.testing.assert_allclose(
            np.linalg.eigvalsh(spectrum.fisher), [0.0, 0.5], atol=1e-12
        )
        self.assertAlmostEqual(spectrum.mu_range, 0.5)
        self.assertAlmostEqual(spectrum.lambda_F, 0.5)
        self.assertEqual(spectrum.rank, 1)

    def test_expected_sample_matches_long_horizon(self):
        """Test the exact mean of the sampled Fisher at large H."""
        mdp = catalog.two_state_chain(0.5)
        policy = PolicyParams.for_mdp(mdp, [0.2, 0.1, -0.3, 0.6])
        expected = OracleService.expected_fisher_sample(mdp, policy, 60)

        np.testing.assert_allclose(
            expected, OracleService.exact_fisher(mdp, policy).fisher,
            atol=1e-12,
        )

    def test_short_horizon_within_bias_bound(self):
        """Test ||E[F_hat] - F|| <= G_1^2 gamma^H at H = 3."""
        mdp = catalog.two_state_chain(0.5)
        policy = PolicyParams.for_mdp(mdp, [0.2, 0.1, -0.3, 0.6])
        gap = np.linalg.norm(
            OracleService.expected_fisher_sample(mdp, policy, 3)
            - OracleService.exact_fisher(mdp, policy).fisher,
            ord=2,
        )

        self.assertLessEqual(
            gap, OracleService.fisher_bias_bound(math.sqrt(2.0), 0.5, 3)
        )

    def test_bound_values(self):
        """Test the closed-form Fisher and return bounds."""
        G_1 = math.sqrt(2.0)

        self.assertAlmostEqual(
            OracleService.fisher_bias_bound(G_1, 0.5, 3), 0.25
        )
        self.assertAlmostEqual(
            OracleService.fisher_variance_bound(G_1, 0.5, 4, 3), 1.0625
        )
        self.assertAlmostEqual(
            OracleService.return_mse_bound(2, 0.9, 4), 50.0
        )

    def test_zero_gradient_direction(self):
        """Test grad f = 0 gives omega* = 0."""
        mdp = catalog.symmetric_bandit(0.9)
        omega = OracleService.exact_npg_direction(
            mdp, PolicyParams.for_mdp(mdp), WeightedSum((1.0, 1.0))
        )

        np.testing.assert_allclose(omega, np.zeros(2), atol=1e-12)

    def test_scalar_range_inverse(self):
        """Test F = c I on its range gives omega* = proj(grad f) / c."""
        mdp = catalog.symmetric_bandit(0.9)
        policy = PolicyParams.for_mdp(mdp)
        f = WeightedSum((1.0, 0.0))
        grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
        direction = np.array([1.0, -1.0]) / math.sqrt(2.0)
        projected = direction * (direction @ grad)

        np.testing.assert_allclose(
            OracleService.exact_npg_direction(mdp, policy, f),
            projected / 0.5,
        )

    def test_pseudoinverse_projects_onto_range(self):
        """Test F F^+ g removes exactly the per-state shift components."""
        mdp = catalog.three_state_random(0.9)
        policy = PolicyParams.for_mdp(
            mdp, np.random.default_rng(6).normal(size=6)
        )
        spectrum = OracleService.exact_fisher(mdp, policy)
        g = np.random.default_rng(8).normal(size=6)
        blocks = g.reshape(3, 2)
        projected = (blocks - blocks.mean(axis=1, keepdims=True)).reshape(-1)

        self.assertEqual(spectrum.rank, 3)
        np.testing.assert_allclose(
            spectrum.fisher @ spectrum.solve(g), projected, atol=1e-9
        )
        grad = OracleService.exact_scalarized_gradient(
            mdp, policy, AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        )
        np.testing.assert_allclose(
            spectrum.fisher @ spectrum.solve(grad), grad, atol=1e-9
        )

    def test_exact_report(self):
        """Test the oracle report carries every quantity."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp)
        report = exact_report(mdp, policy, WeightedSum((0.5, 0.5)), 4)

        for key in ('J', 'J_H', 'V', 'Q', 'A_adv', 'occupancy', 'grad_f',
                    'grad_f_H', 'fisher', 'mu_range', 'lambda_F',
                    'npg_direction', 'theta'):
            self.assertIn(key, report)
        self.assertEqual(report['horizon'], 4)


class EnumerationTestCase(SimpleTestCase):
    """Test cases for exact estimator expectations by enumeration."""

    def setUp(self):
        """Set up the symmetric bandit at the uniform policy."""
        self.bandit = catalog.symmetric_bandit(0.9)
        self.uniform = PolicyParams.for_mdp(self.bandit)

    def test_budget_refusal(self):
        """Test enumeration beyond the budget is refused."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp)
        self.assertEqual(
            OracleService.count_paths(
                mdp, PolicyService.all_action_probs(policy), 3
            ),
            64,
        )
        with self.assertRaises(BudgetExceededError) as ctx:
            OracleService.enumerate_trajectories(mdp, policy, 3, budget=50)

        self.assertEqual(ctx.exception.required, 64)
        self.assertEqual(ctx.exception.exit_code, 4)

    def test_compositions_and_weights(self):
        """Test count vectors and multinomial weights."""
        counts = OracleService.compositions(3, 2)
        weights = OracleService.multinomial_weights(
            counts, np.array([0.2, 0.3, 0.5])
        )

        self.assertEqual(counts.shape, (6, 3))
        np.testing.assert_array_equal(counts.sum(axis=1), np.full(6, 2))
        self.assertAlmostEqual(weights.sum(), 1.0)
        index = next(
            i for i, row in enumerate(counts) if row.tolist() == [1, 1, 0]
        )
        self.assertAlmostEqual(weights[index], 2 * 0.2 * 0.3)

    def test_deterministic_mdp_is_unbiased(self):
        """Test a single-outcome MDP has zero bias and zero MSE."""
        mdp = catalog.deterministic_cycle(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.5, 0.0, 0.0, 0.5])
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        J_H = OracleService.exact_returns_truncated(mdp, policy, 3)
        for batch_size in (1, 3, 8):
            expectation = OracleService.enumerate_batch_expectation(
                mdp, policy, f, 3, batch_size
            )
            np.testing.assert_allclose(
                expectation.mean_partials, f.grad(J_H), rtol=1e-12
            )
            self.assertLessEqual(expectation.mse_J, 1e-24)

    def test_linear_utility_is_unbiased(self):
        """Test a linear utility has zero plug-in bias for every B."""
        f = WeightedSum((0.3, 0.7))
        for batch_size in (1, 2, 5, 16):
            expectation = OracleService.enumerate_batch_expectation(
                self.bandit, self.uniform, f, 2, batch_size
            )
            np.testing.assert_allclose(
                expectation.mean_partials, [0.3, 0.7], atol=1e-12
            )

    def test_kinked_bias_scales_as_root_b(self):
        """Test |bias(B)| sqrt(B) stays within a factor 2 for c = J_H."""
        J_H = OracleService.exact_returns_truncated(
            self.bandit, self.uniform, 1
        )
        f = KinkedQuadratic(kinks=tuple(J_H))
        scaled = []
        for batch_size in (1, 2, 4, 8, 16):
            expectation = OracleService.enumerate_batch_expectation(
                self.bandit, self.uniform, f, 1, batch_size
            )
            bias = np.linalg.norm(expectation.mean_partials - f.grad(J_H))
            scaled.append(bias * math.sqrt(batch_size))

        self.assertGreater(min(scaled), 0.0)
        self.assertLessEqual(max(scaled) / min(scaled), 2.0)

    def test_mlmc_telescoping(self):
        """Test MLMC at B_max = 4 has the batch-4 expectation."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.3, -0.3, 0.8, 0.0])
        f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        batch = OracleService.enumerate_batch_expectation(
            mdp, policy, f, 1, 4
        )
        self.assertEqual(
            OracleService.enumerate_trajectories(mdp, policy, 1).size, 4
        )
        for coupled in (True, False):
            mlmc = OracleService.enumerate_mlmc_expectation(
                mdp, policy, f, 1, 4, coupled_base=coupled
            )
            np.testing.assert_allclose(
                mlmc.mean_partials, batch.mean_partials, atol=1e-10
            )
            np.testing.assert_allclose(
                mlmc.mean_gradient, batch.mean_gradient, atol=1e-10
            )

    def test_mlmc_expected_cost(self):
        """Test the enumerated cost matches the analytic formula."""
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        mlmc = OracleService.enumerate_mlmc_expectation(
            self.bandit, self.uniform, f, 1, 8
        )
        uncoupled = OracleService.enumerate_mlmc_expectation(
            self.bandit, self.uniform, f, 1, 8, coupled_base=False
        )

        self.assertAlmostEqual(mlmc.expected_cost, 3.125)
        self.assertAlmostEqual(uncoupled.expected_cost, 3.125 + 0.875)

    def test_mlmc_bias_at_fixed_cost(self):
        """Test MLMC at B_max = 16 cuts the single-sample bias by 3x."""
        J_H = OracleService.exact_returns_truncated(
            self.bandit, self.uniform, 1
        )
        f = KinkedQuadratic(kinks=tuple(J_H))
        reference = f.grad(J_H)
        single = OracleService.enumerate_batch_expectation(
            self.bandit, self.uniform, f, 1, 1
        )
        batch = OracleService.enumerate_batch_expectation(
            self.bandit, self.uniform, f, 1, 16
        )
        mlmc = OracleService.enumerate_mlmc_expectation(
            self.bandit, self.uniform, f, 1, 16
        )
        mlmc_bias = np.linalg.norm(mlmc.mean_partials - reference)

        self.assertAlmostEqual(
            mlmc_bias, np.linalg.norm(batch.mean_partials - reference),
            delta=1e-10,
        )
        self.assertLessEqual(
            mlmc_bias,
            np.linalg.norm(single.mean_partials - reference) / 3.0,
        )

    def test_mlmc_budget_refusal(self):
        """Test MLMC enumeration beyond the budget is refused."""
        f = WeightedSum((1.0, 1.0))
        with self.assertRaises(BudgetExceededError):
            OracleService.enumerate_mlmc_expectation(
                self.bandit, self.uniform, f, 1, 64, budget=10_000
            )


class ReferenceOptimumTestCase(SimpleTestCase):
    """Test cases for reference_optimum."""

    def test_symmetric_alpha_fair(self):
        """Test the symmetric bandit optimum is the even mix."""
        mdp = catalog.symmetric_bandit(0.9)
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        optimum = OracleService.reference_optimum(mdp, f)

        np.testing.assert_allclose(optimum.action_probs, [[0.5, 0.5]],
                                   atol=1e-6)
        self.assertAlmostEqual(optimum.f_star, -0.4, places=9)

    def test_weighted_vertex(self):
        """Test w = (1,0) picks arm 0 with f* = 1 / (1 - gamma)."""
        mdp = catalog.symmetric_bandit(0.9)
        optimum = OracleService.reference_optimum(mdp, WeightedSum((1.0, 0.0)))

        np.testing.assert_allclose(optimum.action_probs, [[1.0, 0.0]])
        self.assertAlmostEqual(optimum.f_star, 10.0)

    def test_two_state_dominates_random_policies(self):
        """Test the 2-state optimum beats random softmax policies."""
        mdp = catalog.two_state_chain(0.9)
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        optimum = OracleService.reference_optimum(mdp, f)
        rng = np.random.default_rng(3)
        for _ in range(50):
            value = exact_f(mdp, rng.normal(scale=2.0, size=4), f)
            self.assertLessEqual(value, optimum.f_star + 1e-9)

    def test_unsupported_shape(self):
        """Test a three-state MDP is refused."""
        with self.assertRaises(UnsupportedShapeError):
            OracleService.reference_optimum(
                catalog.three_state_random(), WeightedSum((1.0, 1.0))
            )

    def test_resolution_floor(self):
        """Test grids coarser than 1000 points are rejected."""
        with self.assertRaises(ConfigurationError):
            OracleService.reference_optimum(
                catalog.symmetric_bandit(), WeightedSum((1.0, 1.0)),
                grid_resolution=100,
            )
