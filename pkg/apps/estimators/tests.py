"""
Tests for the estimators app.

This test suite covers:
- Empirical returns and their mean squared error
- MLMC level draws, combination and expected cost
- REINFORCE gradient and Fisher samples
"""
import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError
from apps.core.rng import Phase, RngStream
from apps.estimators.services import EstimatorService
from apps.mdp import catalog
from apps.mdp.domain import Trajectory
from apps.mdp.services import MdpService
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.scalarization.domain import AlphaFair, KinkedQuadratic, WeightedSum


class EmpiricalReturnTestCase(SimpleTestCase):
    """Test cases for empirical_return."""

    def setUp(self):
        """Set up a base stream."""
        self.stream = RngStream(master_seed=3, phase=Phase.J_BATCH)

    def test_deterministic_returns(self):
        """Test r = 1, gamma = 0.5, H = 3 gives 1.75 for any B."""
        mdp = catalog.constant_reward(1.0, 0.5)
        policy = PolicyParams.for_mdp(mdp)
        for batch_size in (1, 2, 7):
            estimate = EstimatorService.empirical_return(
                mdp, policy, 3, batch_size, self.stream
            )
            np.testing.assert_array_equal(estimate.j_hat, [1.75])
            self.assertEqual(estimate.batch_size, batch_size)

    def test_monte_carlo_mean(self):
        """Test the batch mean matches the exact J_H within 3 sigma."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.4, -0.1, 0.2, 0.7])
        count = 20_000
        batch = MdpService.sample_batch(
            mdp, policy, 10, self.stream, count, threads=4
        )
        returns = MdpService.batch_returns(batch, mdp)
        exact = OracleService.exact_returns_truncated(mdp, policy, 10)
        sigma = returns.std(axis=0, ddof=1) / np.sqrt(count)

        self.assertTrue(
            np.all(np.abs(returns.mean(axis=0) - exact) <= 3 * sigma)
        )

    def test_mse_bound_by_enumeration(self):
        """Test E||J_hat - J_H||^2 <= M / ((1 - gamma)^2 B) exactly."""
        mdp = catalog.symmetric_bandit(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.3, 0.0])
        f = WeightedSum((1.0, 1.0))
        for horizon in (1, 2, 3):
            for batch_size in (1, 2, 4, 8):
                expectation = OracleService.enumerate_batch_expectation(
                    mdp, policy, f, horizon, batch_size
                )
                self.assertLessEqual(
                    expectation.mse_J,
                    OracleService.return_mse_bound(2, 0.9, batch_size),
                )

    def test_batch_size_checked(self):
        """Test B = 0 is rejected."""
        mdp = catalog.symmetric_bandit()
        with self.assertRaises(ConfigurationError):
            EstimatorService.empirical_return(
                mdp, PolicyParams.for_mdp(mdp), 3, 0, self.stream
            )


class MlmcTestCase(SimpleTestCase):
    """Test cases for the MLMC partials."""

    def setUp(self):
        """Set up a chain MDP, a policy and an AlphaFair utility."""
        self.mdp = catalog.two_state_chain(0.9)
        self.policy = PolicyParams.for_mdp(self.mdp, [0.5, 0.0, -0.3, 0.2])
        self.f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)

    def test_level_arithmetic(self):
        """Test the level cap, effective B_max and expected cost."""
        self.assertEqual(EstimatorService.level_cap(1), 0)
        self.assertEqual(EstimatorService.level_cap(100), 6)
        self.assertEqual(EstimatorService.effective_b_max(100), 64)
        self.assertAlmostEqual(EstimatorService.expected_mlmc_cost(8), 3.125)
        with self.assertRaises(ConfigurationError):
            EstimatorService.level_cap(0)

    def test_expected_cost_by_monte_carlo(self):
        """Test 10^5 level draws match the analytic cost within 3 sigma."""
        draws = np.array([
            EstimatorService.draw_level(
                RngStream(master_seed=17, outer_iteration=i).with_phase(
                    Phase.MLMC_DRAW
                )
            )
            for i in range(100_000)
        ])
        self.assertGreaterEqual(draws.min(), 1)
        for b_max in (4, 64, 1024):
            cap = EstimatorService.level_cap(b_max)
            costs = np.where(draws <= cap, 2.0 ** draws, 1.0)
            sigma = costs.std(ddof=1) / np.sqrt(costs.size)
            self.assertLessEqual(
                abs(costs.mean() - EstimatorService.expected_mlmc_cost(b_max)),
                3 * sigma,
            )

    def test_b_max_one_is_single_plug_in(self):
        """Test B_max = 1 returns the B1 = 1 plug-in from the same lane."""
        for k in range(5):
            stream = RngStream(master_seed=2, outer_iteration=k)
            mlmc = EstimatorService.mlmc_partials(
                self.mdp, self.policy, self.f, 6, 1, stream
            )
            estimate = EstimatorService.empirical_return(
                self.mdp, self.policy, 6, 1,
                stream.with_phase(Phase.J_BATCH),
            )

            self.assertTrue(mlmc.truncated)
            self.assertEqual(mlmc.trajectories_used, 1)
            np.testing.assert_array_equal(
                mlmc.partials, self.f.grad(estimate.j_hat)
            )

    def test_deterministic_mdp(self):
        """Test identical level samples make the differences vanish."""
        mdp = catalog.deterministic_cycle(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.2, -0.4, 1.0, 0.0])
        J_H = OracleService.exact_returns_truncated(mdp, policy, 5)
        for k in range(20):
            mlmc = EstimatorService.mlmc_partials(
                mdp, policy, self.f, 5, 64,
                RngStream(master_seed=9, outer_iteration=k),
            )
            np.testing.assert_allclose(
                mlmc.partials, self.f.grad(J_H), rtol=1e-12
            )

    def test_combine_coupled(self):
        """Test the coupled combination at level 1."""
        returns = np.array([[1.0, 2.0], [3.0, 2.0]])
        mlmc = EstimatorService.mlmc_combine(self.f, returns, 1, 4)
        first = self.f.grad(returns[0])
        expected = first + 2 * (self.f.grad([2.0, 2.0]) - first)

        np.testing.assert_allclose(mlmc.partials, expected)
        self.assertFalse(mlmc.truncated)
        self.assertEqual(mlmc.trajectories_used, 2)

    def test_combine_uncoupled_and_truncated(self):
        """Test the fresh-base variant and the truncated branch."""
        returns = np.array([[1.0, 2.0], [3.0, 2.0]])
        base = np.array([2.0, 1.0])
        uncoupled = EstimatorService.mlmc_combine(
            self.f, returns, 1, 4, base_return=base
        )
        truncated = EstimatorService.mlmc_combine(
            self.f, returns[:1], 3, 4
        )

        self.assertEqual(uncoupled.trajectories_used, 3)
        np.testing.assert_allclose(
            uncoupled.partials,
            self.f.grad(base)
            + 2 * (self.f.grad([2.0, 2.0]) - self.f.grad(returns[0])),
        )
        self.assertTrue(truncated.truncated)
        np.testing.assert_allclose(
            truncated.partials, self.f.grad(returns[0])
        )

    def test_combine_checks_sample_count(self):
        """Test a level with the wrong number of returns is rejected."""
        with self.assertRaises(ConfigurationError):
            EstimatorService.mlmc_combine(
                self.f, np.ones((3, 2)), 2, 8
            )

    def test_linear_utility_has_no_correction(self):
        """Test a linear f gives its weights for every draw."""
        f = WeightedSum((0.25, 0.75))
        for k in range(10):
            mlmc = EstimatorService.mlmc_partials(
                self.mdp, self.policy, f, 4, 16,
                RngStream(master_seed=4, outer_iteration=k),
                coupled_base=bool(k % 2),
            )
            np.testing.assert_allclose(mlmc.partials, [0.25, 0.75])


class ReinforceGradTestCase(SimpleTestCase):
    """Test cases for reinforce_grad and batch_gradients."""

    def setUp(self):
        """Set up a chain MDP batch."""
        self.mdp = catalog.two_state_chain(0.9)
        self.policy = PolicyParams.for_mdp(self.mdp, [0.1, 0.6, -0.2, 0.3])
        self.batch = MdpService.sample_batch(
            self.mdp, self.policy, 6, RngStream(master_seed=8), 12
        )

    def test_zero_partials(self):
        """Test zero partials give a zero gradient."""
        g = EstimatorService.reinforce_grad(
            self.batch[0], np.zeros(2), self.policy, self.mdp
        )

        np.testing.assert_array_equal(g.g, np.zeros(4))

    def test_zero_rewards(self):
        """Test an all-zero reward trajectory gives a zero gradient."""
        mdp = catalog.constant_reward(0.0, 0.9, n_actions=2)
        policy = PolicyParams.for_mdp(mdp, [0.3, -0.3])
        g = EstimatorService.reinforce_grad(
            Trajectory([0, 0, 0], [0, 1, 1]), [1.0], policy, mdp
        )

        np.testing.assert_array_equal(g.g, np.zeros(2))

    def test_batch_matches_single(self):
        """Test the vectorized path agrees with the per-trajectory one."""
        partials = np.array([0.7, -0.2])
        grads = EstimatorService.batch_gradients(
            self.batch, partials, self.policy, self.mdp
        )
        components = EstimatorService.reinforce_components(
            self.batch, self.policy, self.mdp
        )
        for i in range(self.batch.size):
            single = EstimatorService.reinforce_grad(
                self.batch[i], partials, self.policy, self.mdp
            )
            np.testing.assert_allclose(grads[i], single.g, atol=1e-14)
            np.testing.assert_allclose(
                partials @ components[i], single.g, atol=1e-14
            )

    def test_sample_bound(self):
        """Test every sample respects the worst-case norm bound."""
        partials = np.array([1.0, 1.0])
        grads = EstimatorService.batch_gradients(
            self.batch, partials, self.policy, self.mdp
        )
        bound = EstimatorService.gradient_sample_bound(
            partials, 0.9, np.sqrt(2.0)
        )

        self.assertTrue(np.all(np.linalg.norm(grads, axis=1) <= bound))


class FisherSampleTestCase(SimpleTestCase):
    """Test cases for fisher_sample."""

    def test_single_step(self):
        """Test H = 1, uniform policy, action 0 in normalized mode."""
        mdp = catalog.symmetric_bandit(0.9)
        sample = EstimatorService.fisher_sample(
            Trajectory([0], [0]), PolicyParams.for_mdp(mdp), 0.9
        )
        expected = 0.1 * np.outer([0.5, -0.5], [0.5, -0.5])

        np.testing.assert_allclose(sample.f_hat, expected)

    def test_unnormalized(self):
        """Test the raw estimator omits the (1 - gamma) factor."""
        mdp = catalog.symmetric_bandit(0.9)
        policy = PolicyParams.for_mdp(mdp)
        traj = Trajectory([0, 0], [0, 1])
        raw = EstimatorService.fisher_sample(traj, policy, 0.9, False)
        normalized = EstimatorService.fisher_sample(traj, policy, 0.9, True)

        np.testing.assert_allclose(normalized.f_hat, 0.1 * raw.f_hat)

    def test_positive_semidefinite(self):
        """Test samples are symmetric with eigenvalues >= -1e-12."""
        mdp = catalog.two_state_chain(0.9)
        rng = np.random.default_rng(5)
        for seed in range(10):
            policy = PolicyParams.for_mdp(mdp, rng.normal(size=4))
            traj = MdpService.sample_trajectory(
                mdp, policy, 15, RngStream(master_seed=seed)
            )
            f_hat = EstimatorService.fisher_sample(traj, policy, 0.9).f_hat
            np.testing.assert_allclose(f_hat, f_hat.T)
            self.assertGreaterEqual(np.linalg.eigvalsh(f_hat).min(), -1e-12)

    def test_monte_carlo_mean(self):
        """Test the mean sample matches the exact Fisher within 3 sigma."""
        mdp = catalog.two_state_chain(0.5)
        policy = PolicyParams.for_mdp(mdp, [0.8, -0.3, 0.1, 0.5])
        count = 20_000
        batch = MdpService.sample_batch(
            mdp, policy, 40, RngStream(master_seed=21), count, threads=4
        )
        fishers = EstimatorService.trajectory_fishers(batch, policy, 0.5)
        exact = OracleService.exact_fisher(mdp, policy).fisher
        sigma = fishers.std(axis=0, ddof=1) / np.sqrt(count)

        self.assertTrue(
            np.all(np.abs(fishers.mean(axis=0) - exact) <= 3 * sigma + 1e-12)
        )

    def test_batch_statistics(self):
        """Test the pair equals the separate batch means."""
        mdp = catalog.two_state_chain(0.9)
        policy = PolicyParams.for_mdp(mdp, [0.1, 0.2, 0.3, 0.4])
        batch = MdpService.sample_batch(
            mdp, policy, 5, RngStream(master_seed=1), 9
        )
        partials = np.array([0.5, 1.5])
        grad, fisher = EstimatorService.batch_statistics(
            batch, partials, policy, mdp
        )

        np.testing.assert_allclose(
            grad,
            EstimatorService.batch_gradients(
                batch, partials, policy, mdp
            ).mean(axis=0),
        )
        np.testing.assert_allclose(
            fisher, EstimatorService.batch_fisher(batch, policy, 0.9)
        )
