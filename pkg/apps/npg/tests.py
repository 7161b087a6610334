"""
Tests for the npg app.

This test suite covers:
- The inner-loop solver
- Vanilla, MLMC and oracle outer loops
- Trajectory accounting and seed determinism
- Theorem step-size schedules
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag

from apps.core.exceptions import ConfigurationError, NumericDivergenceError
from apps.mdp import catalog
from apps.npg.domain import (
    EmpiricalEstimator,
    MlmcEstimator,
    NpgConfig,
    OracleEstimator,
)
from apps.npg.services import NpgService
from apps.npg.utils import run_npg
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.policy.services import PolicyService
from apps.scalarization.domain import AlphaFair, WeightedSum
from apps.scalarization.services import ScalarizationService


def first_arm_prob(mdp, theta):
    policy = PolicyParams.for_mdp(mdp, theta)
    return PolicyService.action_probs(policy, 0)[0]


class SolveDirectionTestCase(SimpleTestCase):
    """Test cases for the inner-loop solver."""

    def setUp(self):
        """Set up the oracle Fisher and gradient of the asymmetric bandit."""
        mdp = catalog.asymmetric_bandit(0.9)
        policy = PolicyParams.for_mdp(mdp)
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        self.spectrum = OracleService.exact_fisher(mdp, policy)
        self.grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
        self.omega_star = self.spectrum.solve(self.grad)

    def test_zero_gradient(self):
        """Test g = 0 from omega_0 = 0 stays at zero."""
        supplier = NpgService.fixed_supplier(np.eye(2), np.zeros(2))
        omega = NpgService.solve_direction(supplier, 10, 0.5, np.zeros(2))

        np.testing.assert_array_equal(omega, np.zeros(2))

    def test_identity_unit_step(self):
        """Test F = I, beta = 1 reaches omega = g in one step."""
        grad = np.array([0.3, -1.2, 4.0])
        supplier = NpgService.fixed_supplier(np.eye(3), grad)
        omega = NpgService.solve_direction(supplier, 1, 1.0, np.zeros(3))

        np.testing.assert_allclose(omega, grad)

    def test_geometric_contraction(self):
        """Test the error shrinks by at most 1 - beta mu per step."""
        mu = self.spectrum.mu_range
        beta = mu / PolicyService.score_bound() ** 2
        rate = 1.0 - beta * mu
        scale = np.linalg.norm(self.omega_star)
        errors = [scale]

        def on_step(n, omega):
            errors.append(np.linalg.norm(omega - self.omega_star))

        supplier = NpgService.fixed_supplier(self.spectrum.fisher, self.grad)
        NpgService.solve_direction(supplier, 200, beta, np.zeros(2), on_step)

        for before, after in zip(errors, errors[1:]):
            if before < 1e-4 * scale:
                break
            self.assertLessEqual(after, (rate + 1e-10) * before)
        self.assertLessEqual(errors[-1], 1e-6)

    def test_oversized_step_diverges(self):
        """Test a runaway iterate raises NumericDivergenceError."""
        supplier = NpgService.fixed_supplier(1e200 * np.eye(2), np.ones(2))

        with self.assertRaises(NumericDivergenceError) as ctx:
            NpgService.solve_direction(supplier, 10, 1.0, np.zeros(2))

        self.assertIsNotNone(ctx.exception.iteration)

    def test_non_finite_gradient(self):
        """Test a NaN gradient estimate is refused."""
        supplier = NpgService.fixed_supplier(np.eye(2), [np.nan, 0.0])

        with self.assertRaises(NumericDivergenceError):
            NpgService.solve_direction(supplier, 3, 0.5, np.zeros(2))

    def test_bad_arguments(self):
        """Test N = 0 and beta = 0 are rejected."""
        supplier = NpgService.fixed_supplier(np.eye(2), np.ones(2))

        with self.assertRaises(ConfigurationError):
            NpgService.solve_direction(supplier, 0, 0.5, np.zeros(2))
        with self.assertRaises(ConfigurationError):
            NpgService.solve_direction(supplier, 5, 0.0, np.zeros(2))


class OuterLoopTestCase(SimpleTestCase):
    """Test cases for the vanilla, MLMC and oracle outer loops."""

    def setUp(self):
        """Set up the symmetric bandit with a linear utility."""
        self.mdp = catalog.symmetric_bandit(0.9)
        self.linear = WeightedSum((1.0, 0.0))

    def config(self, estimator, **fields):
        values = {
            'outer_iters': 5, 'inner_iters': 5, 'horizon': 4,
            'step_alpha': 0.1, 'estimator': estimator, 'master_seed': 3,
        }
        values.update(fields)
        return NpgConfig(**values)

    def test_zero_outer_iterations(self):
        """Test K = 0 gives an empty report at theta_init."""
        report = NpgService.run_vanilla_npg(
            self.mdp, self.linear,
            self.config(EmpiricalEstimator(2, 2), outer_iters=0,
                        theta_init=[0.2, 0.1]),
        )

        self.assertEqual(report.iterations, ())
        self.assertEqual(report.total_trajectories, 0)
        np.testing.assert_array_equal(report.theta_final, [0.2, 0.1])

    def test_vanilla_accounting(self):
        """Test each iteration uses B1 + N B2 trajectories."""
        report = NpgService.run_vanilla_npg(
            self.mdp, self.linear,
            self.config(EmpiricalEstimator(batch_j=3, batch_inner=2)),
        )

        for record in report.iterations:
            self.assertEqual(record.trajectories_this_iter, 3 + 5 * 2)
            self.assertIsNone(record.level_q)
        self.assertEqual(report.total_trajectories, 5 * 13)
        self.assertEqual(report.total_env_steps, 5 * 13 * 4)

    def test_mlmc_accounting(self):
        """Test each iteration uses 2^Q or 1 level trajectories plus N B."""
        report = NpgService.run_mlmc_npg(
            self.mdp, self.linear,
            self.config(MlmcEstimator(b_max=8, batch_inner=2),
                        outer_iters=30),
        )

        for record in report.iterations:
            level_cost = 1 if record.truncated else 2 ** record.level_q
            self.assertEqual(record.truncated, record.level_q > 3)
            self.assertEqual(record.trajectories_this_iter, level_cost + 10)

    def test_mlmc_average_cost(self):
        """Test the mean per-iteration cost matches log2 B_max + 2^-6 + N."""
        report = NpgService.run_mlmc_npg(
            self.mdp, self.linear,
            self.config(MlmcEstimator(b_max=64, batch_inner=1),
                        outer_iters=200, inner_iters=10, horizon=2,
                        step_alpha=0.01),
        )
        used = np.array(
            [r.trajectories_this_iter for r in report.iterations]
        )
        mean = 6.0 + 2.0 ** -6
        variance = 126.0 + 2.0 ** -6 - mean ** 2

        self.assertLessEqual(
            abs(used.mean() - (mean + 10)), 3 * math.sqrt(variance / 200)
        )

    def test_unit_b_max_always_truncates(self):
        """Test B_max = 1 spends one level trajectory per iteration."""
        report = NpgService.run_mlmc_npg(
            self.mdp, self.linear,
            self.config(MlmcEstimator(b_max=1, batch_inner=1)),
        )

        for record in report.iterations:
            self.assertTrue(record.truncated)
            self.assertEqual(record.trajectories_this_iter, 1 + 5)

    def test_unit_b_max_replays_vanilla(self):
        """Test B_max = 1 reproduces vanilla NPG with B1 = 1 exactly."""
        f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        vanilla = NpgService.run_vanilla_npg(
            self.mdp, f, self.config(EmpiricalEstimator(1, 2), outer_iters=8)
        )
        mlmc = NpgService.run_mlmc_npg(
            self.mdp, f, self.config(MlmcEstimator(1, 2), outer_iters=8)
        )

        np.testing.assert_array_equal(mlmc.theta_final, vanilla.theta_final)
        self.assertEqual(
            [r.exact_f for r in mlmc.iterations],
            [r.exact_f for r in vanilla.iterations],
        )

    def test_deterministic_returns_match_across_estimators(self):
        """Test vanilla B1 = 1 and MLMC agree when every return is equal."""
        mdp = catalog.deterministic_cycle(0.9)
        f = WeightedSum((1.0, 0.5))
        vanilla = NpgService.run_vanilla_npg(
            mdp, f, self.config(EmpiricalEstimator(1, 2), outer_iters=8)
        )
        mlmc = NpgService.run_mlmc_npg(
            mdp, f, self.config(MlmcEstimator(16, 2), outer_iters=8)
        )

        np.testing.assert_array_equal(vanilla.theta_final, mlmc.theta_final)

    def test_linear_utility_prefers_first_arm(self):
        """Test w = (1,0) drives pi(a0) towards 1 with rising exact f."""
        report = NpgService.run_oracle_npg(
            self.mdp, self.linear,
            self.config(OracleEstimator(), outer_iters=50, inner_iters=50),
        )
        values = [r.exact_f for r in report.iterations]

        self.assertGreater(values[-1], values[0])
        self.assertGreaterEqual(
            first_arm_prob(self.mdp, report.theta_final), 0.99
        )
        self.assertEqual(report.total_trajectories, 0)

    def test_vanilla_linear_utility(self):
        """Test sampled NPG also moves towards the first arm."""
        report = NpgService.run_vanilla_npg(
            self.mdp, self.linear,
            self.config(EmpiricalEstimator(8, 8), outer_iters=40,
                        inner_iters=10, horizon=10),
        )

        self.assertGreater(
            first_arm_prob(self.mdp, report.theta_final), 0.9
        )

    def test_oracle_monotone_improvement(self):
        """Test exact f never drops with oracle inputs and the capped step."""
        mdp = catalog.asymmetric_bandit(0.9)
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        theta = np.array([1.0, -1.0])
        policy = PolicyParams.for_mdp(mdp, theta)
        mu = OracleService.exact_fisher(mdp, policy).mu_range
        constants = ScalarizationService.constants(f, 0.9, mu=mu)
        cap = mu / (4 * constants.L_J * constants.G_1 ** 2)
        report = NpgService.run_oracle_npg(
            mdp, f,
            self.config(OracleEstimator(), outer_iters=30, inner_iters=50,
                        step_alpha=cap, theta_init=theta),
        )
        start = f.value(OracleService.exact_values(mdp, policy).J)
        values = [start] + [r.exact_f for r in report.iterations]

        for before, after in zip(values, values[1:]):
            self.assertGreaterEqual(after, before - 1e-9)

    def test_run_dispatch(self):
        """Test run_npg picks the runner from the estimator kind."""
        report = run_npg(
            self.mdp, self.linear,
            self.config(MlmcEstimator(4, 1), outer_iters=2),
        )

        self.assertEqual(report.algorithm, 'mlmc_npg')

    def test_estimator_mismatch(self):
        """Test a runner refuses the wrong estimator."""
        with self.assertRaises(ConfigurationError):
            NpgService.run_vanilla_npg(
                self.mdp, self.linear, self.config(MlmcEstimator(4, 1))
            )

    def test_objective_count_checked(self):
        """Test a utility over the wrong number of objectives is refused."""
        with self.assertRaises(ConfigurationError):
            NpgService.run_oracle_npg(
                self.mdp, WeightedSum((1.0, 1.0, 1.0)),
                self.config(OracleEstimator()),
            )

    def test_divergence_reports_iteration(self):
        """Test a huge beta fails with the outer iteration attached."""
        with self.assertRaises(NumericDivergenceError) as ctx:
            NpgService.run_oracle_npg(
                self.mdp, self.linear,
                self.config(OracleEstimator(), inner_iters=500,
                            step_beta=1e6),
            )

        self.assertEqual(ctx.exception.iteration, 0)
        self.assertIn('inner_step', ctx.exception.context)

    def test_thread_count_leaves_report_unchanged(self):
        """Test 1 and 8 threads give identical reports."""
        config = self.config(MlmcEstimator(32, 4), outer_iters=10)
        f = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        one = NpgService.run_mlmc_npg(self.mdp, f, config, threads=1)
        eight = NpgService.run_mlmc_npg(self.mdp, f, config, threads=8)

        self.assertEqual(one.as_dict(), eight.as_dict())
        self.assertEqual(one.csv_rows(), eight.csv_rows())

    def test_reference_gap(self):
        """Test with_reference fills gap_to_ref = f_star - exact_f."""
        report = NpgService.run_oracle_npg(
            self.mdp, self.linear, self.config(OracleEstimator())
        ).with_reference(10.0)

        for record in report.iterations:
            self.assertAlmostEqual(record.gap_to_ref, 10.0 - record.exact_f)
        self.assertEqual(report.f_star, 10.0)


@tag('slow')
class SymmetricFairnessTestCase(SimpleTestCase):
    """
    Test both samplers settle at the balanced policy.

    The run starts at theta = (0.5, -0.5) because theta = 0 is already the
    optimum. The floor delta = 2.5 stays inactive for Pr(a0) in
    [0.25, 0.75], so f* and the optimum p = 0.5 match the default floor,
    while L_f drops from 16 to 0.128.
    """

    def setUp(self):
        """Set up the symmetric bandit with AlphaFair alpha = 2."""
        self.mdp = catalog.symmetric_bandit(0.9)
        self.f = AlphaFair(alpha=2.0, delta=2.5, n_objectives=2)
        self.f_star = OracleService.reference_optimum(self.mdp, self.f).f_star

    def config(self, estimator):
        return NpgConfig(
            outer_iters=300, inner_iters=20, horizon=20, step_alpha=0.02,
            estimator=estimator, master_seed=7, theta_init=[0.5, -0.5],
        )

    def check(self, report):
        report = report.with_reference(self.f_star)
        gaps = [r.gap_to_ref for r in report.iterations[-100:]]

        self.assertLessEqual(np.mean(gaps), 0.004)
        self.assertLessEqual(
            abs(first_arm_prob(self.mdp, report.theta_final) - 0.5), 0.05
        )

    def test_vanilla(self):
        """Test vanilla NPG with B1 = B2 = 64."""
        self.check(NpgService.run_vanilla_npg(
            self.mdp, self.f, self.config(EmpiricalEstimator(64, 64)),
            threads=4,
        ))

    def test_mlmc(self):
        """Test MLMC-NPG with B_max = 64 and B = 4."""
        self.check(NpgService.run_mlmc_npg(
            self.mdp, self.f, self.config(MlmcEstimator(64, 4)), threads=4,
        ))


class TheoremScheduleTestCase(SimpleTestCase):
    """Test cases for theorem_schedule."""

    def setUp(self):
        """Set up constants at gamma = 0.9 with mu = 0.25."""
        self.constants = ScalarizationService.constants(
            WeightedSum((1.0, 1.0)), 0.9, mu=0.25
        )
        self.cap = 0.25 / (4 * self.constants.L_J * self.constants.G_1 ** 2)

    def test_theorem1_sizes(self):
        """Test epsilon = 0.1, gamma = 0.9 gives B_max = 100 and H = 44."""
        config = NpgService.theorem_schedule(0.1, self.constants, 'theorem1')

        self.assertIsInstance(config.estimator, MlmcEstimator)
        self.assertEqual(config.estimator.b_max, 100)
        self.assertEqual(config.estimator.batch_inner, 1)
        self.assertEqual(config.horizon, 44)

    def test_theorem2_sizes(self):
        """Test epsilon = 0.1, gamma = 0.9 gives B1 = B2 = 1000."""
        config = NpgService.theorem_schedule(0.1, self.constants, 'theorem2')

        self.assertEqual(config.estimator.batch_j, 1000)
        self.assertEqual(config.estimator.batch_inner, 1000)
        self.assertAlmostEqual(config.step_alpha, self.cap)
        self.assertEqual(
            config.outer_iters, math.ceil(round(1 / (self.cap * 0.1), 9))
        )

    def test_step_clamped(self):
        """Test a scale pushing the step above the cap is clamped."""
        config = NpgService.theorem_schedule(
            0.1, self.constants, 'theorem1', alpha_scale=10.0
        )

        self.assertTrue(config.alpha_clamped)
        self.assertAlmostEqual(config.step_alpha, self.cap)
        self.assertTrue(config.as_dict()['alpha_clamped'])

    def test_step_below_cap(self):
        """Test the default step is cap * epsilon * ln(1/epsilon)."""
        for epsilon in (0.5, 0.1, 0.01, 1e-4):
            config = NpgService.theorem_schedule(
                epsilon, self.constants, 'theorem1'
            )
            alpha = self.cap * epsilon * math.log(1.0 / epsilon)

            self.assertFalse(config.alpha_clamped)
            self.assertAlmostEqual(config.step_alpha / alpha, 1.0)
            self.assertLess(config.step_alpha, self.cap)

    def test_theorem1_outer_iterations(self):
        """Test epsilon = 0.1 gives K = ceil(1 / (alpha epsilon))."""
        config = NpgService.theorem_schedule(0.1, self.constants, 'theorem1')
        alpha = self.cap * 0.1 * math.log(10.0)

        self.assertEqual(
            config.outer_iters, math.ceil(round(1 / (alpha * 0.1), 9))
        )
        self.assertGreater(
            config.outer_iters,
            NpgService.theorem_schedule(
                0.1, self.constants, 'theorem2'
            ).outer_iters,
        )

    def test_inner_iterations(self):
        """Test N follows the log(R_0^2 / epsilon^2) form."""
        config = NpgService.theorem_schedule(
            0.1, self.constants, 'theorem2', R_0=1.0
        )
        c = self.constants
        expected = (
            4 * c.C * 2 * c.G_1 / (0.25 ** 2 * (1 - 0.9) ** 2)
            * math.log(1.0 / 0.01)
        )

        self.assertEqual(config.inner_iters, math.ceil(round(expected, 9)))

    def test_inner_iterations_floor(self):
        """Test R_0 below epsilon still gives N >= 1."""
        config = NpgService.theorem_schedule(
            0.1, self.constants, 'theorem2', R_0=0.01
        )

        self.assertEqual(config.inner_iters, 1)

    def test_rejections(self):
        """Test epsilon = 1, an unknown schedule and mu = 0 are refused."""
        with self.assertRaises(ConfigurationError):
            NpgService.theorem_schedule(1.0, self.constants, 'theorem1')
        with self.assertRaises(ConfigurationError):
            NpgService.theorem_schedule(0.1, self.constants, 'theorem3')
        with self.assertRaises(ConfigurationError):
            NpgService.theorem_schedule(
                0.1,
                ScalarizationService.constants(WeightedSum((1.0,)), 0.9),
                'theorem1',
            )
