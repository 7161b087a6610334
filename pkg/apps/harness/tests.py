"""
Tests for the harness app.

This test suite covers:
- Log-log slope fits
- Bias/variance and inner-loop campaigns
- Run configs, report files and the management commands
- Budget comparison between vanilla and MLMC NPG
"""
import csv
import json
import math
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from apps.core.exceptions import (
    ConfigurationError,
    InsufficientReplicationsError,
    RefusalError,
)
from apps.harness.serializers import RunConfigSerializer
from apps.harness.services import HarnessService
from apps.mdp import catalog
from apps.mdp.serializers import MdpSerializer
from apps.npg.domain import EmpiricalEstimator, NpgConfig, OracleEstimator
from apps.npg.services import NpgService
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.scalarization.domain import AlphaFair, KinkedQuadratic, WeightedSum

NPG_SCHEDULE = {
    'explicit': {
        'outer_iters': 6, 'inner_iters': 4, 'horizon': 5,
        'step_alpha': 0.05, 'B1': 4, 'B2': 2,
    },
}
MLMC_SCHEDULE = {
    'explicit': {
        'outer_iters': 6, 'inner_iters': 4, 'horizon': 5,
        'step_alpha': 0.05, 'B_max': 8, 'B': 2,
    },
}


class WorkspaceMixin:
    """Scratch directory holding an MDP file and run configs."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.mdp_path = self.root / 'bandit.json'
        self.mdp_path.write_text(
            json.dumps(MdpSerializer(catalog.symmetric_bandit(0.9)).data)
        )

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, name='run.json', **fields):
        config = {
            'mdp_path': 'bandit.json',
            'scalarization': {'family': 'alpha_fair', 'alpha': 2.0},
            'algorithm': 'npg',
            'schedule': NPG_SCHEDULE,
            'seed': 3,
        }
        config.update(fields)
        path = self.root / name
        path.write_text(json.dumps(config))
        return path


class FitSlopeTestCase(SimpleTestCase):
    """Test cases for fit_loglog_slope."""

    def test_inverse(self):
        """Test y = 4/x gives slope -1 and intercept ln 4."""
        fit = HarnessService.fit_loglog_slope(
            [(x, 4.0 / x) for x in (1, 2, 4, 8)]
        )

        self.assertAlmostEqual(fit.slope, -1.0)
        self.assertAlmostEqual(fit.intercept, math.log(4.0))
        self.assertAlmostEqual(fit.stderr, 0.0)
        self.assertEqual(fit.n_points, 4)

    def test_inverse_square_root(self):
        """Test y = 2/sqrt(x) gives slope -0.5."""
        fit = HarnessService.fit_loglog_slope(
            [(x, 2.0 / math.sqrt(x)) for x in (1, 4, 16, 64)]
        )

        self.assertAlmostEqual(fit.slope, -0.5)

    def test_constant(self):
        """Test a constant series gives slope 0."""
        fit = HarnessService.fit_loglog_slope([(1, 3.0), (2, 3.0), (5, 3.0)])

        self.assertLessEqual(abs(fit.slope), 1e-12)

    def test_noisy_series_has_stderr(self):
        """Test scattered points report a positive standard error."""
        fit = HarnessService.fit_loglog_slope(
            [(1, 1.0), (2, 0.6), (4, 0.2), (8, 0.15)]
        )

        self.assertGreater(fit.stderr, 0.0)

    def test_refusals(self):
        """Test too few, non-positive and repeated points are refused."""
        with self.assertRaises(RefusalError):
            HarnessService.fit_loglog_slope([(1, 1.0), (2, 0.5)])
        with self.assertRaises(RefusalError):
            HarnessService.fit_loglog_slope([(1, 1.0), (2, 0.0), (4, 0.1)])
        with self.assertRaises(RefusalError):
            HarnessService.fit_loglog_slope([(2, 1.0), (2, 0.5), (4, 0.1)])


class BiasVarianceTestCase(SimpleTestCase):
    """Test cases for measure_bias_variance."""

    def setUp(self):
        """Set up the asymmetric bandit at H = 1."""
        self.mdp = catalog.asymmetric_bandit(0.9)
        self.sizes = [4, 8, 16, 32, 64, 128, 256]

    def test_linear_utility_is_unbiased(self):
        """Test w = (1,1) has zero bias at every B and no bias fit."""
        report = HarnessService.measure_bias_variance(
            catalog.two_state_chain(0.9), [0.2, -0.1, 0.4, 0.0],
            WeightedSum((1.0, 1.0)), 3, 'empirical', [1, 2, 4],
        )

        for row in report.rows:
            self.assertLessEqual(row.bias_norm, 1e-10)
            self.assertTrue(row.excluded_from_fit)
        self.assertIsNone(report.fitted_slope_bias)

    def test_smooth_utility_bias_rate(self):
        """Test AlphaFair bias falls like 1/B."""
        report = HarnessService.measure_bias_variance(
            self.mdp, [math.log(4.0), 0.0],
            AlphaFair(alpha=2.0, delta=0.05, n_objectives=2), 1,
            'empirical', self.sizes,
        )

        self.assertEqual([row.B for row in report.rows], self.sizes)
        self.assertAlmostEqual(
            report.fitted_slope_bias.slope, -1.0, delta=0.25
        )
        for row in report.rows:
            self.assertLessEqual(
                row.mse_J, OracleService.return_mse_bound(2, 0.9, row.B)
            )

    def test_kinked_utility_bias_rate(self):
        """Test a kink at J_H makes the bias fall like 1/sqrt(B)."""
        policy = PolicyParams.for_mdp(self.mdp)
        J_H = OracleService.exact_returns_truncated(self.mdp, policy, 1)
        report = HarnessService.measure_bias_variance(
            self.mdp, None, KinkedQuadratic(kinks=tuple(J_H)), 1,
            'empirical', self.sizes,
        )

        self.assertAlmostEqual(
            report.fitted_slope_bias.slope, -0.5, delta=0.2
        )

    def test_mlmc_rows(self):
        """Test MLMC rows leave mse_J empty and shrink the bias."""
        f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        single = HarnessService.measure_bias_variance(
            self.mdp, [math.log(4.0), 0.0], f, 1, 'empirical', [1],
        ).rows[0]
        report = HarnessService.measure_bias_variance(
            self.mdp, [math.log(4.0), 0.0], f, 1, 'mlmc', [4, 16],
        )

        self.assertEqual(report.estimator_kind, 'mlmc')
        for row in report.rows:
            self.assertIsNone(row.mse_J)
            self.assertLess(row.bias_norm, single.bias_norm)

    def test_mlmc_variance_grows_at_most_logarithmically(self):
        """Test MLMC variance / log2(B_max) stays bounded up to 256."""
        sizes = [4, 16, 64, 256]
        report = HarnessService.measure_bias_variance(
            self.mdp, [math.log(4.0), 0.0],
            AlphaFair(alpha=2.0, delta=0.05, n_objectives=2), 1, 'mlmc',
            sizes,
        )
        scaled = [row.variance / math.log2(row.B) for row in report.rows]

        self.assertEqual([row.B for row in report.rows], sizes)
        self.assertTrue(all(row.variance > 0.0 for row in report.rows))
        self.assertLessEqual(max(scaled), 1.5 * scaled[0])
        self.assertLess(report.fitted_slope_variance.slope, 0.5)

    def test_horizon_bias_reported(self):
        """Test the horizon term stays below its analytic bound."""
        report = HarnessService.measure_bias_variance(
            catalog.two_state_chain(0.9), None,
            AlphaFair(alpha=2.0, delta=0.05, n_objectives=2), 3,
            'empirical', [1, 2],
        )

        self.assertGreater(report.horizon_bias, 0.0)
        self.assertLessEqual(report.horizon_bias, report.horizon_bias_bound)

    def test_montecarlo_rows(self):
        """Test Monte Carlo rows agree with enumeration within their CI."""
        f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        theta = [math.log(4.0), 0.0]
        exact = HarnessService.measure_bias_variance(
            self.mdp, theta, f, 1, 'empirical', [2, 4],
        )
        sampled = HarnessService.measure_bias_variance(
            self.mdp, theta, f, 1, 'empirical', [2, 4], replications=1000,
            mode='montecarlo', seed=5, threads=4,
        )

        for want, got in zip(exact.rows, sampled.rows):
            self.assertEqual(got.replications, 1000)
            self.assertGreater(got.ci_halfwidth, 0.0)
            self.assertIsNotNone(got.mse_J)
            self.assertLessEqual(
                abs(got.bias_norm - want.bias_norm), 2 * got.ci_halfwidth
            )

    def test_montecarlo_thread_count(self):
        """Test Monte Carlo rows do not depend on the thread count."""
        f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        runs = [
            HarnessService.measure_bias_variance(
                self.mdp, None, f, 2, 'mlmc', [4], replications=1000,
                mode='montecarlo', seed=1, threads=threads,
            ).as_dict()
            for threads in (1, 8)
        ]

        self.assertEqual(runs[0], runs[1])

    def test_too_few_replications(self):
        """Test Monte Carlo mode refuses fewer than 1000 replications."""
        with self.assertRaises(InsufficientReplicationsError):
            HarnessService.measure_bias_variance(
                self.mdp, None, WeightedSum((1.0, 1.0)), 1, 'empirical',
                [1, 2], replications=10, mode='montecarlo',
            )

    def test_bad_arguments(self):
        """Test unknown kinds, modes and batch sizes are rejected."""
        f = WeightedSum((1.0, 1.0))
        with self.assertRaises(ConfigurationError):
            HarnessService.measure_bias_variance(
                self.mdp, None, f, 1, 'bootstrap', [1],
            )
        with self.assertRaises(ConfigurationError):
            HarnessService.measure_bias_variance(
                self.mdp, None, f, 1, 'empirical', [1], mode='exact',
            )
        with self.assertRaises(ConfigurationError):
            HarnessService.measure_bias_variance(
                self.mdp, None, f, 1, 'empirical', [0, 2],
            )


class InnerLoopTestCase(SimpleTestCase):
    """Test cases for measure_inner_loop."""

    def setUp(self):
        """Set up a chain MDP at gamma = 0.5."""
        self.mdp = catalog.two_state_chain(0.5)
        self.f = AlphaFair(alpha=2.0, delta=0.05, n_objectives=2)
        self.theta = [0.3, -0.2, 0.1, 0.5]

    def test_fisher_bias_within_bound(self):
        """Test delta_F and sigma_F^2 stay below their bounds."""
        diagnostics = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 5, 1, 2000, seed=2, threads=4,
        )
        spectrum = OracleService.exact_fisher(
            self.mdp, PolicyParams.for_mdp(self.mdp, self.theta)
        )

        self.assertLessEqual(
            diagnostics.delta_F,
            diagnostics.fisher_bias_bound + diagnostics.delta_F_ci,
        )
        self.assertAlmostEqual(diagnostics.lambda_F, spectrum.lambda_F)
        self.assertLessEqual(
            diagnostics.sigma_F_sq, diagnostics.fisher_variance_bound
        )
        self.assertGreater(diagnostics.R_0, 0.0)

    def test_variance_halves_with_batch(self):
        """Test doubling B halves sigma_F^2."""
        one = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 27, 1, 8000, seed=3, threads=4,
        )
        two = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 27, 2, 8000, seed=4, threads=4,
        )

        self.assertAlmostEqual(
            two.sigma_F_sq / one.sigma_F_sq, 0.5, delta=0.1
        )

    def test_single_action_has_no_variance(self):
        """Test a one-action MDP has a zero Fisher estimate."""
        mdp = catalog.constant_reward(1.0, 0.9, n_actions=1)
        diagnostics = HarnessService.measure_inner_loop(
            mdp, None, WeightedSum((1.0,)), 10, 1, 1000,
        )

        self.assertLessEqual(diagnostics.sigma_F_sq, 1e-12)
        self.assertEqual(diagnostics.lambda_F, 0.0)

    def test_unnormalized_scale(self):
        """Test the unnormalized mode scales by 1 / (1 - gamma)."""
        normalized = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 5, 1, 1000, seed=6,
        )
        raw = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 5, 1, 1000, seed=6,
            normalize=False,
        )

        self.assertAlmostEqual(raw.lambda_F, 2.0 * normalized.lambda_F)
        self.assertAlmostEqual(
            raw.sigma_F_sq, 4.0 * normalized.sigma_F_sq, places=10
        )

    def test_config_settings(self):
        """Test a run config supplies H, B2, seed and normalization."""
        config = NpgConfig(
            outer_iters=1, inner_iters=4, horizon=5, step_alpha=0.1,
            estimator=EmpiricalEstimator(8, 2), master_seed=6,
            fisher_normalized=False, theta_init=self.theta,
        )
        direct = HarnessService.measure_inner_loop(
            self.mdp, self.theta, self.f, 5, 2, 1000, seed=6,
            normalize=False,
        )
        from_config = HarnessService.measure_inner_loop_for_config(
            self.mdp, self.f, config, 1000,
        )

        self.assertEqual(from_config.as_dict(), direct.as_dict())
        with self.assertRaises(ConfigurationError):
            HarnessService.measure_inner_loop_for_config(
                self.mdp, self.f,
                replace(config, estimator=OracleEstimator()), 1000,
            )

    def test_too_few_replications(self):
        """Test fewer than 1000 replications are refused."""
        with self.assertRaises(InsufficientReplicationsError):
            HarnessService.measure_inner_loop(
                self.mdp, self.theta, self.f, 5, 1, 100,
            )


class RunConfigSerializerTestCase(SimpleTestCase):
    """Test cases for RunConfigSerializer."""

    def config(self, **fields):
        data = {
            'mdp_path': 'bandit.json',
            'scalarization': {'family': 'weighted_sum', 'weights': [1, 1]},
            'algorithm': 'npg',
            'schedule': NPG_SCHEDULE,
        }
        data.update(fields)
        return RunConfigSerializer(data=data)

    def test_valid_explicit(self):
        """Test an explicit npg config validates with defaults."""
        serializer = self.config()

        self.assertTrue(serializer.is_valid(), serializer.errors)
        block = serializer.validated_data['schedule']['explicit']
        self.assertTrue(block['fisher_normalized'])
        self.assertFalse(block['warm_start'])
        self.assertEqual(serializer.validated_data['seed'], 0)

    def test_missing_batch_sizes(self):
        """Test mlmc_npg with B1/B2 only is rejected."""
        serializer = self.config(algorithm='mlmc_npg')

        self.assertFalse(serializer.is_valid())
        self.assertIn('schedule', serializer.errors)

    def test_two_schedules(self):
        """Test a schedule block holding both kinds is rejected."""
        schedule = {
            **NPG_SCHEDULE,
            'theorem': {'epsilon': 0.1, 'which': 'theorem2'},
        }

        self.assertFalse(self.config(schedule=schedule).is_valid())

    def test_theorem_must_match_algorithm(self):
        """Test vanilla NPG cannot use the theorem1 schedule."""
        schedule = {'theorem': {'epsilon': 0.1, 'which': 'theorem1'}}

        self.assertFalse(self.config(schedule=schedule).is_valid())

    def test_bad_epsilon(self):
        """Test epsilon outside (0,1) is rejected."""
        schedule = {'theorem': {'epsilon': 1.0, 'which': 'theorem2'}}

        self.assertFalse(self.config(schedule=schedule).is_valid())

    def test_negative_step(self):
        """Test a non-positive step_alpha is rejected."""
        block = {**NPG_SCHEDULE['explicit'], 'step_alpha': 0.0}

        self.assertFalse(
            self.config(schedule={'explicit': block}).is_valid()
        )


class RunExperimentTestCase(WorkspaceMixin, SimpleTestCase):
    """Test cases for run_experiment and the report files."""

    def read_csv(self, directory):
        with (Path(directory) / 'report.csv').open(newline='') as handle:
            return list(csv.DictReader(handle))

    def test_missing_mdp(self):
        """Test a missing MDP file is a configuration error."""
        path = self.write_config(mdp_path='nope.json')

        with self.assertRaises(ConfigurationError) as ctx:
            HarnessService.run_experiment(path, out=self.root / 'out')

        self.assertEqual(ctx.exception.message, 'config: mdp_path not found')

    def test_invalid_config(self):
        """Test serializer errors surface as a configuration error."""
        path = self.write_config(algorithm='sgd')

        with self.assertRaises(ConfigurationError) as ctx:
            HarnessService.run_experiment(path)

        self.assertIn('algorithm', ctx.exception.context['violations'])

    def test_report_files(self):
        """Test the CSV has K rows with growing trajectory counts."""
        report, directory = HarnessService.run_experiment(
            self.write_config(), out=self.root / 'out'
        )
        rows = self.read_csv(directory)
        document = json.loads((directory / 'report.json').read_text())

        self.assertEqual(len(rows), 6)
        self.assertEqual(
            [int(row['trajectories_cum']) for row in rows],
            [12 * (k + 1) for k in range(6)],
        )
        self.assertEqual(document['total_trajectories'], 72)
        self.assertEqual(document['total_env_steps'], 72 * 5)
        self.assertIsNotNone(document['f_star'])
        self.assertIn('gap_to_ref', document['iterations'][0])
        self.assertEqual(document['config_echo']['master_seed'], 3)

    def test_mlmc_report_levels(self):
        """Test MLMC rows carry the drawn level."""
        path = self.write_config(
            algorithm='mlmc_npg', schedule=MLMC_SCHEDULE
        )
        _, directory = HarnessService.run_experiment(
            path, out=self.root / 'out'
        )

        for row in self.read_csv(directory):
            self.assertGreaterEqual(int(row['level_q']), 1)

    def test_output_path_relative_to_config(self):
        """Test output_path resolves next to the config file."""
        _, directory = HarnessService.run_experiment(
            self.write_config(output_path='reports/first')
        )

        self.assertEqual(directory, self.root / 'reports/first')
        self.assertTrue((directory / 'report.json').is_file())

    def test_seed_override(self):
        """Test the seed argument replaces the config seed."""
        report, _ = HarnessService.run_experiment(
            self.write_config(), out=self.root / 'out', seed=11
        )

        self.assertEqual(report.config.master_seed, 11)

    def test_algorithm_mismatch(self):
        """Test a runner refuses a config for the other algorithm."""
        with self.assertRaises(ConfigurationError):
            HarnessService.run_experiment(
                self.write_config(), out=self.root / 'out',
                algorithm='mlmc_npg',
            )

    def test_theorem_schedule(self):
        """Test a theorem2 config fills batch sizes from epsilon."""
        path = self.write_config(
            schedule={'theorem': {'epsilon': 0.5, 'which': 'theorem2',
                                  'outer_iters': 2, 'inner_iters': 3}},
        )
        report, _ = HarnessService.run_experiment(
            path, out=self.root / 'out'
        )
        config = report.config

        self.assertEqual(config.estimator.batch_j, 200)
        self.assertEqual(config.horizon, 14)
        self.assertEqual(config.inner_iters, 3)
        self.assertEqual(report.total_trajectories, 2 * (200 + 3 * 200))

    def test_byte_identical_across_threads(self):
        """Test 1 and 8 threads write identical report files."""
        path = self.write_config(
            algorithm='mlmc_npg', schedule=MLMC_SCHEDULE
        )
        HarnessService.run_experiment(path, threads=1, out=self.root / 'a')
        HarnessService.run_experiment(path, threads=8, out=self.root / 'b')

        for name in ('report.json', 'report.csv'):
            self.assertEqual(
                (self.root / 'a' / name).read_bytes(),
                (self.root / 'b' / name).read_bytes(),
            )


class CommandTestCase(WorkspaceMixin, SimpleTestCase):
    """Test cases for the management commands."""

    def call(self, *args):
        stdout, stderr = StringIO(), StringIO()
        call_command(*args, stdout=stdout, stderr=stderr)
        return stdout.getvalue()

    def test_simulate(self):
        """Test simulate prints trajectories and returns."""
        output = json.loads(self.call(
            'simulate', '--mdp', str(self.mdp_path), '--horizon', '3',
            '--count', '4', '--seed', '2',
        ))

        self.assertEqual(len(output['returns']), 4)
        self.assertEqual(len(output['states'][0]), 3)

    def test_oracle(self):
        """Test oracle prints J of the uniform bandit."""
        output = json.loads(self.call(
            'oracle', '--mdp', str(self.mdp_path), '--scalarization',
            '{"family": "weighted_sum", "weights": [1, 1]}',
        ))

        np.testing.assert_allclose(output['J'], [5.0, 5.0])
        self.assertAlmostEqual(output['f_value'], 10.0)

    def test_estimate_bias_then_fit_rates(self):
        """Test a campaign CSV feeds fit_rates with a 1/B bias slope."""
        mdp_path = self.root / 'asymmetric.json'
        mdp_path.write_text(
            json.dumps(MdpSerializer(catalog.asymmetric_bandit(0.9)).data)
        )
        self.call(
            'estimate_bias', '--mdp', str(mdp_path),
            '--scalarization',
            '{"family": "alpha_fair", "alpha": 2.0, "delta": 0.05}',
            '--theta', json.dumps([math.log(4.0), 0.0]), '--horizon', '1',
            '--batch-sizes', '4,8,16,32,64,128,256',
            '--out', str(self.root / 'bias'),
        )
        fit = json.loads(self.call(
            'fit_rates', str(self.root / 'bias' / 'report.csv'),
        ))

        self.assertEqual(fit['n_points'], 7)
        self.assertAlmostEqual(fit['slope'], -1.0, delta=0.25)

    def test_symmetric_point_has_nothing_to_fit(self):
        """Test a zero-bias campaign is refused by fit_rates."""
        self.call(
            'estimate_bias', '--mdp', str(self.mdp_path),
            '--scalarization',
            '{"family": "alpha_fair", "alpha": 2.0, "delta": 0.05}',
            '--horizon', '1',
            '--batch-sizes', '4,8,16,32', '--out', str(self.root / 'bias'),
        )

        with self.assertRaises(CommandError) as ctx:
            self.call('fit_rates', str(self.root / 'bias' / 'report.csv'))
        self.assertEqual(ctx.exception.returncode, 4)

    def test_run_npg(self):
        """Test run_npg writes reports to --out."""
        self.call(
            'run_npg', str(self.write_config()), '--out',
            str(self.root / 'out'),
        )

        self.assertTrue((self.root / 'out' / 'report.csv').is_file())

    def test_configuration_exit_code(self):
        """Test a config error exits with code 2 and a JSON record."""
        stderr = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command(
                'run_mlmc_npg', str(self.write_config()), stdout=StringIO(),
                stderr=stderr,
            )

        self.assertEqual(ctx.exception.returncode, 2)
        record = json.loads(stderr.getvalue())
        self.assertFalse(record['success'])
        self.assertEqual(record['error'], 'config')

    def test_refusal_exit_code(self):
        """Test too few replications exits with code 4."""
        with self.assertRaises(CommandError) as ctx:
            self.call(
                'inner_loop', '--mdp', str(self.mdp_path),
                '--scalarization', '{"family": "alpha_fair", "alpha": 2}',
                '--horizon', '5', '--replications', '10',
            )

        self.assertEqual(ctx.exception.returncode, 4)

    def test_budget_exit_code(self):
        """Test an enumeration over budget exits with code 4."""
        with self.assertRaises(CommandError) as ctx:
            self.call(
                'estimate_bias', '--mdp', str(self.mdp_path),
                '--scalarization', '{"family": "alpha_fair", "alpha": 2}',
                '--horizon', '12', '--batch-sizes', '1,2', '--budget', '100',
            )

        self.assertEqual(ctx.exception.returncode, 4)

    def test_bad_batch_sizes(self):
        """Test a malformed --batch-sizes list exits with code 2."""
        with self.assertRaises(CommandError) as ctx:
            self.call(
                'estimate_bias', '--mdp', str(self.mdp_path),
                '--scalarization', '{"family": "alpha_fair", "alpha": 2}',
                '--horizon', '1', '--batch-sizes', '1,two',
            )

        self.assertEqual(ctx.exception.returncode, 2)

    def test_fit_rates_missing_file(self):
        """Test fit_rates on a missing CSV exits with code 2."""
        with self.assertRaises(CommandError) as ctx:
            self.call('fit_rates', str(self.root / 'missing.csv'))

        self.assertEqual(ctx.exception.returncode, 2)


class BudgetTestCase(SimpleTestCase):
    """Test cases for the budget measurements."""

    def test_budget_to_gap(self):
        """Test the budget counts trajectories up to the first hit."""
        mdp = catalog.symmetric_bandit(0.9)
        f = WeightedSum((1.0, 0.0))
        report = NpgService.run_vanilla_npg(mdp, f, NpgConfig(
            outer_iters=20, inner_iters=5, horizon=10, step_alpha=0.2,
            estimator=EmpiricalEstimator(4, 4), master_seed=1,
        ))
        values = [r.exact_f for r in report.iterations]
        gap = 10.0 - values[4]
        first = next(k for k, v in enumerate(values) if 10.0 - v <= gap)

        self.assertEqual(
            HarnessService.measure_budget_to_gap(report, 10.0, gap),
            (first + 1) * 24,
        )
        self.assertIsNone(
            HarnessService.measure_budget_to_gap(report, 100.0, 1e-3)
        )


@tag('slow')
class BudgetComparisonTestCase(SimpleTestCase):
    """Test MLMC needs fewer trajectories than vanilla at small gaps."""

    def test_mlmc_cheaper_at_tight_gap(self):
        """Test the vanilla/MLMC budget ratio reaches 2 at epsilon 0.025."""
        comparisons = HarnessService.compare_budgets(
            catalog.asymmetric_bandit(0.9),
            KinkedQuadratic(kinks=(5.5, 5.5)),
            epsilons=[0.1, 0.025], seeds=range(5), outer_iters=60,
            inner_iters=20, horizon=60, step_alpha=0.01, step_beta=0.5,
            theta_init=[1.5, -1.5], threads=4,
        )
        tight = comparisons[-1]

        self.assertIsNotNone(tight.mlmc_budget)
        self.assertGreaterEqual(tight.ratio, 2.0)
