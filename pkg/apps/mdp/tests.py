"""
Tests for the mdp app.

This test suite covers:
- MDP validation and the JSON file format
- Trajectory sampling and lane determinism
- Truncated returns
- Visit frequencies against the exact state distributions
"""
import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError
from apps.core.rng import Phase, RngStream
from apps.mdp import catalog
from apps.mdp.domain import TabularMdp, Trajectory
from apps.mdp.serializers import MdpSerializer
from apps.mdp.services import MdpService
from apps.mdp.utils import load_mdp, rollout
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.policy.services import PolicyService


class MdpValidationTestCase(SimpleTestCase):
    """Test cases for validate."""

    def test_degenerate_mdp_is_valid(self):
        """Test a 1-state 1-action self-loop is accepted."""
        result = MdpService.validate(catalog.constant_reward(1.0, 0.9))

        self.assertTrue(result.ok)
        self.assertEqual(result.violations, ())

    def test_row_sum_violation(self):
        """Test a transition row summing to 0.9 is reported."""
        mdp = TabularMdp(
            transitions=[[[0.9]]], rewards=[[[0.5]]], discount=0.9,
            initial_dist=[1.0],
        )
        result = MdpService.validate(mdp)

        self.assertFalse(result.ok)
        self.assertIn('row (s=0,a=0) sums to 0.9', result.violations)

    def test_reward_out_of_range(self):
        """Test a reward of 1.5 is reported."""
        mdp = TabularMdp(
            transitions=[[[1.0]]], rewards=[[[1.5]]], discount=0.9,
            initial_dist=[1.0],
        )
        result = MdpService.validate(mdp)

        self.assertFalse(result.ok)
        self.assertTrue(
            any('reward out of [0,1]' in v for v in result.violations)
        )

    def test_every_violation_listed(self):
        """Test validation collects all problems without raising."""
        mdp = TabularMdp(
            transitions=[[[0.5], [1.0]]], rewards=[[[2.0, -1.0]]],
            discount=1.0, initial_dist=[0.5],
        )
        result = MdpService.validate(mdp)

        self.assertEqual(len(result.violations), 5)

    def test_bad_shapes(self):
        """Test mismatched array shapes are reported."""
        mdp = TabularMdp(
            transitions=np.ones((2, 1, 2)) / 2, rewards=np.zeros((1, 3, 1)),
            discount=0.5, initial_dist=[0.5, 0.5],
        )

        self.assertFalse(MdpService.validate(mdp).ok)


class MdpFileTestCase(SimpleTestCase):
    """Test cases for the MDP file format."""

    def setUp(self):
        """Set up a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, document):
        path = self.root / 'mdp.json'
        path.write_text(json.dumps(document))
        return path

    def test_load_round_trip(self):
        """Test a catalog MDP survives serialization and loading."""
        mdp = catalog.two_state_chain(0.5)
        loaded = load_mdp(self.write(MdpSerializer(mdp).data))

        np.testing.assert_array_equal(loaded.transitions, mdp.transitions)
        np.testing.assert_array_equal(loaded.rewards, mdp.rewards)
        self.assertEqual(loaded.discount, 0.5)

    def test_missing_file(self):
        """Test a missing file reports mdp_path not found."""
        with self.assertRaises(ConfigurationError) as ctx:
            MdpService.load(self.root / 'nope.json')

        self.assertEqual(ctx.exception.message, 'config: mdp_path not found')

    def test_invalid_document_lists_violations(self):
        """Test invariant violations surface as configuration errors."""
        document = catalog.constant_reward().as_dict()
        document['rewards'] = [[[1.5]]]

        with self.assertRaises(ConfigurationError) as ctx:
            MdpService.load(self.write(document))

        self.assertIn('mdp', ctx.exception.context['violations'])

    def test_serializer_rejects_shape_mismatch(self):
        """Test declared sizes must match the nested arrays."""
        document = catalog.symmetric_bandit().as_dict()
        document['n_actions'] = 3
        serializer = MdpSerializer(data=document)

        self.assertFalse(serializer.is_valid())
        self.assertIn('transitions', serializer.errors)

    def test_serializer_rejects_gamma(self):
        """Test gamma outside (0,1) is rejected."""
        document = catalog.symmetric_bandit().as_dict()
        document['gamma'] = 1.0
        serializer = MdpSerializer(data=document)

        self.assertFalse(serializer.is_valid())
        self.assertIn('gamma', serializer.errors)


class SamplingTestCase(SimpleTestCase):
    """Test cases for trajectory sampling."""

    def setUp(self):
        """Set up a chain MDP and a random policy."""
        self.mdp = catalog.two_state_chain(0.9)
        self.policy = PolicyParams.for_mdp(self.mdp, [0.3, -0.2, 1.1, 0.4])
        self.stream = RngStream(master_seed=5, phase=Phase.SIMULATE)

    def test_single_state_path(self):
        """Test every state of a bandit rollout is state 0."""
        mdp = catalog.symmetric_bandit()
        traj = MdpService.sample_trajectory(
            mdp, PolicyParams.for_mdp(mdp), 3, self.stream
        )

        self.assertEqual(traj.horizon, 3)
        self.assertEqual(traj.states.tolist(), [0, 0, 0])

    def test_deterministic_path(self):
        """Test a forced path under a near-deterministic policy."""
        mdp = catalog.deterministic_cycle()
        policy = PolicyParams.for_mdp(mdp, [40.0, 0.0, 0.0, 40.0])
        traj = MdpService.sample_trajectory(mdp, policy, 4, self.stream)

        self.assertEqual(traj.steps, [(0, 0), (1, 1), (0, 0), (1, 1)])

    def test_lane_replay(self):
        """Test the same lane gives the same trajectory twice."""
        first = MdpService.sample_trajectory(
            self.mdp, self.policy, 12, self.stream.trajectory(3)
        )
        second = MdpService.sample_trajectory(
            self.mdp, self.policy, 12, self.stream.trajectory(3)
        )

        self.assertEqual(first, second)

    def test_batch_matches_single_draws(self):
        """Test batch lane i equals sample_trajectory on lane i."""
        batch = MdpService.sample_batch(
            self.mdp, self.policy, 8, self.stream, 6, threads=3
        )
        for i in range(6):
            single = MdpService.sample_trajectory(
                self.mdp, self.policy, 8, self.stream.trajectory(i)
            )
            self.assertEqual(batch[i], single)

    def test_batch_independent_of_threads(self):
        """Test thread count leaves the batch unchanged."""
        one = MdpService.sample_batch(
            self.mdp, self.policy, 10, self.stream, 25, threads=1
        )
        eight = MdpService.sample_batch(
            self.mdp, self.policy, 10, self.stream, 25, threads=8
        )

        np.testing.assert_array_equal(one.states, eight.states)
        np.testing.assert_array_equal(one.actions, eight.actions)

    def test_policy_size_checked(self):
        """Test a policy of the wrong size is rejected."""
        with self.assertRaises(ConfigurationError):
            MdpService.sample_trajectory(
                self.mdp, PolicyParams.zeros(1, 2), 3, self.stream
            )

    def test_horizon_checked(self):
        """Test a zero horizon is rejected."""
        with self.assertRaises(ConfigurationError):
            MdpService.sample_trajectory(
                self.mdp, self.policy, 0, self.stream
            )

    def test_state_frequencies_of_bandit(self):
        """Test every step of a bandit batch sits in state 0."""
        mdp = catalog.symmetric_bandit()
        batch, _ = rollout(mdp, PolicyParams.for_mdp(mdp), 3, 10, seed=1)

        np.testing.assert_array_equal(
            MdpService.state_frequencies(batch, 1), np.ones((3, 1))
        )


    def test_state_frequencies_match_exact_distributions(self):
        """Test visit frequencies on a 3-state MDP track Pr(s_t = s)."""
        mdp = catalog.three_state_random(0.9)
        policy = PolicyParams.for_mdp(
            mdp, np.random.default_rng(5).normal(size=6)
        )
        count = 20000
        batch, _ = rollout(mdp, policy, 6, count, seed=11, threads=4)
        exact = OracleService.state_distributions(
            mdp, PolicyService.all_action_probs(policy), 6
        )
        sigma = np.sqrt(exact * (1.0 - exact) / count)
        freqs = MdpService.state_frequencies(batch, mdp.n_states)

        np.testing.assert_allclose(freqs.sum(axis=1), np.ones(6))
        self.assertTrue(np.all(np.abs(freqs - exact) <= 4 * sigma + 1e-12))


class TruncatedReturnTestCase(SimpleTestCase):
    """Test cases for truncated returns."""

    def test_constant_reward(self):
        """Test r = 1, gamma = 0.5, H = 3 gives 1.75."""
        mdp = catalog.constant_reward(1.0, 0.5)
        traj = Trajectory([0, 0, 0], [0, 0, 0])

        np.testing.assert_allclose(
            MdpService.truncated_return(traj, mdp), [1.75]
        )

    def test_two_objective_bandit(self):
        """Test a0 then a1 on the symmetric bandit gives (1.0, 0.9)."""
        mdp = catalog.symmetric_bandit(0.9)
        traj = Trajectory([0, 0], [0, 1])

        np.testing.assert_allclose(
            MdpService.truncated_return(traj, mdp), [1.0, 0.9]
        )

    def test_zero_reward_objective(self):
        """Test an all-zero channel contributes a zero component."""
        mdp = TabularMdp(
            transitions=[[[1.0], [1.0]]],
            rewards=[[[0.7, 0.2]], [[0.0, 0.0]]],
            discount=0.8,
            initial_dist=[1.0],
        )
        _, returns = rollout(mdp, PolicyParams.for_mdp(mdp), 5, 20, seed=3)

        np.testing.assert_array_equal(returns[:, 1], np.zeros(20))

    def test_batch_returns_match_single(self):
        """Test batch_returns agrees with truncated_return row by row."""
        mdp = catalog.two_state_chain(0.9)
        batch, returns = rollout(
            mdp, PolicyParams.for_mdp(mdp), 7, 5, seed=11
        )
        for i in range(5):
            np.testing.assert_allclose(
                returns[i], MdpService.truncated_return(batch[i], mdp)
            )
