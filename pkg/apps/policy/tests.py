"""Tests for the softmax-tabular policy."""
import math

import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError, NumericDivergenceError
from apps.policy.domain import PolicyParams
from apps.policy.services import PolicyService


class ActionProbsTestCase(SimpleTestCase):
    """Test cases for action_probs."""

    def test_uniform(self):
        """Test theta = 0 gives the uniform distribution."""
        probs = PolicyService.action_probs(PolicyParams.zeros(1, 2), 0)

        np.testing.assert_allclose(probs, [0.5, 0.5])

    def test_closed_form(self):
        """Test theta = (ln 3, 0) gives (0.75, 0.25)."""
        policy = PolicyParams([math.log(3.0), 0.0], 1, 2)

        np.testing.assert_allclose(
            PolicyService.action_probs(policy, 0), [0.75, 0.25]
        )

    def test_large_logits(self):
        """Test theta = (1000, 0) stays finite."""
        policy = PolicyParams([1000.0, 0.0], 1, 2)
        probs = PolicyService.action_probs(policy, 0)

        self.assertTrue(np.all(np.isfinite(probs)))
        self.assertAlmostEqual(probs[0], 1.0)

    def test_table_rows_sum_to_one(self):
        """Test every state's row is a distribution."""
        policy = PolicyParams(np.arange(6.0), 2, 3)
        table = PolicyService.all_action_probs(policy)

        np.testing.assert_allclose(table.sum(axis=1), [1.0, 1.0])
        np.testing.assert_allclose(
            table[1], PolicyService.action_probs(policy, 1)
        )

    def test_per_state_shift(self):
        """Test adding c to every logit of one state leaves pi unchanged."""
        rng = np.random.default_rng(3)
        theta = rng.normal(size=(3, 4))
        before = PolicyService.all_action_probs(PolicyParams(theta, 3, 4))
        for c in (-5.0, 0.7, 300.0):
            for state in range(3):
                shifted = theta.copy()
                shifted[state] += c
                after = PolicyService.all_action_probs(
                    PolicyParams(shifted, 3, 4)
                )

                np.testing.assert_allclose(after, before, atol=1e-12)

    def test_wrong_theta_length(self):
        """Test a theta of the wrong length is rejected."""
        with self.assertRaises(ConfigurationError):
            PolicyParams([0.0, 1.0, 2.0], 2, 2)


class ScoreTestCase(SimpleTestCase):
    """Test cases for the score function."""

    def setUp(self):
        """Set up a random 3-state 2-action policy."""
        self.rng = np.random.default_rng(0)
        self.policy = PolicyParams(self.rng.normal(size=6), 3, 2)

    def test_uniform_score(self):
        """Test theta = 0, (s,a) = (0,0) gives block 0 = (0.5, -0.5)."""
        score = PolicyService.score(PolicyParams.zeros(2, 2), 0, 0)

        np.testing.assert_allclose(score, [0.5, -0.5, 0.0, 0.0])

    def test_expected_score_is_zero(self):
        """Test sum_a pi(a|s) score(s,a) = 0."""
        for s in range(3):
            probs = PolicyService.action_probs(self.policy, s)
            total = sum(
                probs[a] * PolicyService.score(self.policy, s, a)
                for a in range(2)
            )
            np.testing.assert_allclose(total, np.zeros(6), atol=1e-15)

    def test_finite_differences(self):
        """Test the score matches central differences of log pi."""
        step = 1e-5
        for s in range(3):
            for a in range(2):
                numeric = np.zeros(6)
                for i in range(6):
                    bump = np.zeros(6)
                    bump[i] = step
                    up = PolicyParams(self.policy.theta + bump, 3, 2)
                    down = PolicyParams(self.policy.theta - bump, 3, 2)
                    numeric[i] = (
                        math.log(PolicyService.action_probs(up, s)[a])
                        - math.log(PolicyService.action_probs(down, s)[a])
                    ) / (2 * step)
                np.testing.assert_allclose(
                    PolicyService.score(self.policy, s, a), numeric,
                    atol=1e-6,
                )

    def test_score_table_matches_score(self):
        """Test score_table stacks the individual scores."""
        table = PolicyService.score_table(self.policy)

        self.assertEqual(table.shape, (3, 2, 6))
        np.testing.assert_allclose(
            table[2, 1], PolicyService.score(self.policy, 2, 1)
        )

    def test_out_of_range(self):
        """Test invalid state-action pairs are rejected."""
        with self.assertRaises(ConfigurationError):
            PolicyService.score(self.policy, 3, 0)


class ScoreBoundTestCase(SimpleTestCase):
    """Test cases for score_bound."""

    def test_value(self):
        """Test the softmax-tabular bound is sqrt 2."""
        self.assertAlmostEqual(PolicyService.score_bound(), math.sqrt(2.0))
        self.assertEqual(PolicyService.score_smoothness(), 2.0)

    def test_uniform_norm(self):
        """Test the uniform 2-action score norm is sqrt(0.5)."""
        norm = np.linalg.norm(
            PolicyService.score(PolicyParams.zeros(1, 2), 0, 0)
        )

        self.assertAlmostEqual(norm, math.sqrt(0.5))
        self.assertLessEqual(norm, PolicyService.score_bound())

    def test_random_search(self):
        """Test no random policy exceeds the bound."""
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(10_000):
            policy = PolicyParams(rng.normal(scale=4.0, size=3), 1, 3)
            scores = PolicyService.score_table(policy)
            worst = max(worst, np.linalg.norm(scores, axis=-1).max())

        self.assertLessEqual(worst, PolicyService.score_bound())


class UpdateParamsTestCase(SimpleTestCase):
    """Test cases for update_params."""

    def setUp(self):
        """Set up a 2x2 policy."""
        self.policy = PolicyParams([0.1, 0.2, 0.3, 0.4], 2, 2)

    def test_zero_direction(self):
        """Test omega = 0 leaves theta unchanged."""
        updated = PolicyService.update_params(self.policy, 0.5, np.zeros(4))

        self.assertEqual(updated, self.policy)

    def test_zero_step(self):
        """Test alpha = 0 leaves theta unchanged."""
        updated = PolicyService.update_params(self.policy, 0.0, np.ones(4))

        self.assertEqual(updated, self.policy)

    def test_unit_step(self):
        """Test theta = 0, alpha = 1, omega = e_0 sets theta_0 = 1."""
        updated = PolicyService.update_params(
            PolicyParams.zeros(2, 2), 1.0, [1.0, 0.0, 0.0, 0.0]
        )

        np.testing.assert_array_equal(updated.theta, [1.0, 0.0, 0.0, 0.0])

    def test_input_not_modified(self):
        """Test the original parameters are left untouched."""
        before = self.policy.theta.copy()
        PolicyService.update_params(self.policy, 1.0, np.ones(4))

        np.testing.assert_array_equal(self.policy.theta, before)

    def test_rejects_bad_direction(self):
        """Test wrong length and non-finite directions are refused."""
        with self.assertRaises(ConfigurationError):
            PolicyService.update_params(self.policy, 1.0, np.ones(3))
        with self.assertRaises(NumericDivergenceError):
            PolicyService.update_params(
                self.policy, 1.0, [np.nan, 0.0, 0.0, 0.0]
            )
