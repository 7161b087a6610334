"""Services for the softmax-tabular policy."""
import numpy as np

from apps.core.exceptions import ConfigurationError, NumericDivergenceError

from .domain import SOFTMAX_TABULAR, PolicyParams


class PolicyService:
    """Service class for softmax-tabular policies."""

    @staticmethod
    def all_action_probs(policy):
        """
        Action probabilities for every state.

        Args:
            policy (PolicyParams): parameters

        Returns:
            ndarray: (S, A) table whose rows sum to one
        """
        logits = policy.table
        shifted = logits - logits.max(axis=1, keepdims=True)
        weights = np.exp(shifted)
        return weights / weights.sum(axis=1, keepdims=True)

    @staticmethod
    def action_probs(policy, state):
        """pi(.|state) computed with max-subtraction."""
        if not 0 <= state < policy.n_states:
            raise ConfigurationError(f'state {state} out of range')
        logits = policy.table[state]
        weights = np.exp(logits - logits.max())
        return weights / weights.sum()

    @staticmethod
    def score_from_probs(probs, state, action):
        """grad log pi(action|state) given the (S, A) probability table."""
        n_states, n_actions = probs.shape
        score = np.zeros((n_states, n_actions))
        score[state] = -probs[state]
        score[state, action] += 1.0
        return score.reshape(-1)

    @staticmethod
    def score(policy, state, action):
        """
        Score function for one state-action pair.

        Zero outside block ``state``; inside it equals e_action - pi(.|s).

        Returns:
            ndarray: vector of length S*A
        """
        if not (0 <= state < policy.n_states
                and 0 <= action < policy.n_actions):
            raise ConfigurationError(
                f'(state={state}, action={action}) out of range'
            )
        return PolicyService.score_from_probs(
            PolicyService.all_action_probs(policy), state, action
        )

    @staticmethod
    def score_table(policy, probs=None):
        """All scores as an (S, A, d) tensor."""
        if probs is None:
            probs = PolicyService.all_action_probs(policy)
        n_states, n_actions = probs.shape
        table = np.zeros((n_states, n_actions, n_states, n_actions))
        for s in range(n_states):
            table[s, :, s, :] = np.eye(n_actions) - probs[s][None, :]
        return table.reshape(n_states, n_actions, n_states * n_actions)

    @staticmethod
    def score_bound(policy_class=SOFTMAX_TABULAR):
        """G_1: uniform bound on ||score||_2 (sqrt 2 for softmax-tabular)."""
        return policy_class.g1

    @staticmethod
    def score_smoothness(policy_class=SOFTMAX_TABULAR):
        """G_2: documented score smoothness constant (2 for softmax)."""
        return policy_class.g2

    @staticmethod
    def update_params(policy, step, direction):
        """
        Take the step theta + step * direction.

        Args:
            policy (PolicyParams): current parameters (left unmodified)
            step (float): alpha
            direction: omega, length d

        Returns:
            PolicyParams: updated parameters
        """
        direction = np.asarray(direction, dtype=float).reshape(-1)
        if direction.shape != (policy.dim,):
            raise ConfigurationError(
                f'direction has length {direction.size}, expected '
                f'{policy.dim}'
            )
        if not np.all(np.isfinite(direction)):
            raise NumericDivergenceError(
                'non-finite entries in the update direction'
            )
        return PolicyParams(
            policy.theta + step * direction,
            policy.n_states,
            policy.n_actions,
        )
