"""Services for MDP validation, loading and trajectory sampling."""
import logging

import numpy as np

from apps.core.exceptions import ConfigurationError
from apps.core.rng import categorical
from apps.core.utils.files import read_json
from apps.core.utils.parallel import map_chunks
from apps.policy.services import PolicyService

from .domain import Trajectory, TrajectoryBatch, ValidationResult

logger = logging.getLogger(__name__)

PROB_TOL = 1e-12


class MdpService:
    """Service class for finite multi-objective MDPs."""

    @staticmethod
    def validate(mdp):
        """
        Check every TabularMdp invariant.

        Args:
            mdp (TabularMdp): candidate MDP

        Returns:
            ValidationResult: ok, or the list of violated rules
        """
        violations = []
        P, R, rho = mdp.transitions, mdp.rewards, mdp.initial_dist

        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            violations.append(
                f'transitions must have shape (S, A, S), got {P.shape}'
            )
            return ValidationResult(tuple(violations))
        n_states, n_actions = P.shape[0], P.shape[1]
        if R.ndim != 3 or R.shape[1:] != (n_states, n_actions):
            violations.append(
                f'rewards must have shape (M, {n_states}, {n_actions}), '
                f'got {R.shape}'
            )
        if rho.shape != (n_states,):
            violations.append(
                f'initial_dist must have length {n_states}, got {rho.shape}'
            )
        if violations:
            return ValidationResult(tuple(violations))

        for s, a, s_next in zip(*np.nonzero(~(P >= 0))):
            violations.append(
                f'negative or non-finite probability at '
                f'(s={s},a={a},s\'={s_next})'
            )
        row_sums = P.sum(axis=2)
        for s in range(n_states):
            for a in range(n_actions):
                total = row_sums[s, a]
                if not abs(total - 1.0) <= PROB_TOL:
                    violations.append(
                        f'row (s={s},a={a}) sums to {total:.12g}'
                    )

        if not np.all(rho >= 0):
            violations.append('initial_dist has negative entries')
        if not abs(rho.sum() - 1.0) <= PROB_TOL:
            violations.append(f'initial_dist sums to {rho.sum():.12g}')

        for m, s, a in zip(*np.nonzero(~((R >= 0) & (R <= 1)))):
            violations.append(
                f'reward out of [0,1] at (m={m},s={s},a={a}): '
                f'{R[m, s, a]:.12g}'
            )

        if not 0.0 < mdp.discount < 1.0:
            violations.append(
                f'discount must lie in (0,1), got {mdp.discount:.12g}'
            )
        return ValidationResult(tuple(violations))

    @staticmethod
    def load(path):
        """
        Load and validate an MDP JSON file.

        Args:
            path: path to the MDP document

        Returns:
            TabularMdp: the validated MDP
        """
        from .serializers import MdpSerializer

        serializer = MdpSerializer(data=read_json(path, label='mdp_path'))
        if not serializer.is_valid():
            raise ConfigurationError(
                'config: invalid MDP file', path=str(path),
                violations=serializer.errors,
            )
        mdp = serializer.save()
        logger.info(
            'Loaded MDP %s: S=%d A=%d M=%d gamma=%g', path,
            mdp.n_states, mdp.n_actions, mdp.n_objectives, mdp.discount,
        )
        return mdp

    @staticmethod
    def check_policy(mdp, policy):
        """Raise ConfigurationError when policy and MDP sizes differ."""
        if (policy.n_states, policy.n_actions) != (
                mdp.n_states, mdp.n_actions):
            raise ConfigurationError(
                f'policy is {policy.n_states}x{policy.n_actions} but the '
                f'MDP is {mdp.n_states}x{mdp.n_actions}'
            )

    @staticmethod
    def _sample_lanes(mdp, probs, horizon, stream, indices):
        # Lane i consumes 2H uniforms: [0] initial state, [2t+1] action at
        # t, [2t+2] successor of step t.
        count = len(indices)
        uniforms = np.empty((count, 2 * horizon))
        for row, index in enumerate(indices):
            uniforms[row] = stream.trajectory(index).uniforms(2 * horizon)

        states = np.empty((count, horizon), dtype=int)
        actions = np.empty((count, horizon), dtype=int)
        action_cdf = np.cumsum(probs, axis=1)
        successor_cdf = np.cumsum(mdp.transitions, axis=2)

        s = categorical(np.cumsum(mdp.initial_dist), uniforms[:, 0])
        for t in range(horizon):
            a = categorical(action_cdf[s], uniforms[:, 2 * t + 1])
            states[:, t] = s
            actions[:, t] = a
            if t + 1 < horizon:
                s = categorical(successor_cdf[s, a], uniforms[:, 2 * t + 2])
        return TrajectoryBatch(states, actions)

    @staticmethod
    def sample_batch(mdp, policy, horizon, stream, count, threads=None):
        """
        Sample ``count`` trajectories on lanes ``stream.trajectory(i)``.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): behaviour policy
            horizon (int): truncation length H
            stream (RngStream): base lane; only the trajectory index varies
            count (int): number of trajectories
            threads (int): worker threads

        Returns:
            TrajectoryBatch: trajectories in lane order
        """
        if horizon < 1:
            raise ConfigurationError('horizon must be >= 1')
        MdpService.check_policy(mdp, policy)
        probs = PolicyService.all_action_probs(policy)
        parts = map_chunks(
            lambda indices: MdpService._sample_lanes(
                mdp, probs, horizon, stream, indices
            ),
            count, threads,
        )
        return TrajectoryBatch.concatenate(parts)

    @staticmethod
    def sample_trajectory(mdp, policy, horizon, stream):
        """
        Sample one trajectory on the lane addressed by ``stream``.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): behaviour policy
            horizon (int): truncation length H
            stream (RngStream): lane to draw from

        Returns:
            Trajectory: (s_0, a_0, ..., s_{H-1}, a_{H-1})
        """
        if horizon < 1:
            raise ConfigurationError('horizon must be >= 1')
        MdpService.check_policy(mdp, policy)
        probs = PolicyService.all_action_probs(policy)
        batch = MdpService._sample_lanes(
            mdp, probs, horizon, stream, [stream.trajectory_index]
        )
        return batch[0]

    @staticmethod
    def discounts(gamma, horizon):
        return gamma ** np.arange(horizon)

    @staticmethod
    def truncated_return(traj, mdp):
        """Return vector sum_t gamma^t r_m(s_t, a_t), shape (M,)."""
        rewards = mdp.rewards[:, traj.states, traj.actions]
        return rewards @ MdpService.discounts(mdp.discount, traj.horizon)

    @staticmethod
    def batch_returns(batch, mdp):
        """Truncated returns of every trajectory, shape (B, M)."""
        rewards = mdp.rewards[:, batch.states, batch.actions]
        discounts = MdpService.discounts(mdp.discount, batch.horizon)
        discounted = rewards @ discounts
        return discounted.T

    @staticmethod
    def state_frequencies(batch, n_states):
        """Empirical Pr(s_t = s) per step, shape (H, S)."""
        counts = np.zeros((batch.horizon, n_states))
        for t in range(batch.horizon):
            counts[t] = np.bincount(batch.states[:, t], minlength=n_states)
        return counts / max(batch.size, 1)
