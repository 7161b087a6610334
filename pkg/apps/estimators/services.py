"""Services for return, partial, gradient and Fisher estimators."""
import logging

import numpy as np

from apps.core.exceptions import ConfigurationError
from apps.core.rng import Phase
from apps.mdp.domain import TrajectoryBatch
from apps.mdp.services import MdpService
from apps.policy.services import PolicyService

from .domain import FisherSample, GradSample, MlmcPartials, ReturnEstimate

logger = logging.getLogger(__name__)


class EstimatorService:
    """Service class for the stochastic estimators."""

    @staticmethod
    def empirical_return(mdp, policy, horizon, batch_size, stream,
                         threads=None):
        """
        Batch-mean truncated return.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): current policy
            horizon (int): H
            batch_size (int): B, at least 1
            stream (RngStream): base lane, trajectory i uses index i
            threads (int): sampling threads

        Returns:
            ReturnEstimate: J_hat with its batch size and horizon
        """
        if batch_size < 1:
            raise ConfigurationError('batch size must be >= 1')
        batch = MdpService.sample_batch(
            mdp, policy, horizon, stream, batch_size, threads
        )
        returns = MdpService.batch_returns(batch, mdp)
        return ReturnEstimate(returns.mean(axis=0), batch_size, horizon)

    @staticmethod
    def level_cap(b_max):
        """floor(log2 b_max)."""
        if b_max < 1:
            raise ConfigurationError('B_max must be >= 1')
        return int(b_max).bit_length() - 1

    @staticmethod
    def effective_b_max(b_max):
        """Largest power of two not above ``b_max``."""
        return 2 ** EstimatorService.level_cap(b_max)

    @staticmethod
    def expected_mlmc_cost(b_max):
        """Expected trajectories per draw: J + 2^-J, J = floor(log2 B_max)."""
        cap = EstimatorService.level_cap(b_max)
        return cap + 2.0 ** -cap

    @staticmethod
    def draw_level(stream):
        """Q with Pr(Q = q) = 2^-q, q >= 1, from the level-draw lane."""
        return int(stream.generator().geometric(0.5))

    @staticmethod
    def level_difference(f, returns):
        """
        2^q (grad f(mean of all) - grad f(mean of first half)).

        ``returns`` has shape (..., 2^q, M); leading axes are kept, so the
        enumeration oracle can evaluate every sample tuple at once.
        """
        returns = np.asarray(returns, dtype=float)
        size = returns.shape[-2]
        full = f.grad(returns.mean(axis=-2))
        half = f.grad(returns[..., :size // 2, :].mean(axis=-2))
        return size * (full - half)

    @staticmethod
    def mlmc_combine(f, returns, level_q, b_max, base_return=None):
        """
        Combine per-trajectory returns into MLMC partials.

        Args:
            f (Scalarization): utility whose partials are estimated
            returns: (n, M) returns of the level draw, n = 2^Q, or n = 1
                when 2^Q exceeds ``b_max``
            level_q (int): drawn level Q
            b_max (int): truncation threshold
            base_return: fresh single-trajectory return for the
                uncoupled variant; None reuses ``returns[0]``

        Returns:
            MlmcPartials: combined partials and cost
        """
        returns = np.asarray(returns, dtype=float)
        if level_q > EstimatorService.level_cap(b_max):
            return MlmcPartials(
                partials=f.grad(returns[0]),
                level_q=level_q,
                truncated=True,
                trajectories_used=1,
            )
        size = 2 ** level_q
        if returns.shape[0] != size:
            raise ConfigurationError(
                f'level {level_q} needs {size} returns, got '
                f'{returns.shape[0]}'
            )
        coupled = base_return is None
        base = returns[0] if coupled else np.asarray(base_return)
        return MlmcPartials(
            partials=f.grad(base) + EstimatorService.level_difference(
                f, returns
            ),
            level_q=level_q,
            truncated=False,
            trajectories_used=size if coupled else size + 1,
        )

    @staticmethod
    def mlmc_partials(mdp, policy, f, horizon, b_max, stream,
                      coupled_base=True, threads=None):
        """
        Draw a level and return the MLMC estimate of the partials.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): current policy
            f (Scalarization): utility
            horizon (int): H
            b_max (int): B_max
            stream (RngStream): lane of the outer iteration
            coupled_base (bool): reuse the first level trajectory for the
                single-trajectory term
            threads (int): sampling threads

        Returns:
            MlmcPartials: partials, level, truncation flag and cost
        """
        level_q = EstimatorService.draw_level(
            stream.with_phase(Phase.MLMC_DRAW)
        )
        truncated = level_q > EstimatorService.level_cap(b_max)
        # A truncated draw is the B1 = 1 plug-in and shares its lane.
        if truncated:
            count, lane = 1, stream.with_phase(Phase.J_BATCH)
        else:
            count, lane = 2 ** level_q, stream.with_phase(Phase.MLMC_LEVEL)
        batch = MdpService.sample_batch(
            mdp, policy, horizon, lane, count, threads
        )
        returns = MdpService.batch_returns(batch, mdp)
        base_return = None
        if not coupled_base and not truncated:
            base = MdpService.sample_batch(
                mdp, policy, horizon, stream.with_phase(Phase.MLMC_BASE),
                1, threads,
            )
            base_return = MdpService.batch_returns(base, mdp)[0]
        return EstimatorService.mlmc_combine(
            f, returns, level_q, b_max, base_return
        )

    @staticmethod
    def _suffix_returns(batch, mdp):
        # (M, B, H) tail sums sum_{h >= t} gamma^h r_m(s_h, a_h)
        rewards = mdp.rewards[:, batch.states, batch.actions]
        weighted = rewards * MdpService.discounts(mdp.discount, batch.horizon)
        return np.flip(np.cumsum(np.flip(weighted, axis=-1), axis=-1), axis=-1)

    @staticmethod
    def _centred_actions(batch, probs):
        # (B, H, A) block entries of the score: e_a - pi(.|s)
        n_actions = probs.shape[1]
        return np.eye(n_actions)[batch.actions] - probs[batch.states]

    @staticmethod
    def reinforce_components(batch, policy, mdp):
        """
        Per-objective REINFORCE terms with unit partials.

        Returns:
            ndarray: (B, M, d); contracting axis 1 with the partials gives
            each trajectory's gradient sample
        """
        probs = PolicyService.all_action_probs(policy)
        suffix = EstimatorService._suffix_returns(batch, mdp)
        centred = EstimatorService._centred_actions(batch, probs)
        state_onehot = np.eye(mdp.n_states)[batch.states]
        blocks = np.einsum('mbh,bhs,bha->bmsa', suffix, state_onehot, centred)
        return blocks.reshape(batch.size, mdp.n_objectives, policy.dim)

    @staticmethod
    def batch_gradients(batch, partials, policy, mdp):
        """Gradient sample of every trajectory in the batch, shape (B, d)."""
        probs = PolicyService.all_action_probs(policy)
        suffix = EstimatorService._suffix_returns(batch, mdp)
        weights = np.tensordot(np.asarray(partials, dtype=float), suffix, 1)
        centred = EstimatorService._centred_actions(batch, probs)
        state_onehot = np.eye(mdp.n_states)[batch.states]
        blocks = np.einsum('bh,bhs,bha->bsa', weights, state_onehot, centred)
        return blocks.reshape(batch.size, policy.dim)

    @staticmethod
    def reinforce_grad(traj, partials, policy, mdp):
        """
        REINFORCE estimate of the scalarized gradient from one trajectory.

        g = sum_t score(s_t, a_t) * sum_m partials_m
            * sum_{h >= t} gamma^h r_m(s_h, a_h)

        The inner weight is gamma^h, not gamma^(h - t).

        Returns:
            GradSample: the estimate
        """
        partials = np.asarray(partials, dtype=float)
        probs = PolicyService.all_action_probs(policy)
        rewards = mdp.rewards[:, traj.states, traj.actions]
        weighted = partials @ rewards * MdpService.discounts(
            mdp.discount, traj.horizon
        )
        tail = np.cumsum(weighted[::-1])[::-1]
        g = np.zeros((policy.n_states, policy.n_actions))
        for t, (s, a) in enumerate(traj.steps):
            g[s] -= tail[t] * probs[s]
            g[s, a] += tail[t]
        return GradSample(g.reshape(-1))

    @staticmethod
    def gradient_sample_bound(partials, gamma, G_1):
        """max_m |partials_m| * M * G_1 / (1 - gamma)^2."""
        partials = np.asarray(partials, dtype=float)
        return (
            np.max(np.abs(partials), initial=0.0) * partials.size * G_1
            / (1.0 - gamma) ** 2
        )

    @staticmethod
    def fisher_sample(traj, policy, gamma, normalize=True):
        """
        Fisher estimate sum_t gamma^t psi_t psi_t^T from one trajectory.

        Args:
            traj (Trajectory): rollout
            policy (PolicyParams): policy that produced it
            gamma (float): discount factor
            normalize (bool): multiply by (1 - gamma)

        Returns:
            FisherSample: symmetric PSD d x d matrix
        """
        batch = TrajectoryBatch.from_trajectories([traj])
        return FisherSample(
            EstimatorService.batch_fisher(batch, policy, gamma, normalize)
        )

    @staticmethod
    def trajectory_fishers(batch, policy, gamma, normalize=True):
        """fisher_sample of every trajectory, shape (B, d, d)."""
        scores = PolicyService.score_table(policy)[batch.states, batch.actions]
        discounts = MdpService.discounts(gamma, batch.horizon)
        fishers = np.einsum('h,bhi,bhj->bij', discounts, scores, scores)
        if normalize:
            fishers *= 1.0 - gamma
        return fishers

    @staticmethod
    def batch_fisher(batch, policy, gamma, normalize=True):
        """Batch mean of fisher_sample, shape (d, d)."""
        fishers = EstimatorService.trajectory_fishers(
            batch, policy, gamma, normalize
        )
        return fishers.mean(axis=0)

    @staticmethod
    def batch_statistics(batch, partials, policy, mdp, normalize=True):
        """
        Mean gradient and mean Fisher sample over the same trajectories.

        Returns:
            tuple: (g_mean of length d, F_mean of shape (d, d))
        """
        grads = EstimatorService.batch_gradients(batch, partials, policy, mdp)
        fisher = EstimatorService.batch_fisher(
            batch, policy, mdp.discount, normalize
        )
        return grads.mean(axis=0), fisher
