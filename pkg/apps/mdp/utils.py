"""Utility functions for MDP files and rollouts."""
from apps.core.rng import Phase, RngStream

from .services import MdpService


def load_mdp(path):
    """
    Help function to load a validated MDP from a JSON file.

    Args:
        path: MDP document path

    Returns:
        TabularMdp: the MDP
    """
    return MdpService.load(path)


def rollout(mdp, policy, horizon, count, seed, threads=None):
    """
    Sample ``count`` trajectories on the simulate lanes of ``seed``.

    Returns:
        tuple: (TrajectoryBatch, (B, M) array of truncated returns)
    """
    stream = RngStream(master_seed=seed, phase=Phase.SIMULATE)
    batch = MdpService.sample_batch(
        mdp, policy, horizon, stream, count, threads
    )
    return batch, MdpService.batch_returns(batch, mdp)
