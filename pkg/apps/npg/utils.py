"""Utility functions for NPG runs."""
from .services import NpgService

RUNNERS = {
    'empirical': NpgService.run_vanilla_npg,
    'mlmc': NpgService.run_mlmc_npg,
    'oracle': NpgService.run_oracle_npg,
}


def run_npg(mdp, f, config, threads=None):
    """
    Help function to run the NPG variant matching ``config.estimator``.

    Returns:
        RunReport: per-iteration records of the run
    """
    return RUNNERS[config.estimator.kind](mdp, f, config, threads)
