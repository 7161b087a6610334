"""Value types produced by the stochastic estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ReturnEstimate:
    """Empirical return vector J_hat over ``batch_size`` trajectories."""

    j_hat: np.ndarray
    batch_size: int
    horizon: int


@dataclass(frozen=True, eq=False)
class MlmcPartials:
    """MLMC-combined scalarization partials for one outer iteration."""

    partials: np.ndarray
    level_q: int
    truncated: bool
    trajectories_used: int


@dataclass(frozen=True, eq=False)
class GradSample:
    """One-trajectory REINFORCE estimate of the scalarized gradient."""

    g: np.ndarray


@dataclass(frozen=True, eq=False)
class FisherSample:
    """One-trajectory Fisher estimate sum_t gamma^t psi_t psi_t^T."""

    f_hat: np.ndarray
