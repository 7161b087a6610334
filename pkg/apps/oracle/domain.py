"""Value types returned by the exact oracles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class ExactValues:
    """
    Exact infinite-horizon quantities of one policy.

    ``V`` is (M, S), ``Q`` and ``A_adv`` are (M, S, A), ``occupancy`` is
    the (S, A) table nu(s, a) = d(s) pi(a|s).
    """

    J: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    A_adv: np.ndarray
    state_occupancy: np.ndarray
    occupancy: np.ndarray
    probs: np.ndarray


@dataclass(frozen=True, eq=False)
class FisherSpectrum:
    """Fisher matrix with its range-space floor and rank-cutoff inverse."""

    fisher: np.ndarray
    mu_range: float
    lambda_F: float
    pinv: np.ndarray
    rank: int

    def solve(self, grad):
        return self.pinv @ np.asarray(grad, dtype=float)


@dataclass(frozen=True, eq=False)
class ExactQuantities:
    """Everything the ``oracle`` command reports for (mdp, theta, f)."""

    values: ExactValues
    J_H: Optional[np.ndarray]
    horizon: Optional[int]
    grad_f: np.ndarray
    grad_f_H: Optional[np.ndarray]
    spectrum: FisherSpectrum
    npg_direction: np.ndarray
    f_value: float

    def as_dict(self):
        values = self.values
        return {
            'J': values.J.tolist(),
            'J_H': None if self.J_H is None else self.J_H.tolist(),
            'horizon': self.horizon,
            'f_value': float(self.f_value),
            'V': values.V.tolist(),
            'Q': values.Q.tolist(),
            'A_adv': values.A_adv.tolist(),
            'occupancy': values.occupancy.reshape(-1).tolist(),
            'state_occupancy': values.state_occupancy.tolist(),
            'grad_f': self.grad_f.tolist(),
            'grad_f_H': (
                None if self.grad_f_H is None else self.grad_f_H.tolist()
            ),
            'fisher': self.spectrum.fisher.tolist(),
            'mu_range': self.spectrum.mu_range,
            'lambda_F': self.spectrum.lambda_F,
            'npg_direction': self.npg_direction.tolist(),
        }


@dataclass(frozen=True, eq=False)
class TrajectoryEnumeration:
    """
    All positive-probability length-H paths.

    ``states`` and ``actions`` are (n, H), ``probs`` is (n,) and
    ``returns`` the (n, M) truncated returns.
    """

    states: np.ndarray
    actions: np.ndarray
    probs: np.ndarray
    returns: np.ndarray

    @property
    def size(self):
        return self.probs.shape[0]

    def outcomes(self):
        """
        Distinct return vectors with their total probability.

        Returns:
            tuple: ((k, M) unique returns, (k,) probabilities)
        """
        unique, inverse = np.unique(
            self.returns, axis=0, return_inverse=True
        )
        weights = np.bincount(
            inverse.reshape(-1), weights=self.probs,
            minlength=unique.shape[0],
        )
        return unique, weights


@dataclass(frozen=True, eq=False)
class GradientMoments:
    """
    Path moments of the per-objective REINFORCE terms G_m(tau).

    ``mean`` is (M, d) and equals the truncated return Jacobian; ``gram``
    is (M, M) with entries E[G_m . G_m'].
    """

    mean: np.ndarray
    gram: np.ndarray

    def second_moment(self, partials_mean, partials_second, reference):
        """
        E||p^T G - reference||^2 for partials p independent of the path.

        Args:
            partials_mean: (M,) E[p]
            partials_second: (M, M) E[p p^T]
            reference: (d,) comparison vector
        """
        reference = np.asarray(reference, dtype=float)
        quadratic = float(np.sum(partials_second * self.gram))
        cross = float(partials_mean @ (self.mean @ reference))
        return max(quadratic - 2.0 * cross + reference @ reference, 0.0)


@dataclass(frozen=True, eq=False)
class BatchExpectation:
    """Exact moments of the batch plug-in estimator at batch size B."""

    batch_size: int
    mean_partials: np.ndarray
    second_partials: np.ndarray
    mse_J: float
    mean_gradient: np.ndarray
    J_H: np.ndarray
    terms: int


@dataclass(frozen=True, eq=False)
class MlmcExpectation:
    """Exact moments of the MLMC partials over level and sample draws."""

    b_max: int
    coupled_base: bool
    mean_partials: np.ndarray
    second_partials: np.ndarray
    mean_gradient: np.ndarray
    expected_cost: float
    terms: int


@dataclass(frozen=True, eq=False)
class ReferenceOptimum:
    """Best grid policy with its exact utility."""

    f_star: float
    action_probs: np.ndarray
    J_star: np.ndarray

    def as_dict(self):
        return {
            'f_star': self.f_star,
            'action_probs': self.action_probs.tolist(),
            'J_star': self.J_star.tolist(),
        }
