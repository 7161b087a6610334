"""Concave utility families over return vectors."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from apps.core.exceptions import ScalarizationDomainError


@dataclass(frozen=True)
class TheoryConstants:
    """Smoothness and boundedness constants used by the step-size schedules."""

    gamma: float
    n_objectives: int
    C: float
    L_f: float
    L_2f: Optional[float]
    G_1: float
    G_2: float
    L_J: float
    mu: float = 0.0

    def as_dict(self):
        return {
            'gamma': self.gamma,
            'n_objectives': self.n_objectives,
            'C': self.C,
            'L_f': self.L_f,
            'L_2f': self.L_2f,
            'G_1': self.G_1,
            'G_2': self.G_2,
            'L_J': self.L_J,
            'mu': self.mu,
        }


class Scalarization(ABC):
    """
    Concave f: R^M -> R with partials.

    ``value`` and ``grad`` accept a single return vector or any array whose
    last axis has length M.
    """

    family = None
    n_objectives = None

    def _as_returns(self, J):
        J = np.asarray(J, dtype=float)
        if J.shape[-1:] != (self.n_objectives,):
            raise ScalarizationDomainError(
                f'{self.family}: expected {self.n_objectives} objectives, '
                f'got shape {J.shape}'
            )
        if not np.all(np.isfinite(J)):
            raise ScalarizationDomainError(
                f'{self.family}: non-finite return vector'
            )
        return J

    @property
    def domain_floor(self):
        """delta_eff: lower edge of the box the constants are taken over."""
        return 0.0

    @property
    def twice_differentiable(self):
        return True

    @abstractmethod
    def value(self, J):
        """f(J)."""

    @abstractmethod
    def grad(self, J):
        """(d f / d J_m)_m."""

    @abstractmethod
    def bound_constants(self, cap):
        """(C, L_f, L_2f) on the box [delta_eff, cap]^M."""

    @abstractmethod
    def as_dict(self):
        """Config block that rebuilds this scalarization."""


@dataclass(frozen=True)
class WeightedSum(Scalarization):
    """f(J) = sum_m w_m J_m."""

    weights: tuple
    family = 'weighted_sum'

    def __post_init__(self):
        object.__setattr__(
            self, 'weights', tuple(float(w) for w in self.weights)
        )

    @property
    def n_objectives(self):
        return len(self.weights)

    def value(self, J):
        return self._as_returns(J) @ np.asarray(self.weights)

    def grad(self, J):
        J = self._as_returns(J)
        return np.broadcast_to(np.asarray(self.weights), J.shape).copy()

    def bound_constants(self, cap):
        return max(self.weights, default=0.0), 0.0, 0.0

    def as_dict(self):
        return {'family': self.family, 'weights': list(self.weights)}


@dataclass(frozen=True)
class AlphaFair(Scalarization):
    """
    f(J) = sum_m u(J_m) with u(x) = x^(1-alpha) / (1-alpha).

    With ``clamp`` set each J_m is replaced by max(J_m, delta) first;
    otherwise a non-positive J_m is a domain error.
    """

    alpha: float
    delta: float
    n_objectives: int
    clamp: bool = True
    family = 'alpha_fair'

    @property
    def domain_floor(self):
        return self.delta

    def _clamped(self, J):
        J = self._as_returns(J)
        if np.any(J < 0):
            raise ScalarizationDomainError('alpha_fair: negative return')
        if self.clamp:
            return np.maximum(J, self.delta)
        if np.any(J <= 0):
            raise ScalarizationDomainError(
                'alpha_fair: non-positive return without clamping'
            )
        return J

    def value(self, J):
        x = self._clamped(J)
        one_minus = 1.0 - self.alpha
        return np.sum(x ** one_minus / one_minus, axis=-1)

    def grad(self, J):
        return self._clamped(J) ** (-self.alpha)

    def bound_constants(self, cap):
        # x^-alpha and its derivatives are largest at the floor.
        a, d = self.alpha, self.delta
        return d ** -a, a * d ** (-a - 1.0), a * (a + 1.0) * d ** (-a - 2.0)

    def as_dict(self):
        return {
            'family': self.family,
            'alpha': self.alpha,
            'delta': self.delta,
            'clamp': self.clamp,
        }


@dataclass(frozen=True)
class KinkedQuadratic(Scalarization):
    """f(J) = -sum_m (kappa/2) max(J_m - c_m, 0)^2."""

    kinks: tuple
    kappa: float = 1.0
    family = 'kinked_quadratic'

    def __post_init__(self):
        object.__setattr__(self, 'kinks', tuple(float(c) for c in self.kinks))

    @property
    def n_objectives(self):
        return len(self.kinks)

    @property
    def twice_differentiable(self):
        return False

    def _excess(self, J):
        return np.maximum(self._as_returns(J) - np.asarray(self.kinks), 0.0)

    def value(self, J):
        return -0.5 * self.kappa * np.sum(self._excess(J) ** 2, axis=-1)

    def grad(self, J):
        return -self.kappa * self._excess(J)

    def bound_constants(self, cap):
        excess = max(max(cap - c, 0.0) for c in self.kinks)
        return self.kappa * excess, self.kappa, None

    def as_dict(self):
        return {
            'family': self.family,
            'kinks': list(self.kinks),
            'kappa': self.kappa,
        }
