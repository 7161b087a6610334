"""Value types for the softmax-tabular policy class."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ConfigurationError


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """
    Softmax-tabular parameters.

    ``theta`` is flat of length S*A in state-major order, so block ``s``
    is ``theta[s*A:(s+1)*A]``.
    """

    theta: np.ndarray
    n_states: int
    n_actions: int

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, copy=True).reshape(-1)
        if theta.size != self.n_states * self.n_actions:
            raise ConfigurationError(
                f'theta has {theta.size} entries, expected '
                f'{self.n_states * self.n_actions}'
            )
        theta.setflags(write=False)
        object.__setattr__(self, 'theta', theta)

    @property
    def dim(self):
        return self.n_states * self.n_actions

    @property
    def table(self):
        return self.theta.reshape(self.n_states, self.n_actions)

    @classmethod
    def zeros(cls, n_states, n_actions):
        return cls(np.zeros(n_states * n_actions), n_states, n_actions)

    @classmethod
    def for_mdp(cls, mdp, theta=None):
        if theta is None:
            return cls.zeros(mdp.n_states, mdp.n_actions)
        return cls(theta, mdp.n_states, mdp.n_actions)

    def __eq__(self, other):
        if not isinstance(other, PolicyParams):
            return NotImplemented
        return (
            (self.n_states, self.n_actions)
            == (other.n_states, other.n_actions)
            and np.array_equal(self.theta, other.theta)
        )

    __hash__ = None


@dataclass(frozen=True)
class PolicyClassConstants:
    """Score constants: ||grad log pi|| <= g1 and its smoothness g2."""

    g1: float
    g2: float


SOFTMAX_TABULAR = PolicyClassConstants(g1=math.sqrt(2.0), g2=2.0)
