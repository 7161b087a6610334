"""Value types for finite multi-objective MDPs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen_array(values, dtype=float):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    Discounted MDP with ``M`` reward channels.

    ``transitions[s, a, s']`` is P(s'|s,a), ``rewards[m, s, a]`` is
    r_m(s,a) and ``initial_dist[s]`` is rho(s). The horizon is not part
    of the MDP; it is chosen per sampling call.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float
    initial_dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, 'transitions', _frozen_array(self.transitions)
        )
        object.__setattr__(self, 'rewards', _frozen_array(self.rewards))
        object.__setattr__(
            self, 'initial_dist', _frozen_array(self.initial_dist)
        )
        object.__setattr__(self, 'discount', float(self.discount))

    @property
    def n_states(self):
        return self.transitions.shape[0]

    @property
    def n_actions(self):
        return self.transitions.shape[1]

    @property
    def n_objectives(self):
        return self.rewards.shape[0]

    def policy_transitions(self, probs):
        """State-to-state kernel P_pi for an (S, A) probability table."""
        return np.einsum('sa,sat->st', probs, self.transitions)

    def policy_rewards(self, probs):
        """Policy-averaged rewards r_bar with shape (M, S)."""
        return np.einsum('sa,msa->ms', probs, self.rewards)

    def as_dict(self):
        return {
            'n_states': self.n_states,
            'n_actions': self.n_actions,
            'n_objectives': self.n_objectives,
            'gamma': self.discount,
            'rho': self.initial_dist.tolist(),
            'transitions': self.transitions.tolist(),
            'rewards': self.rewards.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One truncated rollout (s_0, a_0, ..., s_{H-1}, a_{H-1})."""

    states: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'states', _frozen_array(self.states, int))
        object.__setattr__(self, 'actions', _frozen_array(self.actions, int))

    @property
    def horizon(self):
        return len(self.states)

    @property
    def steps(self):
        return list(zip(self.states.tolist(), self.actions.tolist()))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            np.array_equal(self.states, other.states)
            and np.array_equal(self.actions, other.actions)
        )

    def __hash__(self):
        return hash((self.states.tobytes(), self.actions.tobytes()))


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """``B`` trajectories of a common horizon stored as (B, H) arrays."""

    states: np.ndarray
    actions: np.ndarray

    @property
    def size(self):
        return self.states.shape[0]

    @property
    def horizon(self):
        return self.states.shape[1]

    def __len__(self):
        return self.size

    def __getitem__(self, index):
        return Trajectory(self.states[index], self.actions[index])

    @classmethod
    def concatenate(cls, batches):
        return cls(
            np.concatenate([b.states for b in batches], axis=0),
            np.concatenate([b.actions for b in batches], axis=0),
        )

    @classmethod
    def from_trajectories(cls, trajectories):
        return cls(
            np.stack([t.states for t in trajectories]),
            np.stack([t.actions for t in trajectories]),
        )


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of MDP validation; violations are data, not exceptions."""

    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok
