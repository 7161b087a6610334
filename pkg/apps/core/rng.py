"""Seeded random streams addressed by lane.

A stream is a pure function of ``(master_seed, lane)``; numpy's
``SeedSequence`` spawn keys give the injective lane-to-substream mapping,
so trajectories can be drawn in any order or thread without changing what
each lane produces.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .exceptions import ConfigurationError

SEED_MASK = (1 << 64) - 1


class Phase(IntEnum):
    """Sampling phase tag inside an outer iteration."""

    J_BATCH = 0
    INNER = 1
    MLMC_LEVEL = 2
    MLMC_DRAW = 3
    MLMC_BASE = 4
    REPLICATION = 5
    SIMULATE = 6


@dataclass(frozen=True)
class RngStream:
    """Address of one independent random substream."""

    master_seed: int
    outer_iteration: int = 0
    phase: Phase = Phase.SIMULATE
    sub_index: int = 0
    trajectory_index: int = 0

    def __post_init__(self):
        for name in ('outer_iteration', 'sub_index', 'trajectory_index'):
            if getattr(self, name) < 0:
                raise ConfigurationError(f'rng lane: {name} must be >= 0')

    @property
    def lane(self):
        return (
            int(self.outer_iteration),
            int(self.phase),
            int(self.sub_index),
            int(self.trajectory_index),
        )

    def for_iteration(self, outer_iteration):
        return replace(self, outer_iteration=outer_iteration)

    def with_phase(self, phase, sub_index=0):
        return replace(
            self, phase=Phase(phase), sub_index=sub_index,
            trajectory_index=0,
        )

    def trajectory(self, index):
        return replace(self, trajectory_index=index)

    def generator(self):
        """Fresh generator positioned at the start of this lane."""
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & SEED_MASK,
            spawn_key=self.lane,
        )
        return np.random.Generator(np.random.PCG64(seq))

    def uniforms(self, count):
        return self.generator().random(count)


def categorical(cdf, u):
    """
    Invert cumulative distributions at uniform draws.

    Picks the first index whose cumulative mass exceeds ``u``, so a draw
    exactly on a boundary goes to the right-hand category.

    Args:
        cdf: array (..., n) of cumulative probabilities
        u: array (...) of uniforms in [0, 1)

    Returns:
        ndarray: integer indices with shape of ``u``
    """
    cdf = np.asarray(cdf)
    u = np.asarray(u)[..., None]
    index = np.sum(cdf <= u, axis=-1)
    # rounding can leave cdf[-1] slightly below 1
    return np.minimum(index, cdf.shape[-1] - 1)
