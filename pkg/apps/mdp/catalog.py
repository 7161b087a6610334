"""Small MDPs used by the test-suite and the example experiment configs."""
import numpy as np

from .domain import TabularMdp


def bandit(arm_rewards, gamma):
    """
    One-state MDP whose actions are arms.

    Args:
        arm_rewards: list over arms of reward vectors (length M)
        gamma: discount factor

    Returns:
        TabularMdp: the bandit
    """
    arm_rewards = np.asarray(arm_rewards, dtype=float)
    n_arms, n_objectives = arm_rewards.shape
    return TabularMdp(
        transitions=np.ones((1, n_arms, 1)),
        rewards=arm_rewards.T.reshape(n_objectives, 1, n_arms),
        discount=gamma,
        initial_dist=[1.0],
    )


def symmetric_bandit(gamma=0.9):
    """Two arms with r(a0) = (1, 0) and r(a1) = (0, 1)."""
    return bandit([[1.0, 0.0], [0.0, 1.0]], gamma)


def asymmetric_bandit(gamma=0.9):
    """Two arms with r(a0) = (1, 0.2) and r(a1) = (0.1, 0.9)."""
    return bandit([[1.0, 0.2], [0.1, 0.9]], gamma)


def two_state_chain(gamma=0.9):
    """Two states, two actions, two objectives; action 1 favours state 1."""
    return TabularMdp(
        transitions=[
            [[0.9, 0.1], [0.2, 0.8]],
            [[0.7, 0.3], [0.1, 0.9]],
        ],
        rewards=[
            [[1.0, 0.5], [0.0, 0.2]],
            [[0.0, 0.3], [1.0, 0.6]],
        ],
        discount=gamma,
        initial_dist=[0.6, 0.4],
    )


def three_state_random(gamma=0.9, n_objectives=2, seed=0):
    """Random dense three-state, two-action MDP."""
    rng = np.random.default_rng(seed)
    transitions = rng.dirichlet(np.ones(3), size=(3, 2))
    rewards = rng.uniform(size=(n_objectives, 3, 2))
    return TabularMdp(
        transitions=transitions,
        rewards=rewards,
        discount=gamma,
        initial_dist=rng.dirichlet(np.ones(3)),
    )


def constant_reward(reward=1.0, gamma=0.5, n_actions=1):
    """One state whose every action pays ``reward`` on a single objective."""
    return TabularMdp(
        transitions=np.ones((1, n_actions, 1)),
        rewards=np.full((1, 1, n_actions), reward),
        discount=gamma,
        initial_dist=[1.0],
    )


def deterministic_cycle(gamma=0.9):
    """Two states that alternate regardless of the action taken."""
    return TabularMdp(
        transitions=[
            [[0.0, 1.0], [0.0, 1.0]],
            [[1.0, 0.0], [1.0, 0.0]],
        ],
        rewards=[
            [[1.0, 1.0], [0.0, 0.0]],
            [[0.0, 0.0], [1.0, 1.0]],
        ],
        discount=gamma,
        initial_dist=[1.0, 0.0],
    )
