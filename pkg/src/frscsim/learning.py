"""Exp3 strategy selection for learning miners.

Learning miners pick one strategy arm per game and update exponential weights
from the game's earnings. Rewards are satoshi amounts with no a-priori upper
bound, so they are normalized into [0, 1] by the running maximum observed
reward before the importance-weighted update. Weights are periodically
rescaled (probabilities are invariant under uniform scaling) so repeated
wins cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .strategies import StrategySpec

# Rescale weights once their sum exceeds this; keeps exponents finite forever.
_WEIGHT_SUM_GUARD = 1e100
# Post-rescale floor: an arm this far behind already has probability pinned at
# gamma/K, so flooring preserves positivity without moving any probability.
_WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True, slots=True)
class LearnerState:
    """One miner's bandit state across games."""

    arms: tuple[StrategySpec, ...]
    weights: tuple[float, ...]
    gamma: float
    reward_scale: int

    def __post_init__(self) -> None:
        if not self.arms:
            raise ValueError("learner needs at least one arm")
        if len(self.weights) != len(self.arms):
            raise ValueError("one weight per arm required")
        if not all(w > 0 and math.isfinite(w) for w in self.weights):
            raise ValueError(f"weights must be positive and finite, got {self.weights}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.reward_scale < 0:
            raise ValueError(f"reward_scale must be >= 0, got {self.reward_scale}")


def initial_state(
    arms: Sequence[StrategySpec], gamma: float, weights: Sequence[float] | None = None
) -> LearnerState:
    if weights is None:
        weights = [1.0] * len(arms)
    return LearnerState(
        arms=tuple(arms), weights=tuple(weights), gamma=gamma, reward_scale=0
    )


def arm_probabilities(state: LearnerState) -> tuple[float, ...]:
    """Mix of weight-proportional exploitation and uniform exploration."""
    k = len(state.arms)
    total = sum(state.weights)
    g = state.gamma
    return tuple((1.0 - g) * w / total + g / k for w in state.weights)


def choose_arm(rng, state: LearnerState) -> int:
    """Sample an arm index from the current probabilities; deterministic per RNG state."""
    probs = arm_probabilities(state)
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            return i
    return len(probs) - 1  # guard against float round-off at the top end


def update(state: LearnerState, arm: int, game_reward: int) -> LearnerState:
    """Fold one game's reward for the played arm into the weights.

    The reward scale ratchets up to the largest reward seen, so the
    normalized reward is always in [0, 1]; only the played arm's weight moves
    (importance-weighted by its selection probability).
    """
    k = len(state.arms)
    if not 0 <= arm < k:
        raise ValueError(f"arm index {arm} out of range for {k} arms")
    if game_reward < 0:
        raise ValueError(f"game_reward must be >= 0, got {game_reward}")

    scale = max(state.reward_scale, game_reward)
    x = 0.0 if scale == 0 else min(1.0, game_reward / scale)
    p = arm_probabilities(state)[arm]
    factor = math.exp(state.gamma * x / (k * p))
    weights = list(state.weights)
    weights[arm] *= factor

    total = sum(weights)
    if total > _WEIGHT_SUM_GUARD:
        weights = [max(w / total, _WEIGHT_FLOOR) for w in weights]
    return LearnerState(
        arms=state.arms, weights=tuple(weights), gamma=state.gamma, reward_scale=scale
    )
