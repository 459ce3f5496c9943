"""Bandit-update tests for the learning miners."""

import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frscsim.learning import (
    LearnerState,
    arm_probabilities,
    choose_arm,
    initial_state,
    update,
)
from frscsim.strategies import StrategySpec

ARMS3 = (
    StrategySpec("petty_compliant"),
    StrategySpec("lazy_fork"),
    StrategySpec("function_fork"),
)


def test_equal_weights_give_uniform_probabilities():
    state = initial_state(ARMS3, gamma=0.37)
    assert arm_probabilities(state) == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_full_exploration_ignores_weights():
    state = LearnerState(arms=ARMS3, weights=(5.0, 1.0, 0.25), gamma=1.0, reward_scale=0)
    assert arm_probabilities(state) == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_two_arm_hand_computed_probabilities():
    state = LearnerState(arms=ARMS3[:2], weights=(1.0, 3.0), gamma=0.1, reward_scale=0)
    assert arm_probabilities(state) == pytest.approx((0.275, 0.725))


def test_zero_reward_leaves_weights_unchanged():
    state = initial_state(ARMS3, gamma=0.1)
    state = update(state, 1, 500)  # establish a scale
    after = update(state, 2, 0)
    assert after.weights == state.weights


def test_single_arm_is_always_chosen():
    state = initial_state(ARMS3[:1], gamma=0.5)
    rng = random.Random(5)
    for _ in range(20):
        assert choose_arm(rng, state) == 0
        state = update(state, 0, rng.randrange(10**9))
        assert arm_probabilities(state) == (1.0,)


def test_update_order_symmetry():
    # Equal rewards to two arms produce mirror-image states regardless of
    # order; with full exploration the probabilities stay uniform, so the
    # two updated weights also come out exactly equal.
    base = initial_state(ARMS3, gamma=0.1)
    one_two = update(update(base, 0, 1000), 1, 1000)
    two_one = update(update(base, 1, 1000), 0, 1000)
    assert one_two.weights[0] == two_one.weights[1]
    assert one_two.weights[1] == two_one.weights[0]
    assert one_two.weights[2] == two_one.weights[2]

    uniform = initial_state(ARMS3, gamma=1.0)
    after = update(update(uniform, 0, 777), 1, 777)
    assert after.weights[0] == after.weights[1]


def test_probabilities_stay_within_exp3_bounds():
    state = initial_state(ARMS3, gamma=0.1)
    rng = random.Random(11)
    k = len(ARMS3)
    for _ in range(500):
        arm = choose_arm(rng, state)
        state = update(state, arm, rng.randrange(10**12) if arm == 1 else 0)
        probs = arm_probabilities(state)
        assert math.isclose(sum(probs), 1.0, abs_tol=1e-12)
        for p in probs:
            assert 0.1 / k - 1e-12 <= p <= 1 - 0.1 + 0.1 / k + 1e-12


def test_consistent_winner_probability_strictly_increases():
    state = initial_state(ARMS3, gamma=0.1)
    prev = arm_probabilities(state)[1]
    for _ in range(60):
        state = update(state, 1, 1)
        p = arm_probabilities(state)[1]
        assert p > prev
        prev = p
    assert prev < 1 - 0.1 + 0.1 / 3


def test_weights_survive_long_winning_streaks():
    # The overflow guard must kick in long before float range is exhausted.
    state = initial_state(ARMS3, gamma=0.5)
    for _ in range(5000):
        state = update(state, 0, 10**9)
        assert all(w > 0 and math.isfinite(w) for w in state.weights)


def test_deterministic_given_seed_and_rewards():
    def run(seed: int) -> list[int]:
        rng = random.Random(seed)
        state = initial_state(ARMS3, gamma=0.1)
        picks = []
        for g in range(200):
            arm = choose_arm(rng, state)
            picks.append(arm)
            state = update(state, arm, (g * 7919) % 1000)
        return picks

    assert run(123) == run(123)
    assert run(123) != run(124)


@given(
    weights=st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=6),
    gamma=st.floats(0.01, 1.0),
    reward=st.integers(0, 10**15),
    scale=st.integers(0, 10**15),
)
def test_update_never_breaks_state_invariants(weights, gamma, reward, scale):
    arms = tuple(StrategySpec("lazy_fork") for _ in weights)
    state = LearnerState(arms=arms, weights=tuple(weights), gamma=gamma, reward_scale=scale)
    after = update(state, len(weights) - 1, reward)
    assert all(w > 0 and math.isfinite(w) for w in after.weights)
    assert math.isclose(sum(arm_probabilities(after)), 1.0, abs_tol=1e-12)
    assert after.reward_scale == max(scale, reward)


def test_state_validation():
    with pytest.raises(ValueError, match="at least one arm"):
        initial_state((), gamma=0.1)
    with pytest.raises(ValueError, match="gamma"):
        initial_state(ARMS3, gamma=0.0)
    with pytest.raises(ValueError, match="positive"):
        LearnerState(arms=ARMS3, weights=(1.0, 0.0, 1.0), gamma=0.1, reward_scale=0)
    with pytest.raises(ValueError, match="arm index"):
        update(initial_state(ARMS3, gamma=0.1), 3, 0)
