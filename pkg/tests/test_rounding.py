import math

import numpy as np
import pytest

from bidder_selection.baselines import brute_force
from bidder_selection.deadline import Deadline, DeadlineExceeded
from bidder_selection.rounding import expected_overflow, round_best_of, round_once
from bidder_selection.solver import solve_practical
from bidder_selection.welfare import sw_fractional, sw_set

from tests import random_instance


def test_round_once_integral_solution():
    outcome = round_once(np.array([1.0, 0.0, 1.0, 0.0]), 2, seed=5)

    assert outcome.selected == (0, 2)
    assert outcome.pre_truncation_size == 2


def test_round_once_zero():
    outcome = round_once(np.zeros(5), 3, seed=0)

    assert outcome.selected == ()
    assert outcome.pre_truncation_size == 0


def test_round_once_truncates_to_k():
    outcome = round_once(np.ones(6), 2, seed=11)

    assert len(outcome.selected) == 2
    assert outcome.pre_truncation_size == 6
    assert len(set(outcome.selected)) == 2


def test_round_once_is_deterministic():
    x = np.linspace(0.1, 0.9, 9)

    assert round_once(x, 3, seed=42) == round_once(x, 3, seed=42)


def test_round_once_truncation_is_uniform():
    k, seeds = 3, 20000
    counts = np.zeros(2 * k)
    for seed in range(seeds):
        counts[list(round_once(np.ones(2 * k), k, seed).selected)] += 1

    np.testing.assert_allclose(counts / seeds, 0.5, atol=0.02)


@pytest.mark.slow
def test_round_once_truncation_is_uniform_many_seeds():
    k, seeds = 4, 100_000
    counts = np.zeros(2 * k)
    for seed in range(seeds):
        counts[list(round_once(np.ones(2 * k), k, seed).selected)] += 1

    np.testing.assert_allclose(counts / seeds, 0.5, atol=0.01)


def test_round_once_rejects_probabilities():
    with pytest.raises(ValueError):
        round_once(np.array([1.5, 0.2]), 1, seed=0)


def test_round_best_of_single_trial_is_round_once(rng):
    instance = random_instance(rng, 8, 3)
    x = np.full(8, 3 / 8)

    best = round_best_of(instance, x, trials=1, seed=9)

    assert best.selected == round_once(x, 3, seed=9).selected
    assert best.trial == 0
    assert best.welfare == pytest.approx(sw_set(instance, best.selected))


def test_round_best_of_picks_the_best_trial(rng):
    instance = random_instance(rng, 8, 3)
    x = np.full(8, 3 / 8)

    best = round_best_of(instance, x, trials=10, seed=100)

    values = [
        sw_set(instance, round_once(x, 3, seed=100 + t).selected) for t in range(10)
    ]
    assert best.welfare == max(values)
    assert best.trial == values.index(max(values))


def test_round_best_of_rejects_trials(rng):
    with pytest.raises(ValueError):
        round_best_of(random_instance(rng, 3, 1), np.zeros(3), trials=0, seed=0)


def test_expected_overflow():
    assert expected_overflow(np.ones(5), 3) == pytest.approx(2.0)
    assert expected_overflow(np.full(4, 0.5), 4) == 0.0
    # Z ~ Bin(2, 1/2): only Z = 2 exceeds k = 1
    assert expected_overflow(np.full(2, 0.5), 1) == pytest.approx(0.25)


@pytest.mark.parametrize("k", [16, 64, 256])
def test_expected_overflow_is_order_sqrt_k(k):
    assert expected_overflow(np.full(4 * k, 0.25), k) <= 3 * math.sqrt(k)


def rounded_welfare(instance, x, k, samples, seed=0):
    memo = {}
    values = np.empty(samples)
    for s in range(samples):
        selected = round_once(x, k, seed=seed + s).selected
        if selected not in memo:
            memo[selected] = sw_set(instance, selected)
        values[s] = memo[selected]
    return values.mean(), values.std() / math.sqrt(samples)


def test_untruncated_rounding_matches_sw_fractional(rng):
    instance = random_instance(rng, 6, 3)
    x = rng.random(6)

    # with k = n nothing is truncated, so selected is the Bernoulli sample
    mean, stderr = rounded_welfare(instance, x, 6, samples=100_000)

    assert abs(mean - sw_fractional(instance, x)) <= 4 * stderr


def test_rounding_keeps_most_of_the_fractional_welfare(rng):
    k = 16
    for _ in range(3):
        instance = random_instance(rng, 18, k)
        x = solve_practical(instance).solution
        fractional = sw_fractional(instance, x)
        optimum = brute_force(instance).welfare

        mean, stderr = rounded_welfare(instance, x, k, samples=2000)

        assert mean + 4 * stderr >= fractional - 3 * optimum / math.sqrt(k)


def test_round_best_of_stops_at_deadline(rng):
    instance = random_instance(rng, 6, 2)

    with pytest.raises(DeadlineExceeded):
        round_best_of(
            instance, np.full(6, 1 / 3), trials=5, seed=0, deadline=Deadline(0)
        )
