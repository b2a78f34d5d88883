import itertools
import math

import numpy as np
import pytest

from bidder_selection.baselines import (
    BaselineSettings,
    CapExceeded,
    SetEvaluator,
    brute_force,
    greedy,
    initial_selection,
    lazy_greedy,
    local_search,
    run_baseline,
)
from bidder_selection.deadline import Deadline, DeadlineExceeded
from bidder_selection.welfare import sw_set

from tests import make_instance, random_instance


def test_greedy_prefers_higher_mean():
    instance = make_instance([{1: 1.0}, {0: 0.5, 3: 0.5}], [1], 1)

    report = greedy(instance)

    assert report.selected == (1,)
    assert report.welfare == pytest.approx(1.5)
    assert report.algorithm == "greedy"


def test_greedy_breaks_ties_by_index():
    instance = make_instance([{1: 1.0}, {1: 1.0}], [1], 1)

    assert greedy(instance).selected == (0,)


def test_greedy_counts_evaluations(rng):
    instance = random_instance(rng, 6, 3)

    report = greedy(instance)

    assert len(report.selected) <= 3
    assert 6 <= report.evaluations <= 6 + 5 + 4


def test_greedy_stops_without_gain():
    instance = make_instance([{2: 1.0}, {1: 1.0}, {1: 1.0}], [1, 0, 0], 3)

    report = greedy(instance)

    assert report.selected == (0,)
    assert report.welfare == pytest.approx(2.0)


def test_lazy_greedy_matches_greedy(rng):
    for _ in range(10):
        instance = random_instance(rng, 8, 3)

        eager, lazy = greedy(instance), lazy_greedy(instance)

        assert lazy.welfare == pytest.approx(eager.welfare, abs=1e-12)
        assert lazy.evaluations <= eager.evaluations


def test_initial_selection_pads_to_k():
    instance = make_instance([{2: 1.0}, {1: 1.0}, {1: 1.0}], [1, 0, 0], 3)

    assert initial_selection(instance) == (0, 1, 2)


def test_local_search_keeps_optimal_init(rng):
    instance = random_instance(rng, 6, 2)
    optimum = brute_force(instance)

    report = local_search(instance, init=optimum.selected)

    assert report.selected == optimum.selected
    assert report.iterations == 0


def test_local_search_improves_on_greedy(rng):
    for _ in range(10):
        instance = random_instance(rng, 7, 3)
        first = greedy(instance)

        report = local_search(instance)

        assert report.welfare >= first.welfare - 1e-12
        assert len(report.selected) == 3


def test_local_search_from_bad_start():
    instance = make_instance(
        [{1: 1.0}, {1: 1.0}, {3: 1.0}, {0: 0.5, 4: 0.5}], [1, 0.5, 0, 0], 2
    )

    report = local_search(instance, init=(0, 1))

    assert report.selected == (2, 3)
    assert report.iterations >= 1
    assert report.welfare == pytest.approx(sw_set(instance, (2, 3)))


def test_local_search_respects_max_sweeps(caplog):
    instance = make_instance(
        [{1: 1.0}, {1: 1.0}, {3: 1.0}, {4: 1.0}], [1, 0.5, 0, 0], 2
    )

    report = local_search(instance, init=(0, 1), max_sweeps=1)

    assert report.iterations == 1
    assert "max_sweeps=1" in caplog.text


@pytest.mark.parametrize("init", [(0,), (0, 0), (0, 1, 2)])
def test_local_search_rejects_init(init):
    instance = make_instance([{1: 1.0}] * 4, [1, 0.5], 2)

    with pytest.raises(ValueError):
        local_search(instance, init=init)


def test_brute_force_trivial_instances():
    assert brute_force(make_instance([{2: 1.0}], [1], 1)).selected == (0,)
    assert brute_force(make_instance([{1: 1.0}] * 3, [1, 1, 1], 3)).selected == (0, 1, 2)


def test_brute_force_is_optimal(rng):
    instance = random_instance(rng, 7, 3)

    report = brute_force(instance)

    best = max(sw_set(instance, s) for s in itertools.combinations(range(7), 3))
    assert report.welfare == pytest.approx(best)
    assert report.evaluations == math.comb(7, 3)


def test_brute_force_cap(rng):
    instance = random_instance(rng, 10, 5)

    with pytest.raises(CapExceeded):
        brute_force(instance, BaselineSettings(brute_force_cap=100))


def test_greedy_guarantee(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(n, 4) + 1))
        instance = random_instance(rng, n, k)

        assert greedy(instance).welfare >= (1 - 1 / math.e) * brute_force(
            instance
        ).welfare - 1e-12


def test_set_evaluator_caches():
    instance = make_instance([{1: 1.0}, {2: 1.0}], [1, 0.5], 2)
    evaluator = SetEvaluator(instance)

    values = evaluator.values([[0, 1], [1, 0], [1], []])

    np.testing.assert_allclose(values, [2.5, 2.5, 2.0, 0.0])
    assert evaluator.evaluations == 4
    assert len(evaluator._cache) == 3


@pytest.mark.parametrize(
    "lazy,algorithm", [(False, "greedy"), (True, "lazy_greedy")]
)
def test_run_baseline_greedy(rng, lazy, algorithm):
    instance = random_instance(rng, 5, 2)

    report = run_baseline("greedy", instance, BaselineSettings(lazy_greedy=lazy))

    assert report.algorithm == algorithm


def test_run_baseline_unknown(rng):
    with pytest.raises(ValueError):
        run_baseline("annealing", random_instance(rng, 3, 1))


def test_local_search_usually_finds_the_optimum():
    hits = 0
    for seed in range(100):
        instance = random_instance(np.random.default_rng(seed), 8, 3)
        optimum = brute_force(instance).welfare
        hits += local_search(instance).welfare >= optimum - 1e-9 * max(optimum, 1)

    assert hits >= 90


@pytest.mark.parametrize("name", ["greedy", "local_search", "brute_force"])
@pytest.mark.parametrize("lazy", [False, True])
def test_run_baseline_stops_at_deadline(rng, name, lazy):
    instance = random_instance(rng, 6, 2)
    settings = BaselineSettings(lazy_greedy=lazy)

    with pytest.raises(DeadlineExceeded):
        run_baseline(name, instance, settings, Deadline(0))


def test_local_search_with_init_stops_at_deadline(rng):
    instance = random_instance(rng, 6, 2)

    with pytest.raises(DeadlineExceeded, match="local search"):
        local_search(instance, init=(0, 1), deadline=Deadline(0))
