import heapq
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from cachetools import LRUCache

from bidder_selection import logger
from bidder_selection.deadline import Deadline
from bidder_selection.welfare import sw_set, sw_sets

IMPROVEMENT_THRESHOLD = 1e-12
BRUTE_FORCE_BATCH = 4096


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BaselineSettings:
    brute_force_cap: int = 2_000_000
    local_search_max_sweeps: int = 1000
    lazy_greedy: bool = False

    @classmethod
    def from_config(cls, section):
        return cls(**{key: section[key] for key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class BaselineReport:
    selected: tuple
    welfare: float
    evaluations: int
    wall_time: float
    iterations: int = 0
    algorithm: str = None


class SetEvaluator:
    """
    Exact set welfare with an LRU memo. ``evaluations`` counts requested
    values, cached or not.
    """

    def __init__(self, instance, maxsize=100_000):
        self.instance = instance
        self.evaluations = 0
        self._cache = LRUCache(maxsize=maxsize)

    def value(self, members):
        return float(self.values([members])[0]) if len(members) else 0.0

    def values(self, sets):
        keys = [tuple(sorted(int(i) for i in members)) for members in sets]
        self.evaluations += len(keys)
        missing = sorted({key for key in keys if key not in self._cache})
        by_size = {}
        for key in missing:
            by_size.setdefault(len(key), []).append(key)
        for size, group in by_size.items():
            if size:
                computed = sw_sets(self.instance, np.array(group, dtype=int))
            else:
                computed = np.zeros(len(group))
            for key, value in zip(group, computed):
                self._cache[key] = float(value)
        return np.array([self._cache[key] for key in keys])


def _report(name, selected, evaluator, start, iterations=0):
    selected = tuple(sorted(int(i) for i in selected))
    report = BaselineReport(
        selected=selected,
        welfare=sw_set(evaluator.instance, selected),
        evaluations=evaluator.evaluations,
        wall_time=time.perf_counter() - start,
        iterations=iterations,
        algorithm=name,
    )
    logger.info(
        f"{name}: welfare {report.welfare:.6g} with {report.evaluations} "
        f"evaluations in {report.wall_time:.3f}s"
    )
    return report


def greedy(instance, settings=None, deadline=None):
    """k rounds of adding the bidder with the largest exact marginal gain."""
    deadline = deadline or Deadline()
    start = time.perf_counter()
    evaluator = SetEvaluator(instance)
    selected = []
    current = 0.0
    for _ in range(instance.k):
        deadline.check("greedy")
        candidates = [i for i in range(instance.n) if i not in selected]
        values = evaluator.values([selected + [i] for i in candidates])
        best = int(np.argmax(values))
        if values[best] - current <= 0:
            logger.debug(f"greedy stopped with {len(selected)} bidders")
            break
        selected.append(candidates[best])
        current = values[best]
    return _report("greedy", selected, evaluator, start)


def lazy_greedy(instance, settings=None, deadline=None):
    """
    Greedy with stale upper bounds kept in a heap; picks the same bidders as
    ``greedy`` up to ties with fewer evaluations.
    """
    deadline = deadline or Deadline()
    start = time.perf_counter()
    evaluator = SetEvaluator(instance)
    singles = evaluator.values([[i] for i in range(instance.n)])
    heap = [(-gain, i, 0) for i, gain in enumerate(singles)]
    heapq.heapify(heap)
    selected = []
    current = 0.0
    while heap and len(selected) < instance.k:
        deadline.check("lazy greedy")
        bound, i, stamp = heapq.heappop(heap)
        if stamp == len(selected):
            if -bound <= 0:
                break
            selected.append(i)
            current += -bound
            continue
        gain = evaluator.value(selected + [i]) - current
        heapq.heappush(heap, (-gain, i, len(selected)))
    return _report("lazy_greedy", selected, evaluator, start)


def initial_selection(instance, settings=None, deadline=None):
    """Greedy output padded to min(k, n) bidders with the lowest free indices."""
    chosen = list(greedy(instance, settings, deadline).selected)
    for i in range(instance.n):
        if len(chosen) >= min(instance.k, instance.n):
            break
        if i not in chosen:
            chosen.append(i)
    return tuple(sorted(chosen))


def local_search(
    instance, init=None, max_sweeps=None, settings=None, deadline=None
):
    """Best-improvement single swaps until no swap gains more than 1e-12."""
    settings = settings or BaselineSettings()
    deadline = deadline or Deadline()
    max_sweeps = settings.local_search_max_sweeps if max_sweeps is None else max_sweeps
    init = initial_selection(instance, settings, deadline) if init is None else init
    if len(set(init)) != min(instance.k, instance.n) or len(set(init)) != len(init):
        raise ValueError(
            f"local search needs {min(instance.k, instance.n)} distinct bidders, "
            f"got {init}"
        )
    start = time.perf_counter()
    evaluator = SetEvaluator(instance)
    selected = sorted(int(i) for i in init)
    current = evaluator.value(selected)
    iterations = 0
    while iterations < max_sweeps:
        deadline.check("local search")
        outside = [i for i in range(instance.n) if i not in selected]
        swaps = [(r, a) for r in selected for a in outside]
        if not swaps:
            break
        values = evaluator.values(
            [[i for i in selected if i != r] + [a] for r, a in swaps]
        )
        best = int(np.argmax(values))
        if values[best] - current <= IMPROVEMENT_THRESHOLD:
            break
        removed, added = swaps[best]
        selected = sorted([i for i in selected if i != removed] + [added])
        current = values[best]
        iterations += 1
    else:
        logger.warning(f"local search hit max_sweeps={max_sweeps}")
    return _report("local_search", selected, evaluator, start, iterations)


def brute_force(instance, settings=None, deadline=None):
    """Exact optimum over all k-subsets; monotonicity makes size k sufficient."""
    settings = settings or BaselineSettings()
    n, k = instance.n, instance.k
    subsets = math.comb(n, k)
    if subsets > settings.brute_force_cap:
        raise CapExceeded(
            f"C({n}, {k}) = {subsets} subsets exceeds the cap {settings.brute_force_cap}"
        )
    deadline = deadline or Deadline()
    start = time.perf_counter()
    evaluator = SetEvaluator(instance)
    best, best_value = None, -np.inf
    combinations = itertools.combinations(range(n), k)
    while True:
        deadline.check("brute force")
        block = np.array(list(itertools.islice(combinations, BRUTE_FORCE_BATCH)))
        if not len(block):
            break
        values = sw_sets(instance, block)
        evaluator.evaluations += len(block)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best, best_value = block[index], values[index]
    return _report("brute_force", best, evaluator, start)


BASELINES = {
    "greedy": greedy,
    "local_search": local_search,
    "brute_force": brute_force,
}


def run_baseline(name, instance, settings=None, deadline=None):
    settings = settings or BaselineSettings()
    if name == "greedy" and settings.lazy_greedy:
        return lazy_greedy(instance, settings, deadline)
    try:
        baseline = BASELINES[name]
    except KeyError:
        raise ValueError(f"unknown baseline {name!r}, expected one of {sorted(BASELINES)}")
    return baseline(instance, settings=settings, deadline=deadline)
