from dataclasses import dataclass

import numpy as np

from bidder_selection import logger
from bidder_selection.deadline import Deadline
from bidder_selection.distributions import make_rng
from bidder_selection.objectives import clamp_probabilities, poisson_binomial_pmf
from bidder_selection.welfare import sw_set


@dataclass(frozen=True)
class RoundingOutcome:
    selected: tuple
    pre_truncation_size: int
    welfare: float = None
    trial: int = 0


def round_once(x, k, seed, prng="pcg64"):
    """
    Include bidder i independently with probability x_i; if more than k are
    included keep a uniformly random k-subset of them.
    """
    x = clamp_probabilities(x)
    rng = make_rng(seed, prng)
    included = np.flatnonzero(rng.random(len(x)) < x)
    size = len(included)
    if size > k:
        included = rng.choice(included, size=k, replace=False)
    return RoundingOutcome(
        selected=tuple(sorted(int(i) for i in included)), pre_truncation_size=size
    )


def round_best_of(instance, x, trials, seed, prng="pcg64", deadline=None):
    """Best of ``trials`` roundings with seeds seed, seed+1, ...; ties go to the earliest."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    deadline = deadline or Deadline()
    best = None
    for trial in range(trials):
        deadline.check("rounding")
        outcome = round_once(x, instance.k, seed + trial, prng)
        welfare = sw_set(instance, outcome.selected)
        if best is None or welfare > best.welfare:
            best = RoundingOutcome(
                selected=outcome.selected,
                pre_truncation_size=outcome.pre_truncation_size,
                welfare=welfare,
                trial=trial,
            )
    logger.debug(f"best of {trials} roundings: trial {best.trial}, {best.welfare:.6g}")
    return best


def expected_overflow(x, k):
    """sum_{i >= 1} Pr[|y| >= k + i] = E[(|y| - k)^+] for y ~ Ber(x), exactly."""
    pmf = poisson_binomial_pmf(x)
    excess = np.maximum(np.arange(len(pmf)) - k, 0)
    return float(pmf @ excess)
