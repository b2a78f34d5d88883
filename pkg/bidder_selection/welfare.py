import numpy as np

from bidder_selection.distributions import make_rng
from bidder_selection.objectives import (
    count_tails,
    h_ber_from_tails,
    poisson_binomial_pmf,
)

BOX_TOLERANCE = 1e-12
BUDGET_TOLERANCE = 1e-9

# upper bound on sets x segments x (set size + 1) floats held by one DP batch
BATCH_ELEMENTS = 4_000_000


class InfeasibleSolution(ValueError):
    pass


def check_box(instance, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (instance.n,):
        raise InfeasibleSolution(f"expected {instance.n} coordinates, got {x.shape}")
    if np.any(x < -BOX_TOLERANCE) or np.any(x > 1 + BOX_TOLERANCE):
        raise InfeasibleSolution(f"solution outside [0, 1]^n: {x}")
    return np.clip(x, 0.0, 1.0)


def check_fractional(instance, x, budget=None):
    """Box and budget feasibility; returns the clipped vector."""
    x = check_box(instance, x)
    budget = instance.k if budget is None else budget
    if x.sum() > budget + BUDGET_TOLERANCE:
        raise InfeasibleSolution(f"sum(x) = {x.sum()!r} exceeds the budget {budget}")
    return x


def check_members(instance, members):
    members = np.asarray(members, dtype=int).ravel()
    if len(members) and (members.min() < 0 or members.max() >= instance.n):
        raise InfeasibleSolution(f"bidder index out of range: {members}")
    if len(np.unique(members)) != len(members):
        raise InfeasibleSolution(f"repeated bidder in {members}")
    return np.sort(members)


def _welfare_from_q(instance, q):
    # q: (..., T, m) exceedance probabilities per segment
    tails = count_tails(poisson_binomial_pmf(q))
    per_segment = h_ber_from_tails(tails, instance.weights)
    return per_segment @ instance.grid.segment_lengths


def sw_fractional(instance, x):
    """
    Expected welfare of including bidder i independently with probability
    x_i: sum over grid segments of length x h_ber_weighted(x * Pr[v > tau_j]).
    """
    x = check_box(instance, x)
    active = np.flatnonzero(x > 0)
    if not len(active) or not instance.grid.segments:
        return 0.0
    q = instance.tail_matrix[:, active] * x[active]
    return float(_welfare_from_q(instance, q))


def sw_set(instance, members):
    members = check_members(instance, members)
    if not len(members):
        return 0.0
    return float(sw_sets(instance, members[None, :])[0])


def sw_sets(instance, sets):
    """sw_set for every row of ``sets`` (all of one size), in batches."""
    sets = np.asarray(sets, dtype=int)
    if sets.ndim != 2:
        raise InfeasibleSolution(f"expected a 2-D array of sets, got {sets.shape}")
    count, size = sets.shape
    if not count or not size:
        return np.zeros(count)
    if sets.min() < 0 or sets.max() >= instance.n:
        raise InfeasibleSolution("bidder index out of range")
    segments = instance.grid.segments
    if not segments:
        return np.zeros(count)
    chunk = max(1, BATCH_ELEMENTS // (segments * (size + 1)))
    tails = instance.tail_matrix
    values = np.empty(count)
    for start in range(0, count, chunk):
        block = sets[start : start + chunk]
        # (sets, T, size)
        q = np.transpose(tails[:, block], (1, 0, 2))
        values[start : start + chunk] = _welfare_from_q(instance, q)
    return values


def sw_monte_carlo(instance, x, samples, seed, prng="pcg64"):
    """
    Sample inclusions y ~ Ber(x) and value profiles, sum w_l times the l-th
    largest selected value; return (mean, standard error).
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    x = check_box(instance, x)
    rng = make_rng(seed, prng)
    included = rng.random((samples, instance.n)) < x
    uniforms = rng.random((samples, instance.n))
    values = np.empty((samples, instance.n))
    for i, dist in enumerate(instance.distributions):
        cdf = np.cumsum(dist.probs)
        index = np.searchsorted(cdf, uniforms[:, i] * cdf[-1], side="right")
        values[:, i] = dist.support[np.minimum(index, len(cdf) - 1)]
    selected = np.where(included, values, 0.0)
    # stable sort keeps bidder order among equal values
    ranked = -np.sort(-selected, axis=1, kind="stable")
    welfare = ranked @ instance.weights
    if samples == 1:
        return float(welfare[0]), 0.0
    return float(welfare.mean()), float(welfare.std(ddof=1) / np.sqrt(samples))
