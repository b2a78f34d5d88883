import numpy as np

from bidder_selection.distributions import AuctionInstance, DiscreteDistribution


def dist(masses):
    return DiscreteDistribution.from_dict(masses)


def make_instance(distributions, weights, k):
    return AuctionInstance([dist(d) for d in distributions], weights, k)


coin_flips = [{0: 0.5, 2: 0.5}, {0: 0.5, 2: 0.5}]

# two coin flips plus a constant bidder
three_bidders = coin_flips + [{1: 1.0}]

point_masses_at_zero = [{0: 1.0}] * 4

solver_variants = [
    "alg1",
    "practical",
    "single_item",
    "chernoff_large_l",
    "poisson_small_tail",
]


def random_masses(rng, max_support=4, high=5.0):
    size = int(rng.integers(1, max_support + 1))
    support = np.sort(rng.choice(np.arange(0.0, high + 0.5, 0.5), size, replace=False))
    probs = rng.dirichlet(np.ones(size))
    return dict(zip(support.tolist(), (probs / probs.sum()).tolist()))


def random_instance(rng, n, k, weights=None):
    if weights is None:
        weights = np.sort(rng.random(n))[::-1]
    return make_instance([random_masses(rng) for _ in range(n)], weights, k)
