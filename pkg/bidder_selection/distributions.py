import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from bidder_selection import logger

PROBABILITY_TOLERANCE = 1e-12

BIT_GENERATORS = {
    "pcg64": np.random.PCG64,
    "philox": np.random.Philox,
    "sfc64": np.random.SFC64,
}


class InvalidDistribution(ValueError):
    pass


class InvalidInstance(ValueError):
    pass


def make_rng(seed, prng="pcg64"):
    """numpy Generator over one of the named 64-bit bit generators."""
    try:
        bit_generator = BIT_GENERATORS[prng]
    except KeyError:
        raise ValueError(
            f"unknown PRNG {prng!r}, expected one of {sorted(BIT_GENERATORS)}"
        )
    return np.random.Generator(bit_generator(int(seed)))


def _frozen(values):
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """
    A finite-support value distribution given explicitly by its support
    points and their probabilities.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = _frozen(self.support)
        probs = _frozen(self.probs)
        if support.ndim != 1 or support.shape != probs.shape or not len(support):
            raise InvalidDistribution(
                "support and probs must be non-empty 1-D sequences of equal "
                f"length, got {support.shape} and {probs.shape}"
            )
        if not np.all(np.isfinite(support)) or support[0] < 0:
            raise InvalidDistribution(f"support must be finite and >= 0: {support}")
        if np.any(np.diff(support) <= 0):
            raise InvalidDistribution(f"support must be strictly increasing: {support}")
        if np.any(probs < 0):
            raise InvalidDistribution(f"probabilities must be >= 0: {probs}")
        if abs(math.fsum(probs) - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidDistribution(
                f"probabilities sum to {math.fsum(probs)!r}, expected 1"
            )
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, value):
        return cls(support=[value], probs=[1.0])

    @classmethod
    def from_dict(cls, masses):
        points = sorted(masses)
        return cls(support=points, probs=[masses[point] for point in points])

    @cached_property
    def _upper_sums(self):
        # _upper_sums[i] = Pr[v >= support[i]], summed from the top
        return np.append(np.cumsum(self.probs[::-1])[::-1], 0.0)

    def tail_probability(self, tau, strict=False):
        tau = np.asarray(tau, dtype=np.float64)
        if np.any(tau < 0):
            raise ValueError(f"thresholds must be >= 0, got {tau}")
        side = "right" if strict else "left"
        result = self._upper_sums[np.searchsorted(self.support, tau, side=side)]
        return float(result) if result.ndim == 0 else result

    def mean(self):
        return float(self.support @ self.probs)

    def __repr__(self):
        masses = ", ".join(f"{v:g}: {p:g}" for v, p in zip(self.support, self.probs))
        return f"DiscreteDistribution({{{masses}}})"


def tail_probability(dist, tau, strict=False):
    """Pr[v >= tau], or Pr[v > tau] when ``strict``."""
    return dist.tail_probability(tau, strict=strict)


@dataclass(frozen=True, eq=False)
class ThresholdGrid:
    points: np.ndarray
    segment_lengths: np.ndarray

    @property
    def segments(self):
        return len(self.segment_lengths)


def threshold_grid(distributions):
    points = np.unique(np.concatenate([[0.0]] + [d.support for d in distributions]))
    return ThresholdGrid(points=_frozen(points), segment_lengths=_frozen(np.diff(points)))


@dataclass(frozen=True, eq=False)
class AuctionInstance:
    """
    n independent bidders, a non-increasing position weight vector padded to
    length n, and the number k of bidders to invite.
    """

    distributions: tuple
    weights: np.ndarray
    capacity: int

    def __post_init__(self):
        distributions = tuple(self.distributions)
        n = len(distributions)
        if not n:
            raise InvalidInstance("an instance needs at least one bidder")
        for i, dist in enumerate(distributions):
            if not isinstance(dist, DiscreteDistribution):
                raise InvalidInstance(f"bidder {i} is not a DiscreteDistribution")
        weights = np.array(self.weights, dtype=np.float64).ravel()
        if len(weights) > n:
            raise InvalidInstance(f"{len(weights)} weights given for {n} bidders")
        weights = np.pad(weights, (0, n - len(weights)))
        if np.any(weights < 0) or np.any(weights > 1):
            raise InvalidInstance(f"weights must lie in [0, 1]: {weights}")
        if np.any(np.diff(weights) > 0):
            raise InvalidInstance(f"weights must be non-increasing: {weights}")
        if int(self.capacity) != self.capacity or not 1 <= self.capacity <= n:
            raise InvalidInstance(f"capacity must satisfy 1 <= k <= {n}")
        weights.setflags(write=False)
        object.__setattr__(self, "distributions", distributions)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacity", int(self.capacity))

    @property
    def n(self):
        return len(self.distributions)

    @property
    def k(self):
        return self.capacity

    @cached_property
    def grid(self):
        return threshold_grid(self.distributions)

    def point_tails(self, strict):
        """Pr[v_i >= tau] (or > tau when ``strict``) at every grid point, as (T+1) x n."""
        return self._strict_point_tails if strict else self._weak_point_tails

    @cached_property
    def _strict_point_tails(self):
        return self._tails_at_points(strict=True)

    @cached_property
    def _weak_point_tails(self):
        return self._tails_at_points(strict=False)

    def _tails_at_points(self, strict):
        tails = np.column_stack(
            [d.tail_probability(self.grid.points, strict=strict) for d in self.distributions]
        )
        tails.setflags(write=False)
        return tails

    @cached_property
    def tail_matrix(self):
        """Strict tails at the left endpoint of each grid segment, T x n."""
        return self._strict_point_tails[:-1]

    def means(self):
        return np.array([d.mean() for d in self.distributions])

    def unit_level(self):
        """ell when the weights are (1, ..., 1, 0, ..., 0) with ell ones, else None."""
        ell = int(np.count_nonzero(self.weights == 1.0))
        if ell and np.all(self.weights[ell:] == 0.0):
            return ell
        return None

    def is_single_item(self):
        return self.unit_level() == 1

    def with_weights(self, weights):
        return AuctionInstance(self.distributions, weights, self.capacity)


def build_threshold_grid(instance):
    return instance.grid


def default_position_weights(k, n):
    """
    Weight 1 on the first floor(0.2k) positions, 0.2 up to floor(0.6k), 0
    afterwards; position 1 always gets weight 1.
    """
    if not 1 <= k <= n:
        raise InvalidInstance(f"need 1 <= k <= n, got k={k}, n={n}")
    top = max(1, math.floor(0.2 * k))
    middle = max(top, math.floor(0.6 * k))
    weights = np.zeros(n)
    weights[:middle] = 0.2
    weights[:top] = 1.0
    return weights


def unit_weights(ell, n):
    if not 1 <= ell:
        raise InvalidInstance(f"ell must be >= 1, got {ell}")
    weights = np.zeros(n)
    weights[: min(ell, n)] = 1.0
    return weights


def single_item_weights(n):
    return unit_weights(1, n)


def weights_for_scheme(scheme, k, n):
    """Resolve ``position``, ``single_item`` or ``unit:<ell>`` to a weight vector."""
    if scheme == "position":
        return default_position_weights(k, n)
    if scheme == "single_item":
        return single_item_weights(n)
    if scheme.startswith("unit:"):
        try:
            ell = int(scheme.split(":", 1)[1])
        except ValueError:
            raise InvalidInstance(f"bad unit weight scheme {scheme!r}")
        return unit_weights(ell, n)
    raise InvalidInstance(f"unknown weight scheme {scheme!r}")


def lognormal_support(grid_size):
    return np.concatenate([[0.0], 1.0 + np.arange(grid_size) / grid_size])


def discretize_lognormal(mu, sigma, grid_size=50):
    """
    Bin Lognormal(mu, sigma^2) onto {0} and {1 + i/grid_size}: mass below 1
    goes to 0, each cell's mass to its left endpoint with the last cell
    closed at 2, and mass above 2 is spread proportionally over the points.
    """
    if grid_size < 2:
        raise InvalidDistribution(f"grid_size must be >= 2, got {grid_size}")
    support = lognormal_support(grid_size)
    edges = 1.0 + np.arange(grid_size + 1) / grid_size

    if sigma == 0:
        value = math.exp(mu)
        masses = np.zeros(grid_size + 1)
        above = 0.0
        if value < 1:
            masses[0] = 1.0
        elif value <= 2:
            cell = min(int(math.floor((value - 1.0) * grid_size)), grid_size - 1)
            masses[cell + 1] = 1.0
        else:
            above = 1.0
    else:
        law = stats.lognorm(s=sigma, scale=math.exp(mu))
        cdf = law.cdf(edges)
        masses = np.concatenate([[cdf[0]], np.diff(cdf)])
        above = float(law.sf(2.0))

    total = masses.sum()
    if above > 0:
        if total > 0:
            masses = masses + above * masses / total
        else:
            masses = np.full(len(support), 1.0 / len(support))
    masses = np.clip(masses, 0.0, None)
    return DiscreteDistribution(support=support, probs=masses / masses.sum())


def generate_lognormal_instance(
    n, k, seed, grid_size=50, weights="position", prng="pcg64"
):
    """
    Draw mu ~ U[0, 0.2] and sigma ~ U[0, 0.5] per bidder and discretize the
    lognormal onto the common grid. Deterministic given ``seed``.
    """
    if not 1 <= k <= n:
        raise InvalidInstance(f"need n >= k >= 1, got n={n}, k={k}")
    if grid_size < 2:
        raise InvalidDistribution(f"grid_size must be >= 2, got {grid_size}")
    rng = make_rng(seed, prng)
    mus = rng.uniform(0.0, 0.2, size=n)
    sigmas = rng.uniform(0.0, 0.5, size=n)
    distributions = [
        discretize_lognormal(mu, sigma, grid_size) for mu, sigma in zip(mus, sigmas)
    ]
    if isinstance(weights, str):
        weights = weights_for_scheme(weights, k, n)
    logger.debug(f"generated lognormal instance n={n} k={k} seed={seed}")
    return AuctionInstance(distributions, weights, k)
