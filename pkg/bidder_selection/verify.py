"""
Executable property suites: exact welfare against brute enumeration, the
objective ratio inequalities, concavity and analytic gradients, the rounding
overflow bound and the baseline guarantees. Each check returns a
CheckResult; ``violations`` lists human-readable failures.
"""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from bidder_selection import logger
from bidder_selection.baselines import brute_force, greedy, local_search
from bidder_selection.distributions import (
    AuctionInstance,
    DiscreteDistribution,
    default_position_weights,
    make_rng,
    single_item_weights,
    unit_weights,
)
from bidder_selection.fixset import (
    position_parameters,
    select_fix_set_position,
    select_fix_set_single_item,
    single_item_epsilon,
)
from bidder_selection.objectives import (
    h_ber,
    h_cher,
    h_pois,
    total_variation_pb_vs_poisson,
)
from bidder_selection.relaxation import (
    AdjustedPoissonChernoff,
    ChernoffLargeL,
    PoissonSmallTail,
    PracticalPoisson,
    SingleItemCoreTail,
)
from bidder_selection.rounding import expected_overflow
from bidder_selection.welfare import sw_fractional, sw_set

SLACK = 1e-12


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    violations: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self):
        return not self.violations


def random_distribution(rng, max_support=4, high=5.0):
    size = int(rng.integers(1, max_support + 1))
    support = np.sort(rng.choice(np.arange(0.0, high + 0.5, 0.5), size, replace=False))
    probs = rng.dirichlet(np.ones(size))
    return DiscreteDistribution(support=support, probs=probs / probs.sum())


def random_weights(rng, n):
    return np.sort(rng.random(n))[::-1]


def random_instance(rng, n, k, max_support=4, weights=None):
    distributions = [random_distribution(rng, max_support) for _ in range(n)]
    if weights is None:
        weights = random_weights(rng, n)
    return AuctionInstance(distributions, weights, k)


def profile_welfare(instance, members):
    """E[sum_l w_l v^(l)] over S by enumerating every joint value profile."""
    members = list(members)
    if not members:
        return 0.0
    dists = [instance.distributions[i] for i in members]
    total = 0.0
    for profile in itertools.product(*(range(len(d.support)) for d in dists)):
        probability = math.prod(d.probs[j] for d, j in zip(dists, profile))
        values = sorted((d.support[j] for d, j in zip(dists, profile)), reverse=True)
        total += probability * float(np.dot(values, instance.weights[: len(values)]))
    return total


def multilinear_welfare(instance, x):
    """sum over all subsets S of Pr[S] * sw_set(S)."""
    total = 0.0
    for mask in itertools.product((0, 1), repeat=instance.n):
        chosen = np.array(mask, dtype=bool)
        probability = np.prod(np.where(chosen, x, 1.0 - x))
        if probability:
            total += probability * sw_set(instance, np.flatnonzero(chosen))
    return total


def _run(name, body):
    result = CheckResult(name=name)
    start = time.perf_counter()
    body(result)
    result.elapsed = time.perf_counter() - start
    log = logger.info if result.passed else logger.error
    log(
        f"{name}: {result.cases} cases, {len(result.violations)} violations "
        f"in {result.elapsed:.2f}s"
    )
    return result


def check_welfare_oracles(instances=200, seed=0, tolerance=1e-8):
    rng = make_rng(seed)

    def body(result):
        for case in range(instances):
            n = int(rng.integers(1, 9))
            instance = random_instance(rng, n, n)
            x = rng.random(n)
            exact = sw_fractional(instance, x)
            enumerated = multilinear_welfare(instance, x)
            if abs(exact - enumerated) > tolerance:
                result.violations.append(
                    f"case {case}: sw_fractional {exact!r} != enumeration {enumerated!r}"
                )
            size = int(rng.integers(0, min(n, 5) + 1))
            members = np.sort(rng.choice(n, size, replace=False))
            value, oracle = sw_set(instance, members), profile_welfare(instance, members)
            if abs(value - oracle) > tolerance:
                result.violations.append(
                    f"case {case}: sw_set{tuple(members)} {value!r} != {oracle!r}"
                )
            result.cases += 1

    return _run("welfare-oracles", body)


def check_ratio_bounds(cases=1000, seed=0, deltas=(0.01, 0.05, 0.2)):
    rng = make_rng(seed)

    def violated(result, case, label, condition):
        if not condition:
            result.violations.append(f"case {case}: {label}")

    def body(result):
        for case in range(cases):
            n = int(rng.integers(1, 31))
            ell = int(rng.integers(1, n + 3))
            q = rng.random(n) * rng.random()
            ber, cher = float(h_ber(q, ell)), float(h_cher(q, ell))
            lam = q.sum()
            violated(result, case, "h_ber <= h_cher", ber <= cher + SLACK)
            violated(result, case, "h_cher <= 7 h_ber", cher <= 7 * ber + SLACK)
            if lam > 0:
                violated(
                    result,
                    case,
                    "h_cher - h_ber <= 3/sqrt(lam) h_cher",
                    cher - ber <= 3 / math.sqrt(lam) * cher + SLACK,
                )
            violated(
                result,
                case,
                "h_cher - h_ber <= 5/sqrt(ell) h_cher",
                cher - ber <= 5 / math.sqrt(ell) * cher + SLACK,
            )
            for delta in deltas:
                small = rng.random(n) * delta
                ber = float(h_ber(small, ell))
                pois = float(h_pois(small.sum(), ell))
                violated(
                    result,
                    case,
                    f"|h_ber - h_pois| <= 17.5 delta h_ber at delta={delta}",
                    abs(ber - pois) <= 17.5 * delta * ber + SLACK,
                )
                gap = float(h_ber(small, 1) - h_pois(small.sum(), 1))
                ber1 = float(h_ber(small, 1))
                violated(
                    result,
                    case,
                    f"0 <= h_ber - h_pois <= delta h_ber at ell=1, delta={delta}",
                    -SLACK <= gap <= delta * ber1 + SLACK,
                )
                violated(
                    result,
                    case,
                    f"total variation <= delta at delta={delta}",
                    total_variation_pb_vs_poisson(small) <= small.max() + SLACK,
                )
            result.cases += 1

    return _run("objective-ratio-bounds", body)


def _away_from_kinks(lam, margin=1e-3):
    return bool(np.all(np.abs(lam - np.round(lam)) > margin))


def relaxed_objectives(rng, n=10):
    """One objective of every variant on fresh random instances."""
    k = int(rng.integers(4, n))
    position = random_instance(rng, n, k, weights=default_position_weights(k, n))
    ell_star, epsilon, delta = position_parameters(k)
    ell = int(rng.integers(1, k + 1))
    unit = random_instance(rng, n, k, weights=unit_weights(ell, n))
    single = random_instance(rng, n, k, weights=single_item_weights(n))
    return [
        PracticalPoisson(position),
        PoissonSmallTail(unit, ell),
        ChernoffLargeL(unit, ell),
        AdjustedPoissonChernoff(
            position, select_fix_set_position(position, ell_star, delta, epsilon)
        ),
        SingleItemCoreTail(
            single, select_fix_set_single_item(single, single_item_epsilon(k))
        ),
    ]


def _chernoff_levels(objective, x):
    lam = objective.tails @ x
    if isinstance(objective, AdjustedPoissonChernoff):
        return lam[: objective.split] + objective.offset
    if isinstance(objective, ChernoffLargeL):
        return lam
    return np.array([0.5])


def finite_difference_gradient(objective, x, h=1e-6):
    gradient = np.empty_like(x)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        gradient[i] = (objective.value(x + step) - objective.value(x - step)) / (2 * h)
    return gradient


def check_concavity_and_gradients(pairs=10_000, instances=50, seed=0, tolerance=1e-5):
    rng = make_rng(seed)

    def body(result):
        for case in range(pairs):
            lam1, lam2 = rng.random(2) * 50
            ell = int(rng.integers(1, 21))
            middle = float(h_pois((lam1 + lam2) / 2, ell))
            chord = (float(h_pois(lam1, ell)) + float(h_pois(lam2, ell))) / 2
            if middle < chord - SLACK:
                result.violations.append(
                    f"pair {case}: h_pois not midpoint concave at {lam1!r}, {lam2!r}"
                )
            result.cases += 1
        for case in range(instances):
            for objective in relaxed_objectives(rng):
                if objective.dimension == 0:
                    continue
                for _ in range(20):
                    x = rng.uniform(0.05, 0.95, objective.dimension)
                    if _away_from_kinks(_chernoff_levels(objective, x)):
                        break
                else:
                    continue
                analytic = objective.gradient(x)
                numeric = finite_difference_gradient(objective, x)
                scale = max(np.abs(analytic).max(), 1e-8)
                error = np.abs(analytic - numeric).max() / scale
                if error > tolerance:
                    result.violations.append(
                        f"instance {case}: {objective.variant} gradient "
                        f"relative error {error:.3g}"
                    )
                result.cases += 1

    return _run("concavity-and-gradients", body)


def check_rounding_tail(ks=(16, 64, 256, 1024), spread=4):
    def body(result):
        for k in ks:
            x = np.full(spread * k, 1.0 / spread)
            overflow = expected_overflow(x, k)
            if overflow > 3 * math.sqrt(k):
                result.violations.append(
                    f"k={k}: expected overflow {overflow!r} > 3 sqrt(k)"
                )
            result.cases += 1

    return _run("rounding-overflow", body)


def _all_subset_values(instance):
    return {
        mask: sw_set(instance, [i for i in range(instance.n) if mask >> i & 1])
        for mask in range(1 << instance.n)
    }


def check_baseline_guarantees(instances=100, lattice_instances=20, seed=0):
    rng = make_rng(seed)
    ratio = 1 - 1 / math.e

    def body(result):
        for case in range(instances):
            n = int(rng.integers(2, 11))
            k = int(rng.integers(1, min(n, 4) + 1))
            instance = random_instance(rng, n, k)
            best = brute_force(instance).welfare
            first = greedy(instance)
            improved = local_search(instance)
            if first.welfare < ratio * best - SLACK:
                result.violations.append(
                    f"case {case}: greedy {first.welfare!r} < (1 - 1/e) OPT {best!r}"
                )
            if improved.welfare < first.welfare - SLACK:
                result.violations.append(
                    f"case {case}: local search {improved.welfare!r} below greedy"
                )
            if improved.welfare > best + SLACK:
                result.violations.append(f"case {case}: local search above OPT")
            result.cases += 1
        for case in range(lattice_instances):
            n = int(rng.integers(2, 8))
            instance = random_instance(rng, n, n)
            values = _all_subset_values(instance)
            for small, large in itertools.product(values, repeat=2):
                if small & ~large:
                    continue
                if values[small] > values[large] + 1e-9:
                    result.violations.append(f"lattice {case}: not monotone")
                for i in range(n):
                    bit = 1 << i
                    if large & bit:
                        continue
                    gain_small = values[small | bit] - values[small]
                    gain_large = values[large | bit] - values[large]
                    if gain_small < gain_large - 1e-9:
                        result.violations.append(f"lattice {case}: not submodular")
                result.cases += 1

    return _run("baseline-guarantees", body)


def run_all(quick=False, seed=0):
    if quick:
        return [
            check_welfare_oracles(instances=20, seed=seed),
            check_ratio_bounds(cases=100, seed=seed),
            check_concavity_and_gradients(pairs=1000, instances=5, seed=seed),
            check_rounding_tail(ks=(16, 64)),
            check_baseline_guarantees(instances=10, lattice_instances=3, seed=seed),
        ]
    return [
        check_welfare_oracles(seed=seed),
        check_ratio_bounds(seed=seed),
        check_concavity_and_gradients(seed=seed),
        check_rounding_tail(),
        check_baseline_guarantees(seed=seed),
    ]
