"""
Choice of the threshold eta and the small fixed bidder set.

Both variants scan the grid points for the last threshold at which at least
m = epsilon * k bidders still reach it with probability >= cap, fix every
bidder whose strict tail at that threshold is >= cap and top the set up to m
by lowest index. The coverage conditions are re-checked on every call.
"""

import math
from dataclasses import dataclass

import numpy as np

from bidder_selection import logger

INTEGRALITY_TOLERANCE = 1e-9
CONDITION_TOLERANCE = 1e-9


class InfeasibleParameters(ValueError):
    pass


class FixSetError(RuntimeError):
    pass


@dataclass(frozen=True)
class FixSetResult:
    eta: float
    eta_index: int
    fixed: tuple
    epsilon: float
    delta: float
    ell_star: float = None
    degenerate: bool = False

    @property
    def size(self):
        return len(self.fixed)


def _ceil_multiple(value, k):
    # float noise on exact powers must not push the ceiling up
    return math.ceil(value - INTEGRALITY_TOLERANCE) / k


def position_parameters(k):
    """(ell_star, epsilon, delta) = (sqrt k, ceil(k^(3/4)) / k, epsilon)."""
    epsilon = _ceil_multiple(k ** 0.75, k)
    return math.sqrt(k), epsilon, epsilon


def single_item_epsilon(k):
    """ceil(sqrt(k ln k)) / k, the smallest multiple of 1/k >= sqrt(ln k / k)."""
    return _ceil_multiple(math.sqrt(k * math.log(k)), k)


def _fixed_count(epsilon, k):
    m = epsilon * k
    if abs(m - round(m)) > INTEGRALITY_TOLERANCE:
        raise InfeasibleParameters(f"epsilon={epsilon!r} is not a multiple of 1/{k}")
    return int(round(m))


def _scan(instance, cap, m):
    ge = instance.point_tails(strict=False)
    gt = instance.point_tails(strict=True)
    counts = np.count_nonzero(ge >= cap, axis=1)
    # counts is non-increasing and counts[0] = n >= m
    e = int(np.flatnonzero(counts >= m)[-1])
    if e == 0:
        order = sorted(range(instance.n), key=lambda i: (-gt[0, i], i))
        return 0, tuple(sorted(order[:m])), True
    above = np.flatnonzero(gt[e] >= cap)
    boundary = np.flatnonzero((ge[e] >= cap) & (gt[e] < cap))
    fixed = np.concatenate([above, boundary[: max(0, m - len(above))]])
    return e, tuple(sorted(int(i) for i in fixed)), False


def _check_outside(instance, fixed, e, cap):
    gt = instance.point_tails(strict=True)[e]
    outside = np.setdiff1d(np.arange(instance.n), fixed)
    if len(outside) and gt[outside].max() >= cap:
        raise FixSetError(
            f"bidder outside the fixed set has Pr[v > eta] >= {cap!r} at eta index {e}"
        )


def select_fix_set_position(instance, ell_star, delta, epsilon):
    k = instance.k
    m = _fixed_count(epsilon, k)
    if not epsilon < 1:
        raise InfeasibleParameters(f"epsilon must be < 1, got {epsilon!r}")
    if not ell_star < k:
        raise InfeasibleParameters(f"ell_star={ell_star!r} must be < k={k}")
    if epsilon * delta * k < ell_star - CONDITION_TOLERANCE:
        raise InfeasibleParameters(
            f"epsilon * delta * k = {epsilon * delta * k!r} < ell_star={ell_star!r}"
        )

    e, fixed, degenerate = _scan(instance, delta, m)
    if len(fixed) != m:
        raise FixSetError(f"fixed set has {len(fixed)} bidders, expected {m}")
    coverage = instance.point_tails(strict=False)[e, list(fixed)].sum()
    if coverage < ell_star - CONDITION_TOLERANCE:
        raise FixSetError(
            f"fixed bidders reach eta with total probability {coverage!r} < {ell_star!r}"
        )
    _check_outside(instance, fixed, e, delta)

    eta = float(instance.grid.points[e])
    if degenerate:
        logger.warning(f"degenerate instance, fixing {m} bidders at eta=0")
    logger.debug(f"position fix set: eta={eta} fixed={fixed}")
    return FixSetResult(
        eta=eta,
        eta_index=e,
        fixed=fixed,
        epsilon=epsilon,
        delta=delta,
        ell_star=ell_star,
        degenerate=degenerate,
    )


def select_fix_set_single_item(instance, epsilon):
    k = instance.k
    m = _fixed_count(epsilon, k)
    if not 0 < epsilon <= 1:
        raise InfeasibleParameters(f"epsilon must lie in (0, 1], got {epsilon!r}")

    e, fixed, degenerate = _scan(instance, epsilon, m)
    if len(fixed) != m:
        raise FixSetError(f"fixed set has {len(fixed)} bidders, expected {m}")
    reach = instance.point_tails(strict=False)[e, list(fixed)]
    success = 1.0 - np.prod(1.0 - reach)
    if success < 1.0 - 1.0 / k - CONDITION_TOLERANCE:
        raise FixSetError(
            f"a fixed bidder reaches eta with probability {success!r} < 1 - 1/{k}"
        )
    _check_outside(instance, fixed, e, epsilon)

    eta = float(instance.grid.points[e])
    if degenerate:
        logger.warning(f"degenerate instance, fixing {m} bidders at eta=0")
    logger.debug(f"single-item fix set: eta={eta} fixed={fixed}")
    return FixSetResult(
        eta=eta,
        eta_index=e,
        fixed=fixed,
        epsilon=epsilon,
        delta=epsilon,
        degenerate=degenerate,
    )
