import time
from dataclasses import dataclass, field

import numpy as np

from bidder_selection import logger
from bidder_selection.deadline import Deadline
from bidder_selection.fixset import (
    position_parameters,
    select_fix_set_position,
    select_fix_set_single_item,
    single_item_epsilon,
)
from bidder_selection.relaxation import (
    AdjustedPoissonChernoff,
    ChernoffLargeL,
    PoissonSmallTail,
    PracticalPoisson,
    SingleItemCoreTail,
)

MIN_STEP = 1e-12
MIN_BB_STEP = 1e-10
MAX_BB_STEP = 1e4


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    armijo: float = 1e-4
    tol: float = 1e-7
    max_iters: int = 2000
    step_rule: str = "bb"
    small_tail_delta: float = 0.05

    @classmethod
    def from_config(cls, section):
        return cls(**{key: section[key] for key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    wall_time: float
    variant: str = None
    fallback: bool = False
    fix: object = None
    trace: tuple = field(default=(), repr=False)


def project_capped_box(v, budget):
    """Euclidean projection of ``v`` onto {x in [0, 1]^n : sum(x) <= budget}."""
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    v = np.asarray(v, dtype=np.float64)
    clipped = np.clip(v, 0.0, 1.0)
    if clipped.sum() <= budget:
        return clipped

    # g(theta) = sum clip(v - theta, 0, 1) is piecewise linear with kinks at
    # v_i - 1 and v_i; evaluate it at every kink and interpolate.
    ordered = np.sort(v)
    suffix = np.append(np.cumsum(ordered[::-1])[::-1], 0.0)
    n = len(v)

    def positive_part_sum(theta):
        index = np.searchsorted(ordered, theta, side="right")
        return suffix[index] - (n - index) * theta

    kinks = np.sort(np.concatenate([ordered - 1.0, ordered]))
    levels = positive_part_sum(kinks) - positive_part_sum(kinks + 1.0)
    j = int(np.flatnonzero(levels >= budget)[-1])
    if j + 1 < len(kinks) and levels[j] > levels[j + 1]:
        fraction = (levels[j] - budget) / (levels[j] - levels[j + 1])
        theta = kinks[j] + fraction * (kinks[j + 1] - kinks[j])
    else:
        theta = kinks[j]
    return np.clip(v - theta, 0.0, 1.0)


def _bb_step(s, y):
    curvature = -float(s @ y)
    if curvature <= 0:
        return MAX_BB_STEP
    return float(np.clip(s @ s / curvature, MIN_BB_STEP, MAX_BB_STEP))


def maximize(objective, budget=None, settings=None, deadline=None):
    """
    Projected gradient ascent with Armijo backtracking over the capped box,
    starting from budget/d in every coordinate. Raises DeadlineExceeded when
    ``deadline`` expires between iterations.
    """
    settings = settings or SolverSettings()
    deadline = deadline or Deadline()
    budget = objective.budget if budget is None else budget
    start = time.perf_counter()
    d = objective.dimension
    x = project_capped_box(np.full(d, budget / d if d else 0.0), budget)
    f, g = objective.value_and_gradient(x)
    trace = [f]
    step = settings.initial_step
    converged = False
    iterations = 0

    while iterations < settings.max_iters and d:
        deadline.check(objective.variant)
        iterations += 1
        while True:
            candidate = project_capped_box(x + step * g, budget)
            direction = candidate - x
            if not np.any(direction):
                converged = True
                break
            f_new, g_new = objective.value_and_gradient(candidate)
            if f_new >= f + settings.armijo * float(g @ direction):
                break
            step *= settings.backtrack_factor
            if step < MIN_STEP:
                converged = True
                break
        if converged:
            break

        improvement = f_new - f
        if settings.step_rule == "bb":
            step = _bb_step(direction, g_new - g)
        else:
            step = settings.initial_step
        x, f, g = candidate, f_new, g_new
        trace.append(f)
        if improvement <= settings.tol * max(abs(f), np.finfo(float).tiny):
            converged = True
            break
    else:
        converged = converged or not d

    if not converged:
        logger.warning(
            f"{objective.variant} ascent stopped after {iterations} iterations "
            "without converging"
        )
    return SolveReport(
        solution=x,
        objective_value=f,
        iterations=iterations,
        converged=converged,
        wall_time=time.perf_counter() - start,
        variant=objective.variant,
        fix=getattr(objective, "fix", None),
        trace=tuple(trace),
    )


def _finish(objective, report, start, fallback=False):
    solution = objective.assemble(report.solution)
    wall_time = time.perf_counter() - start
    logger.info(
        f"{report.variant} solved in {wall_time:.3f}s, "
        f"{report.iterations} iterations, value {report.objective_value:.6g}"
    )
    return SolveReport(
        solution=solution,
        objective_value=report.objective_value,
        iterations=report.iterations,
        converged=report.converged,
        wall_time=wall_time,
        variant=report.variant,
        fallback=fallback,
        fix=report.fix,
        trace=report.trace,
    )


def solve_practical(instance, settings=None, fallback=False, deadline=None):
    """Maximize the Poisson surrogate over the full capped box, no fixed set."""
    start = time.perf_counter()
    objective = PracticalPoisson(instance)
    report = maximize(objective, settings=settings, deadline=deadline)
    return _finish(objective, report, start, fallback)


def solve_alg1(instance, settings=None, deadline=None):
    """
    Fix sqrt(k)-covering bidders below eta, then maximize the Chernoff /
    adjusted Poisson objective on the rest with budget k - epsilon k.
    """
    k = instance.k
    ell_star, epsilon, delta = position_parameters(k)
    if round(epsilon * k) >= k:
        logger.warning(f"epsilon * k >= k for k={k}, using the practical objective")
        return solve_practical(instance, settings, fallback=True, deadline=deadline)
    start = time.perf_counter()
    fix = select_fix_set_position(instance, ell_star, delta, epsilon)
    objective = AdjustedPoissonChernoff(instance, fix)
    return _finish(
        objective, maximize(objective, settings=settings, deadline=deadline), start
    )


def solve_single_item(instance, settings=None, deadline=None):
    if not instance.is_single_item():
        raise PreconditionError(
            f"single-item solver needs weights (1, 0, ..., 0), got {instance.weights}"
        )
    k = instance.k
    epsilon = single_item_epsilon(k)
    m = round(epsilon * k)
    if m == 0 or m >= k:
        logger.warning(
            f"no proper fixed set for k={k}, using the practical objective"
        )
        return solve_practical(instance, settings, fallback=True, deadline=deadline)
    start = time.perf_counter()
    fix = select_fix_set_single_item(instance, epsilon)
    objective = SingleItemCoreTail(instance, fix)
    return _finish(
        objective, maximize(objective, settings=settings, deadline=deadline), start
    )


def _unit_level(instance, ell):
    level = instance.unit_level()
    if ell is None:
        ell = level
    if ell is None or ell < 1 or level != min(ell, instance.n):
        raise PreconditionError(
            f"expected {ell}-unit weights (1, ..., 1, 0, ...), got {instance.weights}"
        )
    return ell


def solve_chernoff_large_l(instance, ell=None, settings=None, deadline=None):
    """Maximize sum_t length_t * min(lam_t, ell); a (1 - 5/sqrt(ell)) approximation."""
    ell = _unit_level(instance, ell)
    start = time.perf_counter()
    objective = ChernoffLargeL(instance, ell)
    return _finish(
        objective, maximize(objective, settings=settings, deadline=deadline), start
    )


def solve_poisson_small_tail(
    instance, ell=None, delta=None, settings=None, deadline=None
):
    """Poisson surrogate for ell-unit auctions whose bidders all have Pr[v > 0] <= delta."""
    settings = settings or SolverSettings()
    ell = _unit_level(instance, ell)
    delta = settings.small_tail_delta if delta is None else delta
    heaviest = float(instance.point_tails(strict=True)[0].max())
    if heaviest > delta + 1e-12:
        raise PreconditionError(
            f"a bidder has Pr[v > 0] = {heaviest!r} above delta = {delta!r}"
        )
    start = time.perf_counter()
    objective = PoissonSmallTail(instance, ell)
    return _finish(
        objective, maximize(objective, settings=settings, deadline=deadline), start
    )


SOLVERS = {
    "alg1": solve_alg1,
    "practical": solve_practical,
    "single_item": solve_single_item,
    "chernoff_large_l": solve_chernoff_large_l,
    "poisson_small_tail": solve_poisson_small_tail,
}


UNIT_SOLVERS = ("chernoff_large_l", "poisson_small_tail")


def solve(name, instance, settings=None, ell=None, deadline=None):
    try:
        solver = SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}, expected one of {sorted(SOLVERS)}")
    if ell is not None:
        if name not in UNIT_SOLVERS:
            raise PreconditionError(f"{name} does not take ell")
        return solver(instance, ell, settings=settings, deadline=deadline)
    return solver(instance, settings=settings, deadline=deadline)
