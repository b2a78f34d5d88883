"""
Concave surrogates of the welfare integral.

Each objective acts on the free coordinates x_M only; fixed bidders (if any)
are included with probability 1 and ``assemble`` puts them back. Values and
gradients are sums over grid segments of segment length times a
per-threshold term of lam_t = sum_i x_i Pr[v_i > tau_t].
"""

import numpy as np

from bidder_selection.distributions import unit_weights
from bidder_selection.objectives import (
    h_cher_deriv,
    h_cher_lambda,
    h_pois_weighted,
    h_pois_weighted_deriv,
    poisson_binomial_pmf,
    poisson_pmf,
    poisson_tails,
)
from bidder_selection.welfare import InfeasibleSolution

PRACTICAL_POISSON = "PracticalPoisson"
ADJUSTED_POISSON_CHERNOFF = "AdjustedPoissonChernoff"
SINGLE_ITEM_CORE_TAIL = "SingleItemCoreTail"
CHERNOFF_LARGE_L = "ChernoffLargeL"
POISSON_SMALL_TAIL = "PoissonSmallTail"


class RelaxedObjective:

    variant = None

    def __init__(self, instance, budget, fix=None):
        self.instance = instance
        self.fix = fix
        fixed = list(fix.fixed) if fix else []
        self.fixed = np.array(fixed, dtype=int)
        self.free = np.setdiff1d(np.arange(instance.n), self.fixed)
        self.budget = budget
        self.lengths = instance.grid.segment_lengths
        self.tails = np.ascontiguousarray(instance.tail_matrix[:, self.free])

    @property
    def dimension(self):
        return len(self.free)

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise InfeasibleSolution(
                f"{self.variant} expects {self.dimension} coordinates, got {x.shape}"
            )
        return x

    def _lam(self, x):
        return self.tails @ x

    def value(self, x):
        return self.value_and_gradient(x)[0]

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x):
        x = self._check(x)
        terms, slopes = self._segment_terms(self._lam(x))
        value = float(terms @ self.lengths) + self._constant()
        return value, self.tails.T @ (self.lengths * slopes)

    def _constant(self):
        return 0.0

    def _segment_terms(self, lam):
        raise NotImplementedError

    def assemble(self, x):
        """Full-length solution with 1 on the fixed bidders."""
        full = np.zeros(self.instance.n)
        full[self.free] = self._check(x)
        full[self.fixed] = 1.0
        return full


class PracticalPoisson(RelaxedObjective):
    """sum_t length_t * H_pois(lam_t, w) over the full capped box."""

    variant = PRACTICAL_POISSON

    def __init__(self, instance, budget=None, weights=None):
        super().__init__(instance, instance.k if budget is None else budget)
        self.weights = instance.weights if weights is None else weights

    def _segment_terms(self, lam):
        return (
            h_pois_weighted(lam, self.weights),
            h_pois_weighted_deriv(lam, self.weights),
        )


class PoissonSmallTail(PracticalPoisson):

    variant = POISSON_SMALL_TAIL

    def __init__(self, instance, ell, budget=None):
        super().__init__(instance, budget, weights=unit_weights(ell, instance.n))
        self.ell = ell


class ChernoffLargeL(RelaxedObjective):
    """sum_t length_t * min(lam_t, ell)."""

    variant = CHERNOFF_LARGE_L

    def __init__(self, instance, ell, budget=None):
        super().__init__(instance, instance.k if budget is None else budget)
        self.ell = ell
        self.weights = unit_weights(ell, max(ell, instance.n))

    def _segment_terms(self, lam):
        return np.minimum(lam, self.ell), h_cher_deriv(lam, self.weights)


class AdjustedPoissonChernoff(RelaxedObjective):
    """
    Chernoff term H_cher(offset_t + lam_t, w) on segments below eta, where
    offset_t is the fixed bidders' tail mass, and the adjusted Poisson term
    G_pois on segments above it.
    """

    variant = ADJUSTED_POISSON_CHERNOFF

    def __init__(self, instance, fix):
        super().__init__(instance, instance.k - len(fix.fixed), fix)
        n = instance.n
        self.weights = np.asarray(instance.weights, dtype=np.float64)
        self.split = fix.eta_index
        fixed_tails = instance.tail_matrix[:, self.fixed]
        self.offset = fixed_tails[: self.split].sum(axis=1)
        self.fixed_pmf = poisson_binomial_pmf(fixed_tails[self.split :])
        size = len(self.fixed) + 1
        # prefix[j] = w_1 + ... + w_j; shifted[j, m-1] = w_{j+m}
        self.prefix = np.concatenate([[0.0], np.cumsum(self.weights)])[:size]
        padded = np.append(self.weights, np.zeros(size))
        self.shifted = np.array([padded[j : j + n] for j in range(size)])

    def adjusted_poisson_term(self, lam, pmf):
        """
        G_pois for one or more segments: sum_j Pr[Z_fix = j] * (w_1 + ... + w_j
        + sum_{m>=1} w_{j+m} Pr[Y >= m]) with Y ~ Pois(lam).
        """
        lam = np.asarray(lam, dtype=np.float64)
        inner = self.prefix + poisson_tails(lam, self.instance.n) @ self.shifted.T
        return np.sum(pmf * inner, axis=-1)

    def adjusted_poisson_slope(self, lam, pmf):
        lam = np.asarray(lam, dtype=np.float64)
        inner = poisson_pmf(lam, self.instance.n) @ self.shifted.T
        return np.sum(pmf * inner, axis=-1)

    def term_at(self, x, t):
        """Adjusted Poisson term of segment ``t`` (at or above eta) at x_M."""
        if t < self.split:
            raise ValueError(f"segment {t} lies below eta")
        x = self._check(x)
        return float(
            self.adjusted_poisson_term(self.tails[t] @ x, self.fixed_pmf[t - self.split])
        )

    def _segment_terms(self, lam):
        low, high = lam[: self.split] + self.offset, lam[self.split :]
        terms = np.concatenate(
            [
                h_cher_lambda(low, self.weights),
                self.adjusted_poisson_term(high, self.fixed_pmf),
            ]
        )
        slopes = np.concatenate(
            [
                h_cher_deriv(low, self.weights),
                self.adjusted_poisson_slope(high, self.fixed_pmf),
            ]
        )
        return terms, slopes


class SingleItemCoreTail(RelaxedObjective):
    """
    (1 - 1/k) eta + sum over segments above eta of
    length_t * (r_t + (1 - r_t)(1 - exp(-lam_t))).
    """

    variant = SINGLE_ITEM_CORE_TAIL

    def __init__(self, instance, fix):
        super().__init__(instance, instance.k - len(fix.fixed), fix)
        self.split = fix.eta_index
        fixed_tails = instance.tail_matrix[self.split :, self.fixed]
        self.core = 1.0 - np.prod(1.0 - fixed_tails, axis=1)
        self.eta = fix.eta

    def _constant(self):
        return (1.0 - 1.0 / self.instance.k) * self.eta

    def _segment_terms(self, lam):
        terms = np.zeros_like(lam)
        slopes = np.zeros_like(lam)
        high = lam[self.split :]
        miss = (1.0 - self.core) * np.exp(-high)
        terms[self.split :] = self.core + (1.0 - self.core) * -np.expm1(-high)
        slopes[self.split :] = miss
        return terms, slopes


def objective_value(objective, x):
    return objective.value(x)


def objective_gradient(objective, x):
    return objective.gradient(x)
