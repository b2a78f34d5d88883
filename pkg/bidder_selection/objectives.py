"""
Per-threshold objective kernels.

Every kernel works on the last axis and broadcasts over leading axes, so a
whole threshold grid (or a batch of candidate sets) is one call. ``q`` holds
Bernoulli success probabilities, ``lam`` Poisson means and ``w`` position
weights (1-indexed in the docstrings, 0-indexed in the arrays).
"""

import numpy as np
from scipy import special, stats

CLAMP_TOLERANCE = 1e-12

LOG_SPACE_THRESHOLD = 700.0


def clamp_probabilities(q):
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < -CLAMP_TOLERANCE) or np.any(q > 1 + CLAMP_TOLERANCE):
        raise ValueError(f"probabilities outside [0, 1]: {q}")
    return np.clip(q, 0.0, 1.0)


def poisson_binomial_pmf(q):
    """Pr[Z = j] for Z = sum of independent Ber(q_i), j = 0..n, by exact DP."""
    q = clamp_probabilities(q)
    n = q.shape[-1]
    pmf = np.zeros(q.shape[:-1] + (n + 1,))
    pmf[..., 0] = 1.0
    for i in range(n):
        qi = q[..., i, None]
        moved = pmf[..., : i + 1] * qi
        pmf[..., : i + 1] *= 1.0 - qi
        pmf[..., 1 : i + 2] += moved
    return pmf


def count_tails(pmf):
    """Pr[Z >= j] for j = 0..n, summed from the top so small tails keep precision."""
    return np.cumsum(pmf[..., ::-1], axis=-1)[..., ::-1]


def fit_weights(w, size):
    """Truncate or zero-pad ``w`` to ``size`` entries."""
    w = np.asarray(w, dtype=np.float64)
    if len(w) >= size:
        return w[:size]
    return np.pad(w, (0, size - len(w)))


def weight_increments(w):
    """w_l - w_{l+1} with w_{n+1} = 0."""
    w = np.asarray(w, dtype=np.float64)
    return w - np.append(w[1:], 0.0)


def h_ber(q, ell):
    """E[min(Z, ell)] = sum_{j=1..ell} Pr[Z >= j]."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    tails = count_tails(poisson_binomial_pmf(q))
    return tails[..., 1 : ell + 1].sum(axis=-1)


def h_ber_from_tails(tails, w):
    return tails[..., 1:] @ fit_weights(w, tails.shape[-1] - 1)


def h_ber_weighted(q, w):
    """sum_j w_j Pr[Z >= j], equal to sum_l (w_l - w_{l+1}) h_ber(q, l)."""
    return h_ber_from_tails(count_tails(poisson_binomial_pmf(q)), w)


def h_cher(q, ell):
    return np.minimum(np.sum(q, axis=-1), ell)


def h_cher_lambda(lam, w):
    w = np.asarray(w, dtype=np.float64)
    levels = np.arange(1, len(w) + 1)
    lam = np.asarray(lam, dtype=np.float64)
    return np.minimum(lam[..., None], levels) @ weight_increments(w)


def h_cher_weighted(q, w):
    return h_cher_lambda(np.sum(q, axis=-1), w)


def h_cher_deriv(lam, w):
    """
    d/dlam of sum_l (w_l - w_{l+1}) min(lam, l), which is w_{floor(lam)+1}.
    At a kink lam = l this picks the right derivative, 0 for ell-unit weights.
    """
    w = np.append(np.asarray(w, dtype=np.float64), 0.0)
    lam = np.asarray(lam, dtype=np.float64)
    index = np.minimum(np.floor(lam), len(w) - 1).astype(int)
    return w[index]


def poisson_pmf(lam, size):
    """Pr[Y = j] for Y ~ Pois(lam), j = 0..size-1."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError(f"Poisson means must be >= 0: {lam}")
    terms = np.empty(lam.shape + (size,))
    if not size:
        return terms
    small = np.minimum(lam, LOG_SPACE_THRESHOLD)
    terms[..., 0] = np.exp(-small)
    for j in range(1, size):
        terms[..., j] = terms[..., j - 1] * small / j
    large = lam > LOG_SPACE_THRESHOLD
    if np.any(large):
        j = np.arange(size)
        big = lam[large][..., None]
        terms[large] = np.exp(j * np.log(big) - big - special.gammaln(j + 1))
    return terms


def poisson_tails(lam, size):
    """Pr[Y >= j] for j = 1..size, the regularized lower incomplete gamma P(j, lam)."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError(f"Poisson means must be >= 0: {lam}")
    return special.gammainc(np.arange(1, size + 1), lam[..., None])


def h_pois(lam, ell):
    """E[min(Y, ell)] = ell - sum_{j<ell} Pr[Y = j] (ell - j)."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    return poisson_tails(lam, ell).sum(axis=-1)


def h_pois_deriv(lam, ell):
    """Pr[Y <= ell - 1]."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    return poisson_pmf(lam, ell).sum(axis=-1)


def h_pois_weighted(lam, w):
    return poisson_tails(lam, len(w)) @ np.asarray(w, dtype=np.float64)


def h_pois_weighted_deriv(lam, w):
    return poisson_pmf(lam, len(w)) @ np.asarray(w, dtype=np.float64)


def total_variation_pb_vs_poisson(q):
    """
    sum_j |Pr[Z = j] - Pr[Y = j]| over j <= n plus Pr[Y > n], with
    Y ~ Pois(sum q).
    """
    q = clamp_probabilities(q)
    n = q.shape[-1]
    lam = q.sum()
    pb = poisson_binomial_pmf(q)
    return float(np.abs(pb - poisson_pmf(lam, n + 1)).sum() + stats.poisson.sf(n, lam))
