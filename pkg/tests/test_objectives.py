import math

import numpy as np
import pytest
from scipy import stats

from bidder_selection.objectives import (
    clamp_probabilities,
    count_tails,
    h_ber,
    h_ber_weighted,
    h_cher,
    h_cher_deriv,
    h_cher_lambda,
    h_cher_weighted,
    h_pois,
    h_pois_deriv,
    h_pois_weighted,
    h_pois_weighted_deriv,
    poisson_binomial_pmf,
    poisson_pmf,
    total_variation_pb_vs_poisson,
)


@pytest.mark.parametrize(
    "q,expected",
    [
        ([0.5, 0.5], [0.25, 0.5, 0.25]),
        ([1.0, 1.0, 0.0], [0, 0, 1, 0]),
        ([0.2, 0.3, 0.5], [0.28, 0.47, 0.22, 0.03]),
        ([], [1.0]),
    ],
)
def test_poisson_binomial_pmf(q, expected):
    np.testing.assert_allclose(poisson_binomial_pmf(q), expected, atol=1e-15)


def test_poisson_binomial_pmf_batched():
    q = np.array([[[0.5, 0.5], [0.2, 0.3]], [[1.0, 0.0], [0.0, 0.0]]])

    pmf = poisson_binomial_pmf(q)

    assert pmf.shape == (2, 2, 3)
    np.testing.assert_allclose(pmf[0, 1], [0.56, 0.38, 0.06])
    np.testing.assert_allclose(pmf[1, 0], [0, 1, 0])
    np.testing.assert_allclose(pmf.sum(axis=-1), 1.0)


def test_poisson_binomial_pmf_matches_binomial():
    pmf = poisson_binomial_pmf(np.full(40, 0.3))

    np.testing.assert_allclose(pmf, stats.binom.pmf(np.arange(41), 40, 0.3), atol=1e-14)


def test_clamp_probabilities():
    np.testing.assert_array_equal(clamp_probabilities([-1e-13, 1 + 1e-13]), [0, 1])
    with pytest.raises(ValueError):
        clamp_probabilities([1.1])


def test_count_tails():
    np.testing.assert_allclose(
        count_tails(np.array([0.28, 0.47, 0.22, 0.03])), [1.0, 0.72, 0.25, 0.03]
    )


@pytest.mark.parametrize(
    "q,ell,expected",
    [
        ([0.5, 0.5], 1, 0.75),
        ([0.5, 0.5], 2, 1.0),
        ([0.2, 0.3, 0.5], 2, 0.97),
        ([0.2, 0.3, 0.5], 5, 1.0),
    ],
)
def test_h_ber(q, ell, expected):
    assert h_ber(q, ell) == pytest.approx(expected)


def test_h_ber_rejects_ell():
    with pytest.raises(ValueError):
        h_ber([0.5], 0)


def test_h_ber_weighted():
    q = [0.2, 0.3, 0.5]

    assert h_ber_weighted(q, [1, 0.2, 0]) == pytest.approx(0.77)
    assert h_ber_weighted(q, [1, 1, 1]) == pytest.approx(h_ber(q, 3))
    assert h_ber_weighted(q, [1, 0, 0]) == pytest.approx(h_ber(q, 1))


def test_h_ber_weighted_telescopes(rng):
    q = rng.random(8)
    w = np.sort(rng.random(8))[::-1]
    increments = w - np.append(w[1:], 0.0)

    expected = sum(increments[ell - 1] * h_ber(q, ell) for ell in range(1, 9))

    assert h_ber_weighted(q, w) == pytest.approx(expected)


@pytest.mark.parametrize(
    "q,ell,expected",
    [([0.3, 0.4], 1, 0.7), ([0.8, 0.8, 0.8], 2, 2.0), ([0.1], 3, 0.1)],
)
def test_h_cher(q, ell, expected):
    assert h_cher(q, ell) == pytest.approx(expected)


def test_h_cher_weighted():
    assert h_cher_weighted([0.5, 0.5], [1, 0.2]) == pytest.approx(1.0)
    assert h_cher_lambda(2.5, [1, 0.2, 0.2]) == pytest.approx(0.8 + 0 + 0.2 * 2.5)


@pytest.mark.parametrize(
    "lam,expected",
    [(0.0, 1.0), (0.5, 1.0), (1.0, 0.2), (2.5, 0.2), (3.0, 0.0), (10.0, 0.0)],
)
def test_h_cher_deriv(lam, expected):
    assert h_cher_deriv(lam, [1, 0.2, 0.2]) == expected


@pytest.mark.parametrize(
    "lam,ell,expected",
    [
        (0.0, 1, 0.0),
        (0.0, 4, 0.0),
        (1.0, 1, 1 - math.exp(-1)),
        (2.0, 2, 2 - 4 * math.exp(-2)),
    ],
)
def test_h_pois(lam, ell, expected):
    assert h_pois(lam, ell) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "lam,ell,expected",
    [
        (0.0, 3, 1.0),
        (1.0, 1, math.exp(-1)),
        (2.0, 2, 3 * math.exp(-2)),
    ],
)
def test_h_pois_deriv(lam, ell, expected):
    assert h_pois_deriv(lam, ell) == pytest.approx(expected, abs=1e-12)


def test_h_pois_matches_truncated_expectation():
    lam, ell = 3.7, 5
    j = np.arange(200)
    expected = np.sum(np.minimum(j, ell) * stats.poisson.pmf(j, lam))

    assert h_pois(lam, ell) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("ell", [1, 3, 10])
def test_h_pois_deriv_matches_finite_difference(ell):
    h = 1e-5
    for lam in np.linspace(h, 100, 41):
        numeric = (h_pois(lam + h, ell) - h_pois(lam - h, ell)) / (2 * h)
        assert abs(h_pois_deriv(lam, ell) - numeric) <= 1e-6


def test_h_pois_deriv_is_non_increasing():
    values = h_pois_deriv(np.linspace(0, 30, 301), 4)

    assert np.all(np.diff(values) <= 1e-15)


def test_h_pois_weighted():
    assert h_pois_weighted(0.0, [1, 0.2]) == 0.0
    assert h_pois_weighted(1.3, [1, 0, 0]) == pytest.approx(h_pois(1.3, 1))
    assert h_pois_weighted(1.0, [1, 0.2]) == pytest.approx(
        0.8 * h_pois(1.0, 1) + 0.2 * h_pois(1.0, 2)
    )
    assert h_pois_weighted_deriv(0.0, [1, 0.2]) == pytest.approx(1.0)


def test_h_pois_weighted_vectorized():
    lam = np.array([[0.5, 1.0], [2.0, 4.0]])

    values = h_pois_weighted(lam, [1, 0.5, 0.25])

    assert values.shape == (2, 2)
    assert values[1, 0] == pytest.approx(h_pois_weighted(2.0, [1, 0.5, 0.25]))


def test_poisson_pmf_recurrence_and_log_space():
    np.testing.assert_allclose(
        poisson_pmf(3.0, 10), stats.poisson.pmf(np.arange(10), 3.0), rtol=1e-12
    )
    large = poisson_pmf(np.array([800.0]), 801)

    assert np.all(np.isfinite(large))
    assert large[0, 800] == pytest.approx(stats.poisson.pmf(800, 800.0), rel=1e-9)


def test_poisson_pmf_rejects_negative_mean():
    with pytest.raises(ValueError):
        poisson_pmf(-1.0, 3)


@pytest.mark.parametrize(
    "q,bound",
    [
        (np.zeros(5), 0.0),
        (np.array([0.1]), 0.1),
        (np.full(20, 0.05), 0.05),
    ],
)
def test_total_variation_pb_vs_poisson(q, bound):
    assert total_variation_pb_vs_poisson(q) <= bound + 1e-12


def test_total_variation_bound_on_random_vectors(rng):
    for _ in range(50):
        q = rng.random(int(rng.integers(1, 30))) * 0.2
        assert total_variation_pb_vs_poisson(q) <= q.max() + 1e-12
