import numpy as np
import pytest

from suspension_lab.stats import correlation, covariance, moments, poisson_chi2, within


def test_moments_of_constant():
    mo = moments([2, 2, 2, 2])
    assert mo.mean == 2 and mo.var == 0 and mo.se_mean == 0 and mo.se_var == 0


def test_poisson_chi2_accepts_poisson():
    x = np.random.default_rng(0).poisson(1.5, 50_000)
    _, p, cells = poisson_chi2(x, 1.5)
    assert p > 1e-3
    assert cells >= 5


def test_poisson_chi2_rejects_wrong_rate():
    x = np.random.default_rng(1).poisson(1.5, 50_000)
    _, p, _ = poisson_chi2(x, 1.6)
    assert p < 1e-6


def test_covariance_and_correlation():
    rng = np.random.default_rng(2)
    x = rng.normal(size=20_000)
    y = x + rng.normal(size=20_000)
    cov, se = covariance(x, y)
    assert within(cov, 1.0, se)
    r, se_r = correlation(x, rng.normal(size=20_000))
    assert within(r, 0.0, se_r)
    assert se_r == pytest.approx(1 / np.sqrt(20_000))


def test_within():
    assert within(1.0, 1.2, 0.1)
    assert not within(1.0, 1.4, 0.1)
