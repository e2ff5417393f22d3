"""Small statistical helpers shared by the Monte Carlo checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = ["Moments", "moments", "poisson_chi2", "covariance", "correlation", "within"]


@dataclass(frozen=True)
class Moments:
    n: int
    mean: float
    se_mean: float
    var: float
    se_var: float


def moments(x) -> Moments:
    """Sample mean and variance with their standard errors."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    m4 = float(((x - mean) ** 4).mean())
    # asymptotic variance of the sample variance: (mu4 - sigma^4) / n
    se_var = math.sqrt(max(m4 - var**2, 0.0) / n)
    return Moments(n, mean, math.sqrt(var / n), var, se_var)


def poisson_chi2(counts, lam: float, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Chi-square goodness of fit of integer ``counts`` against ``Poisson(lam)``.

    Cells ``0, 1, ..., K-1`` are kept while their expected size reaches
    ``min_expected``; everything from ``K`` on is one cell.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = len(counts)
    K = 0
    while n * stats.poisson.pmf(K, lam) >= min_expected and n * stats.poisson.sf(K, lam) >= min_expected:
        K += 1
    expected = np.append(n * stats.poisson.pmf(np.arange(K), lam), n * stats.poisson.sf(K - 1, lam))
    observed = np.append(np.bincount(np.minimum(counts, K), minlength=K + 1)[:K],
                         np.count_nonzero(counts >= K))
    stat, p = stats.chisquare(observed, expected)
    return float(stat), float(p), K


def covariance(x, y) -> tuple[float, float]:
    """Sample covariance and its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = (x - x.mean()) * (y - y.mean())
    return float(prod.sum() / (len(x) - 1)), float(prod.std(ddof=1) / math.sqrt(len(x)))


def correlation(x, y) -> tuple[float, float]:
    """Pearson correlation and its standard error under independence (``1/sqrt(n)``)."""
    r = float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])
    return r, 1.0 / math.sqrt(len(x))


def within(value: float, target: float, se: float, k: float = 3.0) -> bool:
    return abs(value - target) <= k * se
