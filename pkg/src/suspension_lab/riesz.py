"""Riesz products over the tower frequencies and exact autocorrelations.

The maximal spectral type of the tower map is the Riesz product
``prod_j (1 + cos 2 pi n_j t)``.  Because ``m_j >= 3`` the frequencies are
dissociated: each integer has at most one signed representation
``sum_j eps_j n_j`` with ``eps_j in {-1, 0, 1}``, and its Fourier coefficient is
``2^-(number of nonzero eps_j)``.  Coefficients are exact ``Fraction`` values.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .odometer import GrowthSpec, Rectangle, RegionSet

__all__ = [
    "LevelTooLarge",
    "OutOfRange",
    "GridTooCoarse",
    "RieszCoefficients",
    "partial_coeffs",
    "generalized_coeffs",
    "signed_digits",
    "coeff_at",
    "convolution_power_coeffs",
    "dissociation_collisions",
    "default_grid_size",
    "partial_density",
    "grid_density",
    "overlap",
    "SingularityReport",
    "singularity_evidence",
    "write_density_csv",
    "AutocorrValue",
    "autocorr_exact",
    "nonmixing_sequence",
]

MAX_COEFF_LEVEL = 18
MAX_GRID_LEVEL = 24


class LevelTooLarge(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class RieszCoefficients:
    level: int
    coeffs: dict

    def __getitem__(self, freq: int) -> Fraction:
        return self.coeffs.get(freq, Fraction(0))

    def __len__(self):
        return len(self.coeffs)

    def total(self) -> Fraction:
        return self.coeffs.get(0, Fraction(0))

    def is_symmetric(self) -> bool:
        return all(self.coeffs.get(-k) == c for k, c in self.coeffs.items())

    def to_dict(self) -> dict:
        return {"level": self.level,
                "coeffs": {str(k): str(v) for k, v in sorted(self.coeffs.items())}}


def generalized_coeffs(spec: GrowthSpec, J: int, weight: Fraction,
                       max_level: int = MAX_COEFF_LEVEL) -> RieszCoefficients:
    """Expand ``prod_{j<J} (1 + 2 weight cos 2 pi n_j t)`` exactly.

    Each factor contributes ``1`` at frequency 0 and ``weight`` at ``+-n_j``.
    """
    if J < 0:
        raise ValueError("J must be >= 0")
    if J > max_level:
        raise LevelTooLarge(f"J={J} exceeds the coefficient cap {max_level}")
    weight = Fraction(weight)
    # integer numerators over the common denominator weight.denominator ** J
    a, b = weight.numerator, weight.denominator
    nums = {0: 1}
    for j in range(J):
        nj = spec.n(j)
        nxt: dict = {}
        for k, c in nums.items():
            nxt[k] = nxt.get(k, 0) + c * b
            nxt[k + nj] = nxt.get(k + nj, 0) + c * a
            nxt[k - nj] = nxt.get(k - nj, 0) + c * a
        nums = nxt
    den = b**J
    coeffs = {k: Fraction(c, den) for k, c in nums.items() if c}
    return RieszCoefficients(J, coeffs)


def partial_coeffs(spec: GrowthSpec, J: int, max_level: int = MAX_COEFF_LEVEL) -> RieszCoefficients:
    """Fourier coefficients of ``prod_{j<J} (1 + cos 2 pi n_j t)``."""
    return generalized_coeffs(spec, J, Fraction(1, 2), max_level)


def signed_digits(spec: GrowthSpec, m: int, J: int) -> list[int] | None:
    """Greedy ``eps`` with ``m = sum_{j<J} eps_j n_j``, or ``None``.

    With ``m_j >= 3`` the lower frequencies sum to less than ``n_j / 2``, so at
    each level from the top the digit is forced.
    """
    reach = [0]
    for j in range(J):
        reach.append(reach[-1] + spec.n(j))
    eps = [0] * J
    r = m
    for j in range(J - 1, -1, -1):
        if r > reach[j]:
            eps[j], r = 1, r - spec.n(j)
        elif r < -reach[j]:
            eps[j], r = -1, r + spec.n(j)
    return eps if r == 0 else None


def coeff_at(spec: GrowthSpec, m: int, J: int | None = None) -> Fraction:
    """Riesz coefficient at frequency ``m``.

    Without ``J`` this is the coefficient of the infinite product, which the
    partial product of any level ``J`` with ``sum_{j<J} n_j >= |m|`` already
    has.  With ``J`` it is the level-``J`` partial coefficient, defined for
    ``|m| < n_J``.
    """
    if J is None:
        J, reach = 0, 0
        while reach < abs(m):
            reach += spec.n(J)
            J += 1
    elif abs(m) >= spec.n(J):
        raise OutOfRange(f"|{m}| >= n_{J} = {spec.n(J)}")
    eps = signed_digits(spec, m, J)
    if eps is None:
        return Fraction(0)
    return Fraction(1, 1 << sum(1 for e in eps if e))


def convolution_power_coeffs(spec: GrowthSpec, p: int, J: int,
                             max_level: int = MAX_COEFF_LEVEL) -> RieszCoefficients:
    """Coefficients of the ``p``-fold self-convolution of the level-``J`` product.

    These are the ``p``-th powers of the ``p = 1`` coefficients; the result is
    checked against the generalised product ``prod (1 + 2^(1-p) cos 2 pi n_j t)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    base = partial_coeffs(spec, J, max_level)
    powered = {k: c**p for k, c in base.coeffs.items()}
    direct = generalized_coeffs(spec, J, Fraction(1, 2**p), max_level)
    if powered != direct.coeffs:
        raise AssertionError("convolution power disagrees with the generalised Riesz product")
    return RieszCoefficients(J, powered)


def dissociation_collisions(spec: GrowthSpec, J: int) -> int:
    """Number of coinciding sums among all ``3^J`` signed vectors ``eps``."""
    sums = np.zeros(1, dtype=object if spec.n(J) > 2**62 else np.int64)
    for j in range(J):
        nj = spec.n(j)
        sums = np.concatenate([sums, sums + nj, sums - nj])
    return len(sums) - len(np.unique(sums))


# ---------------------------------------------------------------------------
# densities on a grid
# ---------------------------------------------------------------------------


def default_grid_size(spec: GrowthSpec, J: int) -> int:
    return 1 << (math.ceil(math.log2(2 * spec.n(J))) + 2)


def partial_density(spec: GrowthSpec, p: int, J: int, t: np.ndarray) -> np.ndarray:
    """``prod_{j<J} (1 + 2^(1-p) cos 2 pi n_j t)`` evaluated at arbitrary ``t``."""
    a = 2.0 ** (1 - p)
    out = np.ones_like(t, dtype=float)
    for j in range(J):
        out *= 1.0 + a * np.cos(2 * np.pi * np.mod(spec.n(j) * t, 1.0))
    return out


def grid_density(spec: GrowthSpec, p: int, J: int, k: np.ndarray, N: int) -> np.ndarray:
    """Density at ``t = k / N``; phases ``n_j k mod N`` are reduced in integers."""
    a = 2.0 ** (1 - p)
    out = np.ones(len(k))
    k = np.asarray(k, dtype=np.int64)
    for j in range(J):
        r = spec.n(j) % N
        if r * N < 1 << 63:
            phase = (r * k) % N
        else:
            phase = np.array([(r * int(x)) % N for x in k], dtype=np.int64)
        out *= 1.0 + a * np.cos(2 * np.pi * (phase / N))
    return out


def _grid_chunks(N: int, chunk: int = 1 << 20) -> Iterable[np.ndarray]:
    for start in range(0, N, chunk):
        yield np.arange(start, min(start + chunk, N), dtype=np.int64)


def _check_grid(spec: GrowthSpec, J: int, N: int) -> None:
    if J > MAX_GRID_LEVEL:
        raise LevelTooLarge(f"J={J} exceeds the grid cap {MAX_GRID_LEVEL}")
    if N & (N - 1) or N < 2 * spec.n(J):
        raise GridTooCoarse(f"grid size {N} must be a power of two >= 2 n_J = {2 * spec.n(J)}")


def overlap(spec: GrowthSpec, p: int, q: int, J: int, grid_size: int | None = None) -> float:
    """``int_0^1 min(f_p, f_q) dt`` by the (periodic) trapezoid rule."""
    N = default_grid_size(spec, J) if grid_size is None else grid_size
    _check_grid(spec, J, N)
    total = 0.0
    for k in _grid_chunks(N):
        total += float(np.minimum(grid_density(spec, p, J, k, N), grid_density(spec, q, J, k, N)).sum())
    # endpoints coincide by periodicity, so the trapezoid rule is the plain mean
    return total / N


def write_density_csv(path, spec: GrowthSpec, p: int, q: int, J: int,
                      grid_size: int | None = None) -> int:
    N = default_grid_size(spec, J) if grid_size is None else grid_size
    _check_grid(spec, J, N)
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", f"f_{p}", f"f_{q}"])
        for k in _grid_chunks(N):
            fp, fq = grid_density(spec, p, J, k, N), grid_density(spec, q, J, k, N)
            w.writerows(zip((k / N).tolist(), fp.tolist(), fq.tolist()))
            rows += len(k)
    return rows


@dataclass(frozen=True)
class SingularityReport:
    p: int
    q: int
    levels: tuple[int, ...]
    divergence: tuple[Fraction, ...]
    overlaps: tuple[float, ...]
    grid_sizes: tuple[int, ...]

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.overlaps, self.overlaps[1:]))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "levels": list(self.levels),
            "divergence": [str(s) for s in self.divergence],
            "divergence_exact": True,
            "overlap": list(self.overlaps),
            "grid": list(self.grid_sizes),
            "monotone": self.monotone,
            "note": "evidence only: S_J grows linearly in J and the density overlap "
                    "decays; mutual singularity itself is a theorem",
        }


def singularity_evidence(spec: GrowthSpec, p: int, q: int, levels: int | Sequence[int],
                         grid_size: int | None = None) -> SingularityReport:
    """Divergence witness ``S_J = sum_{j<J} (2^(1-p) - 2^(1-q))^2`` and grid overlaps."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    levels = (levels,) if isinstance(levels, int) else tuple(levels)
    step = (Fraction(2) ** (1 - p) - Fraction(2) ** (1 - q)) ** 2
    div, ovl, grids = [], [], []
    for J in levels:
        N = default_grid_size(spec, J) if grid_size is None else grid_size
        div.append(sum((step for _ in range(J)), Fraction(0)))
        ovl.append(1.0 if p == q else overlap(spec, p, q, J, N))
        grids.append(N)
    return SingularityReport(p, q, levels, tuple(div), tuple(ovl), tuple(grids))


# ---------------------------------------------------------------------------
# autocorrelations on the tower
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AutocorrValue:
    lag: int
    value: Fraction
    tail_bound: Fraction
    mass: Fraction

    @property
    def normalized(self) -> Fraction:
        return self.value / self.mass

    def to_dict(self) -> dict:
        return {"lag": self.lag, "value": str(self.value), "normalized": str(self.normalized),
                "tail_bound": str(self.tail_bound), "exact": self.tail_bound == 0}


def autocorr_exact(A: RegionSet, lag: int, spec: GrowthSpec, method: str = "image",
                   K: int | None = None) -> AutocorrValue:
    """``mu(A & T^-lag A)``, the covariance of ``N(A)`` and ``N(A) o T_*^lag``.

    ``method="image"`` uses ``mu(T^lag A & A)`` and is exact.  ``"preimage"``
    iterates the symbolic inverse; its value is a lower bound and
    ``tail_bound`` caps the shortfall.
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if isinstance(A, Rectangle):
        A = RegionSet((A,))
    if method == "image":
        moved = A.image(spec, lag)
    elif method == "preimage":
        moved = A.preimage(spec, lag, K)
    else:
        raise ValueError(f"unknown method {method!r}")
    both = A.intersect(moved)
    return AutocorrValue(lag, both.mass, both.tail_bound, A.mass)


def nonmixing_sequence(A: RegionSet, spec: GrowthSpec, max_j: int, method: str = "image") -> list[AutocorrValue]:
    """Autocorrelations of ``A`` along the lags ``n_0, ..., n_max_j``."""
    return [autocorr_exact(A, spec.n(j), spec, method) for j in range(max_j + 1)]
