"""Exact expectations on a finite Poisson ground set.

The ground set has atoms ``0..m-1`` with masses ``lambda_i``; a configuration
is a count vector of independent ``Poisson(lambda_i)`` coordinates.  Expectations
of polynomial observables are computed by enumerating every count vector up to
``count_cap`` per coordinate.  The neglected remainder is bounded by a
polynomial majorant of ``|F|`` paired with factorial moments of the Poisson
tails, so every reported value carries a rigorous truncation bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .fock import (
    I1,
    Const,
    Count,
    Observable,
    Product,
    Scale,
    SimpleFunction,
    Sum,
    diff1,
)

__all__ = [
    "EnumerationTooLarge",
    "AtomSet",
    "FiniteGround",
    "Expectation",
    "MeckeIdentity",
    "exact_expect",
    "oracle_mecke",
    "oracle_projection",
    "oracle_chaos_orthogonality",
]

MAX_STATES = 21**6


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AtomSet:
    """Subset of ground atoms, usable as a region in observables."""

    indices: frozenset
    masses: tuple

    def contains(self, x) -> bool:
        return x in self.indices

    @property
    def mass(self):
        return sum((self.masses[i] for i in self.indices), Fraction(0))

    def intersect(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.indices & other.indices, self.masses)

    def __bool__(self):
        return bool(self.indices)

    def __repr__(self):
        return f"AtomSet({sorted(self.indices)})"


def _stirling2(a: int) -> list[int]:
    """Row ``S(a, 0..a)`` of Stirling numbers of the second kind."""
    row = [1]
    for n in range(1, a + 1):
        new = [0] * (n + 1)
        for k in range(1, n + 1):
            new[k] = k * (row[k] if k < len(row) else 0) + row[k - 1]
        row = new
    return row


@dataclass(frozen=True)
class FiniteGround:
    masses: tuple
    count_cap: int = 20

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(Fraction(x) for x in self.masses))
        if any(x <= 0 for x in self.masses):
            raise ValueError("masses must be positive")
        if self.count_cap < 1:
            raise ValueError("count_cap must be >= 1")

    @property
    def size(self) -> int:
        return len(self.masses)

    @property
    def tail_bound(self) -> float:
        """``sum_i P(N_i > count_cap)``."""
        return float(sum(stats.poisson.sf(self.count_cap, float(l)) for l in self.masses))

    def atoms(self, indices: Iterable[int]) -> AtomSet:
        idx = frozenset(int(i) for i in indices)
        if not idx <= set(range(self.size)):
            raise IndexError(f"atom index out of range: {sorted(idx)}")
        return AtomSet(idx, self.masses)

    def count(self, indices: Iterable[int]) -> Count:
        return Count(self.atoms(indices))

    def function(self, values: Mapping[int, object]) -> SimpleFunction:
        """Simple function with one term per listed atom."""
        return SimpleFunction(tuple((c, self.atoms([i])) for i, c in sorted(values.items()) if c != 0))

    def i1(self, values: Mapping[int, object]) -> I1:
        return I1(self.function(values))

    # moments -----------------------------------------------------------

    def moment(self, i: int, a: int) -> float:
        """``E[N_i^a]`` via Touchard polynomials."""
        lam = float(self.masses[i])
        return float(sum(s * lam**k for k, s in enumerate(_stirling2(a))))

    def tail_moment(self, i: int, a: int) -> float:
        """``E[N_i^a 1{N_i > count_cap}]`` via factorial moments.

        ``n^a = sum_k S(a,k) n(n-1)...(n-k+1)`` and the falling factorial moment
        over ``{N > K}`` equals ``lambda^k P(N >= K + 1 - k)``.
        """
        lam = float(self.masses[i])
        K = self.count_cap
        total = 0.0
        for k, s in enumerate(_stirling2(a)):
            if s:
                total += s * lam**k * float(stats.poisson.sf(K - k, lam))
        return total


@dataclass(frozen=True)
class Expectation:
    value: float
    bound: float
    states: int

    def to_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "exact": True, "states": self.states}


# ---------------------------------------------------------------------------
# vectorised evaluation and majorants
# ---------------------------------------------------------------------------


def _fvec(f: SimpleFunction, m: int) -> np.ndarray:
    v = np.zeros(m)
    for c, r in f.terms:
        for i in r.indices:
            v[i] = float(c)
    return v


def _eval_grid(F: Observable, counts: np.ndarray) -> np.ndarray:
    m = counts.shape[1]
    if isinstance(F, Const):
        return np.full(len(counts), float(F.value))
    if isinstance(F, Count):
        idx = sorted(F.region.indices)
        return counts[:, idx].sum(axis=1).astype(float)
    if isinstance(F, I1):
        return counts @ _fvec(F.f, m) - float(F.f.integral)
    if isinstance(F, Sum):
        out = np.zeros(len(counts))
        for t in F.terms:
            out = out + _eval_grid(t, counts)
        return out
    if isinstance(F, Product):
        out = np.ones(len(counts))
        for g in F.factors:
            out = out * _eval_grid(g, counts)
        return out
    if isinstance(F, Scale):
        return float(F.c) * _eval_grid(F.inner, counts)
    raise TypeError(f"not an observable: {F!r}")


# polynomials with non-negative coefficients: exponent tuple -> coefficient


def _padd(p, q):
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0.0) + c
    return out


def _pmul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def _majorant(F: Observable, m: int, offset: np.ndarray) -> dict:
    """Non-negative polynomial ``P`` with ``|F(n + offset)| <= P(n)`` for all ``n >= 0``."""
    zero = (0,) * m
    if isinstance(F, Const):
        return {zero: abs(float(F.value))}
    if isinstance(F, Count):
        p = {zero: float(sum(offset[i] for i in F.region.indices))}
        for i in F.region.indices:
            e = tuple(1 if j == i else 0 for j in range(m))
            p[e] = 1.0
        return p
    if isinstance(F, I1):
        v = np.abs(_fvec(F.f, m))
        p = {zero: float(v @ offset) + abs(float(F.f.integral))}
        for i in range(m):
            if v[i]:
                p[tuple(1 if j == i else 0 for j in range(m))] = float(v[i])
        return p
    if isinstance(F, Sum):
        p = {}
        for t in F.terms:
            p = _padd(p, _majorant(t, m, offset))
        return p
    if isinstance(F, Product):
        p = {zero: 1.0}
        for g in F.factors:
            p = _pmul(p, _majorant(g, m, offset))
        return p
    if isinstance(F, Scale):
        return {e: abs(float(F.c)) * c for e, c in _majorant(F.inner, m, offset).items()}
    raise TypeError(f"not an observable: {F!r}")


def _remainder_bound(ground: FiniteGround, majorant: dict) -> float:
    """Bound ``E[P(N) 1{some N_i > K}] <= sum_i E[P(N) 1{N_i > K}]``."""
    m = ground.size
    total = 0.0
    for e, c in majorant.items():
        if c == 0:
            continue
        full = [ground.moment(j, e[j]) for j in range(m)]
        for i in range(m):
            prod = ground.tail_moment(i, e[i])
            for j in range(m):
                if j != i:
                    prod *= full[j]
            total += c * prod
    return total


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def _pmf_table(ground: FiniteGround) -> np.ndarray:
    n = np.arange(ground.count_cap + 1)
    return np.array([stats.poisson.pmf(n, float(l)) for l in ground.masses])


def _enumerate(ground: FiniteGround, fn: Callable[[np.ndarray], np.ndarray],
               max_states: int = MAX_STATES) -> tuple[float, int]:
    """``sum_n fn(n) P(N = n)`` over the truncated box, compensated and order-free.

    The box is swept in blocks indexed by the first coordinate; each block is
    summed with :func:`math.fsum` and the block totals are fsum-ed again, a
    fixed reduction tree.
    """
    m, K = ground.size, ground.count_cap
    states = (K + 1) ** m
    if states > max_states:
        raise EnumerationTooLarge(f"{states} states exceed the limit {max_states}")
    pmf = _pmf_table(ground)
    if m == 1:
        rest = np.zeros((1, 0), dtype=np.int64)
        rest_w = np.ones(1)
    else:
        rest = np.array(list(itertools.product(range(K + 1), repeat=m - 1)), dtype=np.int64)
        rest_w = np.ones(len(rest))
        for j in range(1, m):
            rest_w = rest_w * pmf[j][rest[:, j - 1]]
    partials = []
    for n0 in range(K + 1):
        block = np.column_stack([np.full(len(rest), n0, dtype=np.int64), rest])
        w = pmf[0][n0] * rest_w
        partials.append(math.fsum((fn(block) * w).tolist()))
    return math.fsum(partials), states


def _offset(ground: FiniteGround, extra: Sequence[int]) -> np.ndarray:
    off = np.zeros(ground.size, dtype=np.int64)
    for y in extra:
        off[y] += 1
    return off


def exact_expect(F: Observable, ground: FiniteGround, extra: Sequence[int] = (),
                 max_states: int = MAX_STATES) -> Expectation:
    """``E[F(N + sum_{y in extra} e_y)]`` with a truncation bound."""
    off = _offset(ground, extra)
    value, states = _enumerate(ground, lambda n: _eval_grid(F, n + off), max_states)
    bound = _remainder_bound(ground, _majorant(F, ground.size, off))
    return Expectation(value, bound, states)


def _expect_difference(F: Observable, ground: FiniteGround, ys: Sequence[int],
                       max_states: int = MAX_STATES) -> Expectation:
    """``E[D^n_{ys} F]`` by inclusion-exclusion over shifted evaluations."""
    n = len(ys)
    subsets = [
        ((-1) ** (n - size), _offset(ground, subset))
        for size in range(n + 1)
        for subset in itertools.combinations(ys, size)
    ]

    def fn(counts):
        out = np.zeros(len(counts))
        for sign, off in subsets:
            out = out + sign * _eval_grid(F, counts + off)
        return out

    value, states = _enumerate(ground, fn, max_states)
    bound = sum(_remainder_bound(ground, _majorant(F, ground.size, off)) for _, off in subsets)
    return Expectation(value, bound, states)


@dataclass(frozen=True)
class MeckeIdentity:
    lhs: float
    rhs: float
    difference: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.difference <= self.bound + 1e-12 * max(1.0, abs(self.lhs))

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "diff": self.difference,
                "bound": self.bound, "exact": True, "holds": self.holds}


def oracle_mecke(ground: FiniteGround, h: Mapping[int, Observable] | Callable[[int], Observable] | None = None,
                 g: Observable | None = None, f: Mapping[int, object] | None = None) -> MeckeIdentity:
    """Both sides of the discrete Mecke identity.

    ``E[sum_i N_i h_i(N)] = sum_i lambda_i E[h_i(N + e_i)]``.  Pass ``h`` as a
    mapping or callable from atom index to observable, or the product form
    ``h_i = f_i * g``.
    """
    m = ground.size
    if h is None:
        if g is None or f is None:
            raise ValueError("give h, or both g and f")
        h = {i: Scale(f[i], g) for i in f}
    hs = dict(h) if isinstance(h, Mapping) else {i: h(i) for i in range(m)}
    bound = 0.0
    lhs_terms, rhs_terms = [], []
    for i, hi in sorted(hs.items()):
        left = exact_expect(Product((ground.count([i]), hi)), ground)
        right = exact_expect(hi, ground, extra=[i])
        lam = float(ground.masses[i])
        lhs_terms.append(left.value)
        rhs_terms.append(lam * right.value)
        bound += left.bound + lam * right.bound
    lhs, rhs = math.fsum(lhs_terms), math.fsum(rhs_terms)
    return MeckeIdentity(lhs, rhs, abs(lhs - rhs), bound)


def oracle_projection(F: Observable, ground: FiniteGround, order: int,
                      max_states: int = MAX_STATES) -> dict[tuple, Expectation]:
    """Exact ``P_n F(ys) = E[D^n_{ys} F]`` for every ordered tuple of ground atoms."""
    if order == 0:
        return {(): exact_expect(F, ground, max_states=max_states)}
    return {
        ys: _expect_difference(F, ground, ys, max_states)
        for ys in itertools.product(range(ground.size), repeat=order)
    }


@dataclass(frozen=True)
class Orthogonality:
    inner: Expectation
    leibniz: dict

    def to_dict(self) -> dict:
        return {
            "inner": self.inner.value,
            "inner_bound": self.inner.bound,
            "leibniz": {str(a): [e.value, e.bound] for a, e in self.leibniz.items()},
            "exact": True,
        }


def oracle_chaos_orthogonality(F: Observable, G: Observable, ground: FiniteGround) -> Orthogonality:
    """``E[F G]`` and, for each ground atom ``a``, ``E[(D_a G) G]``."""
    inner = exact_expect(Product((F, G)), ground)
    leibniz = {a: exact_expect(Product((diff1(G, a), G)), ground) for a in range(ground.size)}
    return Orthogonality(inner, leibniz)
