"""Polynomial observables on counting measures and their difference calculus.

Observables are expression trees over three kinds of leaves: constants, counts
``N(A)`` and first stochastic integrals ``I1(f) = sum_x f(x) - int f dmu`` of
simple functions.  Sums, products and scalings close the algebra.  Adding an
atom ``y`` shifts ``N(A)`` by ``1_A(y)`` and ``I1(f)`` by ``f(y)``, so difference
operators act on the trees exactly.

Regions only need ``contains(point)`` and ``mass``; the same trees therefore run
on tower regions and on the finite ground sets of :mod:`suspension_lab.oracle`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Any, Sequence

import numpy as np

from .odometer import BitSource, GrowthSpec, Rectangle, RegionSet
from .point_process import as_trace, sample_point, sample_poisson, trial_rng

__all__ = [
    "SimpleFunction",
    "Observable",
    "Const",
    "Count",
    "I1",
    "Sum",
    "Product",
    "Scale",
    "evaluate",
    "shifted_difference",
    "diff1",
    "diffn",
    "simplify",
    "to_poly",
    "equivalent",
    "ProjectionEstimate",
    "project_n",
    "MeckeReport",
    "mecke_check",
]


def _overlaps(a, b) -> bool:
    return bool(a.intersect(b))


@dataclass(frozen=True)
class SimpleFunction:
    """``sum(c * 1_R)`` over pairwise disjoint finite-mass regions ``R``."""

    terms: tuple[tuple[Any, Any], ...]

    def __post_init__(self):
        terms = tuple((c, r) for c, r in self.terms)
        object.__setattr__(self, "terms", terms)
        regions = [r for _, r in terms]
        for i, j in itertools.combinations(range(len(regions)), 2):
            if _overlaps(regions[i], regions[j]):
                raise ValueError("simple function terms must have disjoint supports")

    @classmethod
    def indicator(cls, region) -> "SimpleFunction":
        return cls(((1, region),))

    def __call__(self, x) -> float:
        return self.value(x)

    def value(self, x):
        for c, r in self.terms:
            if r.contains(x):
                return c
        return 0

    @property
    def integral(self):
        """``int f dmu``; exact when coefficients are rational."""
        return sum((c * r.mass for c, r in self.terms), Fraction(0))

    def disjoint_from(self, other: "SimpleFunction") -> bool:
        return not any(_overlaps(r, s) for _, r in self.terms for _, s in other.terms)

    def positive_part(self) -> "SimpleFunction":
        return SimpleFunction(tuple((c, r) for c, r in self.terms if c > 0))

    def negative_part(self) -> "SimpleFunction":
        return SimpleFunction(tuple((-c, r) for c, r in self.terms if c < 0))


class Observable:
    """Base class; supports ``+``, ``-``, ``*`` with observables and numbers."""

    def __add__(self, other):
        return Sum((self, _lift(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum((self, Scale(-1, _lift(other))))

    def __rsub__(self, other):
        return Sum((_lift(other), Scale(-1, self)))

    def __neg__(self):
        return Scale(-1, self)

    def __mul__(self, other):
        if isinstance(other, Number):
            return Scale(other, self)
        return Product((self, other))

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Scale(other, self)
        return Product((other, self))

    def __call__(self, nu, extra: Sequence = ()):
        return evaluate(self, nu, extra)


def _lift(x) -> Observable:
    return x if isinstance(x, Observable) else Const(x)


@dataclass(frozen=True)
class Const(Observable):
    value: Any


@dataclass(frozen=True)
class Count(Observable):
    """``N(A)``: number of atoms in ``region``."""

    region: Any

    def __post_init__(self):
        if isinstance(self.region, Rectangle):
            object.__setattr__(self, "region", RegionSet((self.region,)))


@dataclass(frozen=True)
class I1(Observable):
    f: SimpleFunction


@dataclass(frozen=True)
class Sum(Observable):
    terms: tuple[Observable, ...]


@dataclass(frozen=True)
class Product(Observable):
    factors: tuple[Observable, ...]


@dataclass(frozen=True)
class Scale(Observable):
    c: Any
    inner: Observable


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _points(nu, extra) -> list:
    atoms = nu.atoms if hasattr(nu, "atoms") else nu
    return list(atoms) + list(extra)


def _eval(F: Observable, pts: list):
    if isinstance(F, Const):
        return F.value
    if isinstance(F, Count):
        return sum(1 for p in pts if F.region.contains(p))
    if isinstance(F, I1):
        return sum(F.f.value(p) for p in pts) - F.f.integral
    if isinstance(F, Sum):
        return sum(_eval(t, pts) for t in F.terms)
    if isinstance(F, Product):
        out = 1
        for g in F.factors:
            out = out * _eval(g, pts)
        return out
    if isinstance(F, Scale):
        return F.c * _eval(F.inner, pts)
    raise TypeError(f"not an observable: {F!r}")


def evaluate(F: Observable, nu, extra: Sequence = ()) -> float:
    """``F(nu + sum of delta_y for y in extra)``."""
    v = _eval(F, _points(nu, extra))
    return float(v)


def shifted_difference(F: Observable, nu, ys: Sequence) -> float:
    """``D^n_{ys} F(nu)`` by inclusion-exclusion over added atoms."""
    n = len(ys)
    base = list(nu.atoms if hasattr(nu, "atoms") else nu)
    total = 0
    for size in range(n + 1):
        sign = -1 if (n - size) % 2 else 1
        for subset in itertools.combinations(ys, size):
            total += sign * _eval(F, base + list(subset))
    return float(total)


# ---------------------------------------------------------------------------
# normal form
# ---------------------------------------------------------------------------

Poly = dict  # monomial (sorted tuple of leaves) -> coefficient


def _leaf_key(leaf) -> tuple:
    return (type(leaf).__name__, repr(leaf))


def to_poly(F: Observable) -> Poly:
    """Expand ``F`` into a polynomial in its ``Count`` and ``I1`` leaves."""
    if isinstance(F, Const):
        return {(): F.value} if F.value != 0 else {}
    if isinstance(F, (Count, I1)):
        return {(F,): 1}
    if isinstance(F, Scale):
        if F.c == 0:
            return {}
        return {m: F.c * c for m, c in to_poly(F.inner).items()}
    if isinstance(F, Sum):
        out: Poly = {}
        for t in F.terms:
            for m, c in to_poly(t).items():
                out[m] = out.get(m, 0) + c
        return {m: c for m, c in out.items() if c != 0}
    if isinstance(F, Product):
        out = {(): 1}
        for g in F.factors:
            gp = to_poly(g)
            nxt: Poly = {}
            for m1, c1 in out.items():
                for m2, c2 in gp.items():
                    m = tuple(sorted(m1 + m2, key=_leaf_key))
                    nxt[m] = nxt.get(m, 0) + c1 * c2
            out = {m: c for m, c in nxt.items() if c != 0}
        return out
    raise TypeError(f"not an observable: {F!r}")


def _from_poly(poly: Poly) -> Observable:
    if not poly:
        return Const(0)
    terms = []
    for m in sorted(poly, key=lambda m: (len(m), [_leaf_key(x) for x in m])):
        c = poly[m]
        if not m:
            terms.append(Const(c))
            continue
        body = m[0] if len(m) == 1 else Product(m)
        terms.append(body if c == 1 else Scale(c, body))
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def simplify(F: Observable) -> Observable:
    """Canonical sum of scaled monomials; constants folded, zeros dropped."""
    return _from_poly(to_poly(F))


def equivalent(F: Observable, G: Observable, tol: float = 1e-12) -> bool:
    """Equality of normal forms, coefficients compared to ``tol``."""
    pf, pg = to_poly(F), to_poly(G)
    return all(abs(float(pf.get(m, 0) - pg.get(m, 0))) <= tol for m in set(pf) | set(pg))


# ---------------------------------------------------------------------------
# difference operators
# ---------------------------------------------------------------------------


def _d1(F: Observable, y) -> Observable:
    if isinstance(F, Const):
        return Const(0)
    if isinstance(F, Count):
        return Const(1 if F.region.contains(y) else 0)
    if isinstance(F, I1):
        return Const(F.f.value(y))
    if isinstance(F, Sum):
        return Sum(tuple(_d1(t, y) for t in F.terms))
    if isinstance(F, Scale):
        return Scale(F.c, _d1(F.inner, y))
    if isinstance(F, Product):
        head, rest = F.factors[0], F.factors[1:]
        if not rest:
            return _d1(head, y)
        tail = rest[0] if len(rest) == 1 else Product(rest)
        dh, dt = _d1(head, y), _d1(tail, y)
        # (F+dF)(G+dG) - FG
        return Sum((Product((dh, tail)), Product((head, dt)), Product((dh, dt))))
    raise TypeError(f"not an observable: {F!r}")


def diff1(F: Observable, y) -> Observable:
    """``nu -> F(nu + delta_y) - F(nu)`` as a simplified observable."""
    return simplify(_d1(F, y))


def diffn(F: Observable, ys: Sequence) -> Observable:
    if len(ys) < 1:
        raise ValueError("diffn needs at least one point")
    for y in ys:
        F = diff1(F, y)
    return F


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise ValueError("need at least two trials")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


@dataclass(frozen=True)
class ProjectionEstimate:
    order: int
    points: tuple
    estimate: float
    standard_error: float
    trials: int
    exact: bool = False

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "estimate": self.estimate,
            "se": self.standard_error,
            "trials": self.trials,
            "exact": self.exact,
        }


def project_n(F: Observable, ys: Sequence, region: RegionSet, trials: int, seed,
              spec: GrowthSpec | None = None) -> ProjectionEstimate:
    """Monte Carlo estimate of ``P_n F(ys) = E[D^n_{ys} F]`` under ``Poisson(mu|region)``.

    When the difference is a constant observable the value is returned with
    ``exact=True`` and zero standard error.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    D = diffn(F, ys) if ys else simplify(F)
    n = len(ys)
    if isinstance(D, Const):
        return ProjectionEstimate(n, tuple(ys), float(D.value), 0.0, trials, exact=True)
    trace = as_trace(seed)
    values = [evaluate(D, sample_poisson(region, trace + (i,), spec)) for i in range(trials)]
    est, se = _mean_se(values)
    return ProjectionEstimate(n, tuple(ys), est, se, trials)


@dataclass(frozen=True)
class MeckeReport:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    z: float
    trials: int

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "se_lhs": self.se_lhs,
                "se_rhs": self.se_rhs, "z": self.z, "trials": self.trials}


def _z(a: float, b: float, sa: float, sb: float) -> float:
    s = math.hypot(sa, sb)
    if s == 0:
        return 0.0 if a == b else math.inf
    return abs(a - b) / s


def mecke_check(g: Observable, f: SimpleFunction, region: RegionSet, trials: int, seed,
                spec: GrowthSpec | None = None) -> MeckeReport:
    """Compare both sides of Mecke's formula for ``h(nu, x) = g(nu) f(x)``.

    Left: ``g(nu) * sum_{x in nu} f(x)``.  Right: for every term ``c 1_R`` of
    ``f`` one auxiliary point ``x ~ mu|R`` and the weight ``c mu(R) g(nu + delta_x)``.
    The two sides use independent configurations.  ``f`` must be supported in
    ``region`` and ``g`` must only look at ``region``.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    trace = as_trace(seed)
    cap = (spec or GrowthSpec()).cap_depth
    terms = [(c, r) for c, r in f.terms]
    lhs, rhs = [], []
    for i in range(trials):
        nu = sample_poisson(region, trace + (0, i), spec)
        lhs.append(evaluate(g, nu) * sum(float(f.value(x)) for x in nu.atoms))
        nu2 = sample_poisson(region, trace + (1, i), spec)
        rng = trial_rng(trace, 2, i)
        acc = 0.0
        for t, (c, r) in enumerate(terms):
            x = sample_point(r, rng, BitSource(trace[0], trace[1:] + (3, i, t)), cap)
            acc += float(c) * float(r.mass) * evaluate(g, nu2, [x])
        rhs.append(acc)
    ml, sl = _mean_se(lhs)
    mr, sr = _mean_se(rhs)
    return MeckeReport(ml, mr, sl, sr, _z(ml, mr, sl, sr), trials)
