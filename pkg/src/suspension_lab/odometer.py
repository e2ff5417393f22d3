"""Odometer tower base system.

The base space is the Kakutani tower over the dyadic odometer: points
``(omega, level)`` with ``omega`` a binary word and ``1 <= level <= h(omega)``,
where the height depends only on ``k(omega)``, the index of the first zero
bit.  Words are revealed lazily from a deterministic per-point bit source so
that a sampled point can be pushed through arbitrarily long carry chains
reproducibly.

Sets are handled symbolically.  A :class:`Rectangle` is a cylinder
``[w] x [a, b]`` and a :class:`RegionSet` a disjoint union of rectangles plus an
exact bound on the mass of whatever could not be tracked.  Every mass is a
:class:`fractions.Fraction` with a power-of-two denominator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "CapExceeded",
    "TruncationExceeded",
    "InfeasibleRectangle",
    "GrowthSpec",
    "BitSource",
    "LazyWord",
    "TowerPoint",
    "Rectangle",
    "RegionSet",
    "succ",
    "pred",
    "height",
    "apply_T",
    "apply_T_inv",
    "iterate_T",
    "rect_preimage",
    "rect_image",
    "window",
    "window_mass",
    "dyadic_str",
    "parse_dyadic",
]

DEFAULT_CAP = 64
DEFAULT_K = 30


class CapExceeded(RuntimeError):
    """A word bit beyond the revelation cap was required."""


class TruncationExceeded(RuntimeError):
    """A symbolic set operation needed column classes beyond the truncation index."""


class InfeasibleRectangle(ValueError):
    """Level interval exceeds the smallest column height allowed by the prefix."""


def dyadic_str(x: Fraction) -> str:
    """Format a dyadic rational as ``"p/2^q"``."""
    x = Fraction(x)
    q = x.denominator.bit_length() - 1
    if x.denominator != 1 << q:
        raise ValueError(f"{x} is not a dyadic rational")
    return f"{x.numerator}/2^{q}"


def parse_dyadic(s: str) -> Fraction:
    num, _, den = s.partition("/")
    if not den:
        return Fraction(int(num))
    if not den.startswith("2^"):
        raise ValueError(f"not a dyadic string: {s!r}")
    return Fraction(int(num), 1 << int(den[2:]))


# ---------------------------------------------------------------------------
# growth sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthSpec:
    """Integer sequences driving the tower geometry.

    ``m`` lists the multipliers; beyond the list the last entry repeats when
    ``repeat_last`` is set.  ``n[j+1] = m[j] * n[j]`` with ``n[0] = 1`` and the
    height of column class ``k`` is ``h[k] = n[k] - sum(n[j] for j < k)``.
    """

    m: tuple[int, ...] = (3,)
    repeat_last: bool = True
    cap_depth: int = DEFAULT_CAP
    truncation_k: int = DEFAULT_K
    _n: list = field(default_factory=lambda: [1], init=False, repr=False, compare=False)
    _h: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        if not self.m:
            raise ValueError("m must be non-empty")
        if any(x < 3 for x in self.m):
            raise ValueError(f"every m_j must be >= 3, got {self.m}")
        if self.cap_depth < 1 or self.truncation_k < 0:
            raise ValueError("cap_depth must be >= 1 and truncation_k >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "GrowthSpec":
        return cls(
            m=tuple(d.get("m", (3,))),
            repeat_last=bool(d.get("repeat_last", True)),
            cap_depth=int(d.get("cap_depth", DEFAULT_CAP)),
            truncation_k=int(d.get("truncation_k", DEFAULT_K)),
        )

    @classmethod
    def from_json(cls, text: str) -> "GrowthSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "m": list(self.m),
            "repeat_last": self.repeat_last,
            "cap_depth": self.cap_depth,
            "truncation_k": self.truncation_k,
        }

    def m_at(self, j: int) -> int:
        if j < 0:
            raise IndexError(j)
        if j < len(self.m):
            return self.m[j]
        if self.repeat_last:
            return self.m[-1]
        raise IndexError(f"m[{j}] undefined: list has {len(self.m)} entries and repeat_last is off")

    def n(self, j: int) -> int:
        ns = self._n
        while len(ns) <= j:
            ns.append(self.m_at(len(ns) - 1) * ns[-1])
        return ns[j]

    def h(self, k: int) -> int:
        hs = self._h
        while len(hs) <= k:
            i = len(hs)
            hs.append(self.n(i) - sum(self.n(j) for j in range(i)))
        return hs[k]

    def ns(self, count: int) -> list[int]:
        return [self.n(j) for j in range(count)]

    def hs(self, count: int) -> list[int]:
        return [self.h(k) for k in range(count)]


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------


class BitSource:
    """Deterministic fair bits keyed by ``(entropy, key)``.

    All bits below the cap are generated in one call, so revelation order can
    never change a value.
    """

    __slots__ = ("entropy", "key", "_bits")

    def __init__(self, entropy: int, key: Sequence[int]):
        self.entropy = int(entropy)
        self.key = tuple(int(k) for k in key)
        self._bits = None

    def bit(self, i: int, cap: int) -> int:
        if i >= cap:
            raise CapExceeded(f"bit {i} requested beyond cap {cap}")
        bits = self._bits
        if bits is None or len(bits) < cap:
            words = -(-cap // 64)
            state = np.random.SeedSequence(self.entropy, spawn_key=self.key).generate_state(
                words, np.uint64
            )
            bits = np.unpackbits(state.view(np.uint8), bitorder="little")
            self._bits = bits
        return int(bits[i])

    def ident(self) -> tuple:
        return (self.entropy, self.key)

    def __eq__(self, other):
        return isinstance(other, BitSource) and self.ident() == other.ident()

    def __hash__(self):
        return hash(self.ident())

    def __repr__(self):
        return f"BitSource({self.entropy}, {self.key})"


@dataclass(frozen=True, eq=False)
class LazyWord:
    """A point of ``{0,1}^N``: explicit ``head`` bits, then bits from ``source``.

    Without a source the word is only known on its head; asking for more
    raises :class:`CapExceeded`.
    """

    head: tuple[int, ...] = ()
    source: BitSource | None = None
    cap: int = DEFAULT_CAP

    @classmethod
    def from_bits(cls, bits: str | Iterable[int], source: BitSource | None = None,
                  cap: int = DEFAULT_CAP) -> "LazyWord":
        return cls(tuple(int(b) for b in bits), source, cap)

    def bit(self, i: int) -> int:
        if i < len(self.head):
            return self.head[i]
        if i >= self.cap:
            raise CapExceeded(f"bit {i} requested beyond cap {self.cap}")
        if self.source is None:
            raise CapExceeded(f"bit {i} is not determined (no bit source)")
        return self.source.bit(i, self.cap)

    def prefix(self, r: int) -> tuple[int, ...]:
        if r <= len(self.head):
            return self.head[:r]
        return self.head + tuple(self.bit(i) for i in range(len(self.head), r))

    def _first(self, value: int) -> int:
        i = 0
        while self.bit(i) != value:
            i += 1
        return i

    def first_zero(self) -> int:
        """``k(omega)``: index of the first zero bit."""
        return self._first(0)

    def first_one(self) -> int:
        return self._first(1)

    def succ(self) -> "LazyWord":
        k = self.first_zero()
        return LazyWord((0,) * k + (1,) + self.head[k + 1:], self.source, self.cap)

    def pred(self) -> "LazyWord":
        i = self.first_one()
        return LazyWord((1,) * i + (0,) + self.head[i + 1:], self.source, self.cap)

    def canonical(self) -> tuple[int, ...]:
        """Head with trailing bits that merely repeat the source stripped."""
        head = self.head
        if self.source is None:
            return head
        r = len(head)
        while r > 0 and r - 1 < self.cap and self.source.bit(r - 1, self.cap) == head[r - 1]:
            r -= 1
        return head[:r]

    def _key(self):
        src = None if self.source is None else self.source.ident()
        return (self.canonical(), src, self.cap)

    def __eq__(self, other):
        return isinstance(other, LazyWord) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        bits = "".join(map(str, self.head))
        tail = "..." if self.source is not None else ""
        return f"LazyWord({bits}{tail})"


@dataclass(frozen=True)
class TowerPoint:
    word: LazyWord
    level: int

    def check(self, spec: GrowthSpec) -> None:
        h = height(self.word, spec)
        if not 1 <= self.level <= h:
            raise ValueError(f"level {self.level} outside [1, {h}]")


def succ(w: LazyWord) -> LazyWord:
    """Odometer step ``omega + 1`` with carry to the right."""
    return w.succ()


def pred(w: LazyWord) -> LazyWord:
    return w.pred()


def height(w: LazyWord, spec: GrowthSpec) -> int:
    return spec.h(w.first_zero())


def apply_T(p: TowerPoint, spec: GrowthSpec) -> TowerPoint:
    """Climb one level, or move to the bottom of the next column from the top."""
    if p.level < height(p.word, spec):
        return TowerPoint(p.word, p.level + 1)
    return TowerPoint(p.word.succ(), 1)


def apply_T_inv(p: TowerPoint, spec: GrowthSpec) -> TowerPoint:
    if p.level >= 2:
        return TowerPoint(p.word, p.level - 1)
    w = p.word.pred()
    return TowerPoint(w, height(w, spec))


def iterate_T(p: TowerPoint, steps: int, spec: GrowthSpec) -> TowerPoint:
    step = apply_T if steps >= 0 else apply_T_inv
    for _ in range(abs(steps)):
        p = step(p, spec)
    return p


# ---------------------------------------------------------------------------
# symbolic sets
# ---------------------------------------------------------------------------


def _column_class_of(prefix: tuple[int, ...]) -> int | None:
    k = len(prefix) - 1
    if k >= 0 and prefix[k] == 0 and all(prefix[:k]):
        return k
    return None


def min_column_index(prefix: Sequence[int]) -> int:
    """Smallest ``k(omega)`` over completions of ``prefix``."""
    for i, b in enumerate(prefix):
        if b == 0:
            return i
    return len(prefix)


@dataclass(frozen=True, order=True)
class Rectangle:
    """Cylinder ``[prefix]`` times the inclusive level interval ``[lo, hi]``.

    Column class ``k`` is the cylinder ``1^k 0``.  Feasibility (``hi`` not above
    the lowest column in the cylinder) depends on the growth spec and is
    checked by :meth:`build` and :meth:`check`.
    """

    prefix: tuple[int, ...]
    lo: int
    hi: int

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(b) for b in self.prefix))
        if any(b not in (0, 1) for b in self.prefix):
            raise ValueError(f"prefix must be binary, got {self.prefix}")
        if not 1 <= self.lo <= self.hi:
            raise ValueError(f"need 1 <= lo <= hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def build(cls, column: int | str | Sequence[int], lo: int, hi: int,
              spec: GrowthSpec) -> "Rectangle":
        """``column`` is a class index (int) or a prefix (bit string / sequence)."""
        if isinstance(column, int):
            prefix = (1,) * column + (0,)
        else:
            prefix = tuple(int(b) for b in column)
        r = cls(prefix, lo, hi)
        r.check(spec)
        return r

    def check(self, spec: GrowthSpec) -> None:
        top = self.max_level(spec)
        if self.hi > top:
            raise InfeasibleRectangle(
                f"levels [{self.lo}, {self.hi}] exceed min height {top} of prefix "
                f"{''.join(map(str, self.prefix)) or '<empty>'}"
            )

    def max_level(self, spec: GrowthSpec) -> int:
        return spec.h(min_column_index(self.prefix))

    @property
    def column_class(self) -> int | None:
        return _column_class_of(self.prefix)

    @property
    def measure(self) -> Fraction:
        return Fraction(self.hi - self.lo + 1, 1 << len(self.prefix))

    mass = measure

    def contains(self, p: TowerPoint) -> bool:
        if not self.lo <= p.level <= self.hi:
            return False
        return p.word.prefix(len(self.prefix)) == self.prefix

    def intersect(self, other: "Rectangle") -> "Rectangle | None":
        a, b = self.prefix, other.prefix
        if len(a) > len(b):
            a, b = b, a
        if b[: len(a)] != a:
            return None
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Rectangle(b, lo, hi)

    def minus(self, other: "Rectangle") -> list["Rectangle"]:
        """``self \\ other`` as disjoint rectangles."""
        common = self.intersect(other)
        if common is None:
            return [self]
        out = []
        w, u = self.prefix, common.prefix
        for i in range(len(w), len(u)):
            out.append(Rectangle(u[:i] + (1 - u[i],), self.lo, self.hi))
        if self.lo < common.lo:
            out.append(Rectangle(u, self.lo, common.lo - 1))
        if common.hi < self.hi:
            out.append(Rectangle(u, common.hi + 1, self.hi))
        return out

    def label(self) -> str:
        k = self.column_class
        col = f"C({k})" if k is not None else f"P({''.join(map(str, self.prefix))})"
        return f"{col}[{self.lo}..{self.hi}]"

    def to_dict(self) -> dict:
        k = self.column_class
        column = {"class": k} if k is not None else {"prefix": "".join(map(str, self.prefix))}
        return {"column": column, "levels": [self.lo, self.hi], "mass": dyadic_str(self.measure)}

    @classmethod
    def from_dict(cls, d: dict, spec: GrowthSpec | None = None) -> "Rectangle":
        col = d["column"]
        if "class" in col:
            prefix = (1,) * int(col["class"]) + (0,)
        else:
            prefix = tuple(int(b) for b in col["prefix"])
        lo, hi = d["levels"]
        r = cls(prefix, int(lo), int(hi))
        if spec is not None:
            r.check(spec)
        return r


def _coalesce(parts: Iterable[Rectangle]) -> tuple[Rectangle, ...]:
    """Merge sibling cylinders and touching intervals; preserves the point set."""
    parts = set(parts)
    changed = True
    while changed:
        changed = False
        by_prefix: dict[tuple, list[Rectangle]] = {}
        for r in parts:
            by_prefix.setdefault(r.prefix, []).append(r)
        merged = set()
        for prefix, rs in by_prefix.items():
            rs.sort(key=lambda r: r.lo)
            cur = rs[0]
            for r in rs[1:]:
                if r.lo == cur.hi + 1:
                    cur = Rectangle(prefix, cur.lo, r.hi)
                    changed = True
                else:
                    merged.add(cur)
                    cur = r
            merged.add(cur)
        parts = merged
        by_interval: dict[tuple, set] = {}
        for r in parts:
            by_interval.setdefault((r.lo, r.hi), set()).add(r.prefix)
        merged = set()
        for (lo, hi), prefixes in by_interval.items():
            for p in sorted(prefixes, key=len, reverse=True):
                if p not in prefixes:
                    continue
                if p:
                    sib = p[:-1] + (1 - p[-1],)
                    if sib in prefixes:
                        prefixes.discard(p)
                        prefixes.discard(sib)
                        prefixes.add(p[:-1])
                        changed = True
            merged.update(Rectangle(p, lo, hi) for p in prefixes)
        parts = merged
    return tuple(sorted(parts))


@dataclass(frozen=True)
class RegionSet:
    """Disjoint union of rectangles plus a bound on untracked mass."""

    parts: tuple[Rectangle, ...] = ()
    tail_bound: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "tail_bound", Fraction(self.tail_bound))
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be non-negative")

    @classmethod
    def of(cls, parts: Iterable[Rectangle], tail_bound: Fraction = Fraction(0),
           spec: GrowthSpec | None = None) -> "RegionSet":
        """Validated constructor: parts must be pairwise disjoint (and feasible if ``spec``)."""
        region = cls(tuple(parts), tail_bound)
        if not region.is_disjoint():
            raise ValueError("rectangles overlap")
        if spec is not None:
            for r in region.parts:
                r.check(spec)
        return region

    @classmethod
    def empty(cls) -> "RegionSet":
        return cls()

    def is_disjoint(self) -> bool:
        ps = self.parts
        return all(ps[i].intersect(ps[j]) is None for i in range(len(ps)) for j in range(i + 1, len(ps)))

    @cached_property
    def mass(self) -> Fraction:
        return sum((r.measure for r in self.parts), Fraction(0))

    @cached_property
    def cumulative_masses(self) -> np.ndarray:
        """Running float masses of the parts, for sampling."""
        return np.cumsum([float(r.measure) for r in self.parts])

    def __iter__(self) -> Iterator[Rectangle]:
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def contains(self, p: TowerPoint) -> bool:
        return any(r.contains(p) for r in self.parts)

    def coalesce(self) -> "RegionSet":
        return RegionSet(_coalesce(self.parts), self.tail_bound)

    def intersect(self, other: "RegionSet") -> "RegionSet":
        out = []
        for a in self.parts:
            for b in other.parts:
                c = a.intersect(b)
                if c is not None:
                    out.append(c)
        return RegionSet(_coalesce(out), self.tail_bound + other.tail_bound)

    def difference(self, other: "RegionSet") -> "RegionSet":
        pieces = list(self.parts)
        for b in other.parts:
            pieces = [q for p in pieces for q in p.minus(b)]
        return RegionSet(_coalesce(pieces), self.tail_bound + other.tail_bound)

    def union(self, other: "RegionSet") -> "RegionSet":
        extra = list(other.parts)
        for a in self.parts:
            extra = [q for p in extra for q in p.minus(a)]
        return RegionSet(_coalesce(self.parts + tuple(extra)), self.tail_bound + other.tail_bound)

    __and__ = intersect
    __or__ = union
    __sub__ = difference

    def preimage(self, spec: GrowthSpec, steps: int = 1, K: int | None = None) -> "RegionSet":
        """``T^{-steps}`` of the region (``steps`` may be negative)."""
        region = self
        for _ in range(abs(steps)):
            parts: list[Rectangle] = []
            tail = region.tail_bound
            for r in region.parts:
                piece = rect_preimage(r, spec, K) if steps > 0 else rect_image(r, spec)
                parts.extend(piece.parts)
                tail += piece.tail_bound
            region = RegionSet(_coalesce(parts), tail)
        return region

    def image(self, spec: GrowthSpec, steps: int = 1, K: int | None = None) -> "RegionSet":
        return self.preimage(spec, -steps, K)

    def labels(self) -> list[str]:
        return [r.label() for r in self.parts]

    def to_dict(self) -> dict:
        return {
            "parts": [r.to_dict() for r in self.parts],
            "mass": dyadic_str(self.mass),
            "tail_bound": dyadic_str(self.tail_bound),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict | list, spec: GrowthSpec | None = None) -> "RegionSet":
        if isinstance(d, list):
            d = {"parts": d}
        parts = [Rectangle.from_dict(p, spec) for p in d["parts"]]
        tail = parse_dyadic(d.get("tail_bound", "0"))
        return cls.of(parts, tail)

    @classmethod
    def from_json(cls, text: str, spec: GrowthSpec | None = None) -> "RegionSet":
        return cls.from_dict(json.loads(text), spec)


def rect_preimage(r: Rectangle, spec: GrowthSpec, K: int | None = None) -> RegionSet:
    """``T^{-1}(r)`` as disjoint rectangles.

    Levels above the floor shift down.  The floor slice pulls back to the top
    levels of the predecessor cylinder.  When the predecessor cylinder is
    ``[1^r]`` its points sit in different column classes, so it is split into
    classes ``r..K`` and the rest is reported as tail.
    """
    K = spec.truncation_k if K is None else K
    parts = []
    if r.hi >= 2:
        parts.append(Rectangle(r.prefix, max(r.lo, 2) - 1, r.hi - 1))
    tail = Fraction(0)
    if r.lo == 1:
        w = r.prefix
        if 1 in w:
            i = w.index(1)
            pw = (1,) * i + (0,) + w[i + 1:]
            h = spec.h(i)
            parts.append(Rectangle(pw, h, h))
        else:
            depth = len(w)
            if depth > K:
                raise TruncationExceeded(
                    f"floor of {r.label()} pulls back into column classes >= {depth} > K={K}"
                )
            for k in range(depth, K + 1):
                h = spec.h(k)
                parts.append(Rectangle((1,) * k + (0,), h, h))
            tail = Fraction(1, 1 << (K + 1))
    return RegionSet(tuple(parts), tail)


def rect_image(r: Rectangle, spec: GrowthSpec) -> RegionSet:
    """``T(r)``; always exact because only finitely many column tops are involved."""
    kmin = min_column_index(r.prefix)
    top = spec.h(kmin)
    if r.hi < top:
        return RegionSet((Rectangle(r.prefix, r.lo + 1, r.hi + 1),))
    if r.hi > top:
        raise InfeasibleRectangle(r.label())
    parts = []
    if r.lo < r.hi:
        parts.append(Rectangle(r.prefix, r.lo + 1, r.hi))
    if kmin < len(r.prefix):
        # prefix is 1^k 0 ...: the whole cylinder tops out at level h(k)
        topw = r.prefix
    else:
        # prefix 1^k: only class k tops out here, deeper classes keep climbing
        topw = r.prefix + (0,)
        parts.append(Rectangle(r.prefix + (1,), r.hi + 1, r.hi + 1))
    k = kmin
    parts.append(Rectangle((0,) * k + (1,) + topw[k + 1:], 1, 1))
    return RegionSet(tuple(parts))


def window_mass(L: int, spec: GrowthSpec, K: int | None = None) -> tuple[Fraction, Fraction]:
    """Exact ``(tracked, tail)`` masses of ``{(omega, n): n <= L}`` split at class ``K``."""
    K = spec.truncation_k if K is None else K
    tracked = sum((Fraction(min(spec.h(k), L), 1 << (k + 1)) for k in range(K + 1)), Fraction(0))
    tail = Fraction(0)
    k = K + 1
    while spec.h(k) < L:
        tail += Fraction(spec.h(k), 1 << (k + 1))
        k += 1
    # every class from k on has height >= L
    tail += Fraction(L, 1 << k)
    return tracked, tail


def window(L: int, K: int | None = None, spec: GrowthSpec | None = None) -> RegionSet:
    """Finite-measure window ``{(omega, n): n <= L}`` tracked up to column class ``K``."""
    spec = GrowthSpec() if spec is None else spec
    K = spec.truncation_k if K is None else K
    if L < 1 or K < 0:
        raise ValueError("need L >= 1 and K >= 0")
    parts = tuple(Rectangle((1,) * k + (0,), 1, min(spec.h(k), L)) for k in range(K + 1))
    _, tail = window_mass(L, spec, K)
    return RegionSet(parts, tail)
