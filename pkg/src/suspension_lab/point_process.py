"""Poisson configurations on finite-measure regions of the tower.

A sample is drawn count-first: ``N ~ Poisson(mass)``, then each atom picks a
rectangle proportionally to its mass, a uniform level inside it, and a word
whose prefix is the rectangle's cylinder and whose tail comes from a private
bit stream.  Seeds are tuples of integers; trial ``i`` of seed ``s`` uses the
trace ``s + (i,)``, so results never depend on the order trials are run in.
"""
from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .odometer import (
    BitSource,
    GrowthSpec,
    LazyWord,
    Rectangle,
    RegionSet,
    TowerPoint,
    dyadic_str,
    iterate_T,
)

__all__ = [
    "EmptyRegion",
    "SeedCollision",
    "CountingMeasure",
    "MarkedCountingMeasure",
    "as_trace",
    "trial_rng",
    "sample_poisson",
    "sample_marked",
    "sample_trials",
    "sample_point",
    "superpose",
    "thin",
    "thin_split",
    "pushforward",
    "transport",
    "count",
    "to_jsonl",
    "from_jsonl",
]

Seed = int | Sequence[int]


class EmptyRegion(ValueError):
    """Sampling requested on a region of zero tracked mass."""


class SeedCollision(ValueError):
    """Two configurations meant to be independent share a seed trace."""


def as_trace(seed: Seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    trace = tuple(int(s) for s in seed)
    if not trace:
        raise ValueError("empty seed trace")
    return trace


def trial_rng(trace: Seed, *tag: int) -> np.random.Generator:
    """Generator for ``trace`` extended by ``tag``; entropy is the first entry."""
    trace = as_trace(trace)
    ss = np.random.SeedSequence(trace[0], spawn_key=trace[1:] + tuple(tag))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class CountingMeasure:
    """Finite multiset of tower points, a faithful Poisson sample on ``support``."""

    atoms: tuple[TowerPoint, ...] = ()
    support: RegionSet = field(default_factory=RegionSet)
    seed_trace: tuple[int, ...] = ()

    @classmethod
    def empty(cls, support: RegionSet | None = None) -> "CountingMeasure":
        return cls((), support if support is not None else RegionSet(), ())

    def __len__(self):
        return len(self.atoms)

    def multiset(self) -> Counter:
        return Counter(self.atoms)

    @property
    def tail_mass(self) -> Fraction:
        return self.support.tail_bound


@dataclass(frozen=True)
class MarkedCountingMeasure:
    """Configuration with an independent uniform mark per atom."""

    atoms: tuple[TowerPoint, ...] = ()
    marks: tuple[float, ...] = ()
    support: RegionSet = field(default_factory=RegionSet)
    seed_trace: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.atoms) != len(self.marks):
            raise ValueError("one mark per atom required")

    def __len__(self):
        return len(self.atoms)

    def unmarked(self) -> CountingMeasure:
        return CountingMeasure(self.atoms, self.support, self.seed_trace)


def _uniform_levels(rng: np.random.Generator, lo: list[int], hi: list[int]) -> list[int]:
    out = []
    for a, b in zip(lo, hi):
        width = b - a + 1
        if width < 1 << 62:
            out.append(a + int(rng.integers(width)))
        else:
            # exact rejection sampling on arbitrary-precision widths
            nbits = width.bit_length()
            while True:
                words = rng.integers(0, 1 << 32, size=-(-nbits // 32), dtype=np.uint64)
                v = 0
                for w in words:
                    v = (v << 32) | int(w)
                v >>= 32 * len(words) - nbits
                if v < width:
                    out.append(a + v)
                    break
    return out


def _place(region: RegionSet, rng: np.random.Generator, n: int, trace: tuple[int, ...],
           cap: int, first_index: int = 0) -> tuple[TowerPoint, ...]:
    parts = region.parts
    cdf = region.cumulative_masses
    picks = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    picks = np.minimum(picks, len(parts) - 1)
    rects = [parts[i] for i in picks]
    levels = _uniform_levels(rng, [r.lo for r in rects], [r.hi for r in rects])
    atoms = []
    for i, (r, level) in enumerate(zip(rects, levels)):
        src = BitSource(trace[0], trace[1:] + (1, first_index + i))
        atoms.append(TowerPoint(LazyWord(r.prefix, src, cap), level))
    return tuple(atoms)


def sample_point(rect: Rectangle, rng: np.random.Generator, source: BitSource,
                 cap: int = 64) -> TowerPoint:
    """One point with law ``mu`` restricted to ``rect``, normalised."""
    (level,) = _uniform_levels(rng, [rect.lo], [rect.hi])
    return TowerPoint(LazyWord(rect.prefix, source, cap), level)


def _draw(region: RegionSet, seed: Seed, spec: GrowthSpec | None, marked: bool):
    trace = as_trace(seed)
    mass = region.mass
    if mass == 0:
        raise EmptyRegion("region has zero tracked mass")
    cap = (spec or GrowthSpec()).cap_depth
    rng = trial_rng(trace, 0)
    n = int(rng.poisson(float(mass)))
    atoms = _place(region, rng, n, trace, cap)
    marks = tuple(float(u) for u in rng.random(n)) if marked else ()
    return trace, atoms, marks


def sample_poisson(region: RegionSet, seed: Seed, spec: GrowthSpec | None = None) -> CountingMeasure:
    """Poisson configuration with intensity ``mu`` restricted to ``region``.

    The untracked tail of ``region`` is not sampled; its mass stays available
    as ``result.tail_mass``.
    """
    trace, atoms, _ = _draw(region, seed, spec, marked=False)
    return CountingMeasure(atoms, region, trace)


def sample_marked(region: RegionSet, seed: Seed, spec: GrowthSpec | None = None) -> MarkedCountingMeasure:
    """Poisson configuration with intensity ``mu x Lebesgue[0,1]``."""
    trace, atoms, marks = _draw(region, seed, spec, marked=True)
    return MarkedCountingMeasure(atoms, marks, region, trace)


def sample_trials(region: RegionSet, seed: Seed, trials: int, spec: GrowthSpec | None = None,
                  marked: bool = False):
    """Independent samples ``0..trials-1``; trial ``i`` uses trace ``seed + (i,)``."""
    trace = as_trace(seed)
    draw = sample_marked if marked else sample_poisson
    return [draw(region, trace + (i,), spec) for i in range(trials)]


def superpose(a: CountingMeasure, b: CountingMeasure) -> CountingMeasure:
    """Sum of two independent configurations.

    The seed trace of the result joins both traces with a ``-1`` separator; it
    is provenance only and not meant to seed new draws.
    """
    if a.seed_trace and a.seed_trace == b.seed_trace:
        raise SeedCollision(f"both configurations carry seed trace {a.seed_trace}")
    if not b.atoms and not b.seed_trace:
        return a
    if not a.atoms and not a.seed_trace:
        return b
    shared = set(a.atoms) & set(b.atoms)
    if shared:
        warnings.warn(f"{len(shared)} coinciding atoms kept with multiplicity", RuntimeWarning)
    trace = a.seed_trace + (-1,) + b.seed_trace
    support = a.support if a.support == b.support else _union(a.support, b.support)
    return CountingMeasure(a.atoms + b.atoms, support, trace)


@lru_cache(maxsize=64)
def _union(a: RegionSet, b: RegionSet) -> RegionSet:
    return a | b


def thin_split(nu: MarkedCountingMeasure, c: float) -> tuple[CountingMeasure, CountingMeasure]:
    """Atoms with mark ``<= c`` and the rest."""
    if not 0 < c <= 1:
        raise ValueError(f"thinning level must lie in (0, 1], got {c}")
    keep, drop = [], []
    for atom, mark in zip(nu.atoms, nu.marks):
        (keep if mark <= c else drop).append(atom)
    return (
        CountingMeasure(tuple(keep), nu.support, nu.seed_trace),
        CountingMeasure(tuple(drop), nu.support, nu.seed_trace),
    )


def thin(nu: MarkedCountingMeasure, c: float) -> CountingMeasure:
    return thin_split(nu, c)[0]


@lru_cache(maxsize=256)
def transport(region: RegionSet, steps: int, spec: GrowthSpec, K: int | None = None) -> RegionSet:
    """``T^steps(region)``: forward images are exact, backward ones may grow the tail."""
    if steps >= 0:
        return region.image(spec, steps)
    return region.preimage(spec, -steps, K)


def pushforward(nu, steps: int, spec: GrowthSpec, K: int | None = None):
    """Apply ``T^steps`` to every atom and carry the support along."""
    if steps == 0:
        return nu
    atoms = tuple(iterate_T(a, steps, spec) for a in nu.atoms)
    support = transport(nu.support, steps, spec, K)
    if isinstance(nu, MarkedCountingMeasure):
        return MarkedCountingMeasure(atoms, nu.marks, support, nu.seed_trace)
    return CountingMeasure(atoms, support, nu.seed_trace)


def count(nu, region: RegionSet | Rectangle) -> int:
    return sum(1 for a in nu.atoms if region.contains(a))


def _atom_record(atom: TowerPoint) -> dict:
    rec = {"prefix": "".join(map(str, atom.word.head)), "level": str(atom.level)}
    src = atom.word.source
    if src is not None:
        rec["stream"] = [src.entropy, *src.key]
    return rec


def to_jsonl(nu) -> str:
    """Header line followed by one line per atom."""
    header = {
        "type": "header",
        "seed": list(nu.seed_trace),
        "atoms": len(nu.atoms),
        "region": nu.support.to_dict(),
        "tail_mass": dyadic_str(nu.support.tail_bound),
    }
    lines = [json.dumps(header)]
    marks = getattr(nu, "marks", None)
    for i, atom in enumerate(nu.atoms):
        rec = _atom_record(atom)
        if marks is not None:
            rec["mark"] = marks[i]
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def from_jsonl(text: str | Iterable[str], cap: int = 64):
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header = json.loads(lines[0])
    atoms, marks = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        stream = rec.get("stream")
        src = BitSource(stream[0], stream[1:]) if stream else None
        atoms.append(TowerPoint(LazyWord.from_bits(rec["prefix"], src, cap), int(rec["level"])))
        if "mark" in rec:
            marks.append(float(rec["mark"]))
    support = RegionSet.from_dict(header["region"])
    trace = tuple(header["seed"])
    if marks:
        return MarkedCountingMeasure(tuple(atoms), tuple(marks), support, trace)
    return CountingMeasure(tuple(atoms), support, trace)
