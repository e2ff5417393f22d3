"""Acceptance checks, runnable from pytest and from ``suspension-lab suite``.

Every check is deterministic given its seed and returns a :class:`CheckResult`
holding the pass flag, the measured quantities and the wall time.  Tolerances
are fixed here: exact comparisons are exact (or ``1e-12`` after conversion to
float), Monte Carlo comparisons use three standard errors, chi-square tests
require ``p > 0.001``.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import fock, oracle, point_process as pp, riesz
from .odometer import BitSource, GrowthSpec, LazyWord, Rectangle, RegionSet, TowerPoint, window, window_mass
from .stats import correlation, covariance, moments, poisson_chi2, within

__all__ = ["CheckResult", "CRITERIA", "run_all", "NONMIXING_GOLDEN", "random_rectangle"]

Z_MAX = 3.0
P_MIN = 1e-3
EXACT_TOL = 1e-12
ORACLE_BOUND_MAX = 1e-10

# Exact values of mu(A & T^-n_j A) / mu(A) for A = C(0)[1..1], m = (3, 3, ...),
# j = 0..4.  Derived with
#   suspension-lab autocorr --set "C(0)[1..1]" --lags auto-nj --max-j 4
# Lag n_0 = 1 always moves the floor of class 0 into class >= 1, hence 0.
NONMIXING_GOLDEN = {
    "set": "C(0)[1..1]",
    "lags": [1, 3, 9, 27, 81],
    "normalized": [Fraction(0), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)],
    "threshold": Fraction(1, 2),
}


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    limit: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def within_time(self) -> bool:
        return self.seconds < self.limit

    @property
    def ok(self) -> bool:
        return self.passed and self.within_time

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.1f}s / {self.limit:.0f}s)"

    def to_dict(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.ok,
            "seconds": round(self.seconds, 3),
            "limit": self.limit,
            "details": _jsonable(self.details),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def random_rectangle(rng: np.random.Generator, spec: GrowthSpec, max_prefix: int = 8) -> Rectangle:
    """Feasible rectangle with a random prefix and level interval."""
    prefix = tuple(int(b) for b in rng.integers(0, 2, size=int(rng.integers(0, max_prefix + 1))))
    top = spec.h(next((i for i, b in enumerate(prefix) if b == 0), len(prefix)))
    lo = int(rng.integers(1, top + 1))
    hi = int(rng.integers(lo, top + 1))
    return Rectangle(prefix, lo, hi)


def _timed(number: int, name: str, limit: float):
    def wrap(fn: Callable[..., tuple[bool, dict]]):
        def run(seed: int = 42) -> CheckResult:
            t0 = time.perf_counter()
            passed, details = fn(seed)
            return CheckResult(number, name, bool(passed), time.perf_counter() - t0, limit, details)

        run.number = number
        run.title = name
        return run

    return wrap


SPEC = GrowthSpec((3,))


@_timed(1, "Riesz coefficient 1/2 at every n_j", 1.0)
def riesz_coefficients(seed):
    values = [riesz.coeff_at(SPEC, SPEC.n(j)) for j in range(9)]
    return all(v == Fraction(1, 2) for v in values), {"coeff_at_nj": values}


@_timed(2, "Dissociation and coefficient agreement, J <= 12", 30.0)
def dissociation(seed):
    J = 12
    collisions = [riesz.dissociation_collisions(SPEC, j) for j in range(J + 1)]
    coeffs = riesz.partial_coeffs(SPEC, J)
    mismatches = sum(1 for k, c in coeffs.coeffs.items() if riesz.coeff_at(SPEC, k, J) != c)
    ok = not any(collisions) and mismatches == 0 and len(coeffs) == 3**J
    return ok, {"collisions": collisions, "frequencies": len(coeffs), "mismatches": mismatches}


@_timed(3, "Window mass and Poisson counts on X_1", 60.0)
def window_counts(seed):
    tracked, tail = window_mass(1, SPEC)
    exact_ok = tracked + tail == 1
    W = window(1, spec=SPEC)
    trials = 100_000
    counts = [len(pp.sample_poisson(W, (seed, 3, i), SPEC)) for i in range(trials)]
    mo = moments(counts)
    lam = float(W.mass)
    stat, p, cells = poisson_chi2(counts, lam)
    ok = exact_ok and within(mo.mean, 1.0, mo.se_mean) and within(mo.var, 1.0, mo.se_var) and p > P_MIN
    return ok, {
        "mass": tracked + tail, "tail": tail, "mean": mo.mean, "se_mean": mo.se_mean,
        "var": mo.var, "se_var": mo.se_var, "chi2": stat, "p": p, "cells": cells,
    }


def _mecke_setup():
    A = Rectangle.build(0, 1, 1, SPEC)
    B = Rectangle.build(1, 1, 2, SPEC)
    region = window(2, spec=SPEC)
    pairs = {
        "const_1B": (fock.Const(1), fock.SimpleFunction.indicator(B)),
        "countA_1B": (fock.Count(A), fock.SimpleFunction.indicator(B)),
        "countA_1A": (fock.Count(A), fock.SimpleFunction.indicator(A)),
    }
    return region, pairs


GROUND_MASSES = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))


@_timed(4, "Mecke formula: Monte Carlo z <= 3 and exact oracle", 120.0)
def mecke(seed):
    region, pairs = _mecke_setup()
    reports = {}
    for t, (name, (g, f)) in enumerate(pairs.items()):
        reports[name] = fock.mecke_check(g, f, region, 100_000, (seed, 4, t), SPEC).to_dict()
    mc_ok = all(r["z"] <= Z_MAX for r in reports.values())

    G = oracle.FiniteGround(GROUND_MASSES, count_cap=20)
    cases = {
        "const_1B": oracle.oracle_mecke(G, g=fock.Const(1), f={1: 1}),
        "countA_1B": oracle.oracle_mecke(G, g=G.count([0]), f={1: 1}),
        "countA_1A": oracle.oracle_mecke(G, g=G.count([0]), f={0: 1}),
        "h_one": oracle.oracle_mecke(G, h=lambda i: fock.Const(1)),
        "h_Nj_offdiag": oracle.oracle_mecke(G, h=lambda i: G.count([j for j in range(G.size) if j != i])),
        "h_Ni": oracle.oracle_mecke(G, h=lambda i: G.count([i])),
    }
    oracle_ok = all(c.holds and c.bound < ORACLE_BOUND_MAX for c in cases.values())
    return mc_ok and oracle_ok, {"monte_carlo": reports,
                                 "oracle": {k: v.to_dict() for k, v in cases.items()}}


@_timed(5, "Fock structure: exact first differences and projections", 60.0)
def fock_structure(seed):
    W = window(3, spec=SPEC)
    rects = [Rectangle.build(0, 1, 1, SPEC), Rectangle.build(1, 1, 2, SPEC),
             Rectangle.build("110", 2, 3, SPEC), Rectangle.build("1110", 1, 3, SPEC)]
    f = fock.SimpleFunction(((Fraction(3, 2), rects[0]), (-2, rects[2]), (Fraction(1, 4), rects[3])))
    F = fock.I1(f)
    rng = pp.trial_rng((seed, 5), 0)
    worst = 0.0
    for i in range(1000):
        nu = pp.sample_poisson(W, (seed, 5, 1, i), SPEC)
        r = W.parts[int(np.searchsorted(W.cumulative_masses, rng.random() * float(W.mass), side="right"))]
        y = pp.sample_point(r, rng, BitSource(seed, (5, 2, i)), SPEC.cap_depth)
        target = float(f.value(y))
        symbolic = fock.evaluate(fock.diff1(F, y), nu)
        brute = fock.evaluate(F, nu, [y]) - fock.evaluate(F, nu)
        worst = max(worst, abs(symbolic - target), abs(brute - target))
    first_ok = worst <= EXACT_TOL

    # second chaos of a disjoint product, ground-set oracle
    G = oracle.FiniteGround(GROUND_MASSES, count_cap=20)
    fv, gv = {0: 1, 1: Fraction(1, 2)}, {2: -1, 3: 2}
    prod = G.i1(fv) * G.i1(gv)
    table = oracle.oracle_projection(prod, G, 2)
    fg = lambda a, b: float(fv.get(a, 0) * gv.get(b, 0) + gv.get(a, 0) * fv.get(b, 0))
    p2_err = max(abs(e.value - fg(*ys)) - e.bound for ys, e in table.items())
    oracle_ok = p2_err <= EXACT_TOL

    # same projection by Monte Carlo on the tower
    ft = fock.SimpleFunction(((1, rects[0]), (Fraction(1, 2), rects[1])))
    gt = fock.SimpleFunction(((-1, rects[2]), (2, rects[3])))
    prod_t = fock.I1(ft) * fock.I1(gt)
    mc = {}
    mc_ok = True
    for a, b in [(0, 2), (1, 3), (0, 1), (3, 2)]:
        ya = TowerPoint(LazyWord(rects[a].prefix, BitSource(seed, (5, 3, a)), 64), rects[a].lo)
        yb = TowerPoint(LazyWord(rects[b].prefix, BitSource(seed, (5, 4, b)), 64), rects[b].hi)
        est = fock.project_n(prod_t, [ya, yb], W, 200, (seed, 5, 5, a, b), SPEC)
        want = float(ft.value(ya) * gt.value(yb) + gt.value(ya) * ft.value(yb))
        # brute force: average the inclusion-exclusion difference over samples
        brute = moments([fock.shifted_difference(prod_t, pp.sample_poisson(W, (seed, 5, 7, a, b, i), SPEC),
                                                 [ya, yb]) for i in range(200)])
        mc[f"{a}{b}"] = {"estimate": est.estimate, "se": est.standard_error, "expected": want,
                         "brute_mean": brute.mean, "brute_se": brute.se_mean}
        mc_ok &= abs(est.estimate - want) <= Z_MAX * est.standard_error + EXACT_TOL
        mc_ok &= abs(brute.mean - want) <= Z_MAX * brute.se_mean + EXACT_TOL

    # counts have no chaos beyond order one
    count_A = G.count([0, 2])
    higher = {n: oracle.oracle_projection(count_A, G, n) for n in (2, 3)}
    count_ok = all(abs(e.value) <= e.bound + EXACT_TOL for t in higher.values() for e in t.values())
    ys = [TowerPoint(LazyWord(r.prefix, BitSource(seed, (5, 6, i)), 64), r.lo) for i, r in enumerate(rects)]
    symbolic_zero = all(
        fock.diffn(fock.Count(rects[0]), list(pair)) == fock.Const(0)
        for pair in itertools.product(ys, repeat=2)
    )
    ok = first_ok and oracle_ok and mc_ok and count_ok and symbolic_zero
    return ok, {"first_order_max_err": worst, "oracle_p2_excess": p2_err, "monte_carlo_p2": mc,
                "count_higher_orders_zero": count_ok, "symbolic_zero": symbolic_zero}


@_timed(6, "Chaos orthogonality on the ground oracle", 30.0)
def chaos_orthogonality(seed):
    G = oracle.FiniteGround(GROUND_MASSES, count_cap=20)
    h = G.i1({0: 1, 3: Fraction(-1, 2)})
    Gprod = G.i1({1: 2}) * G.i1({2: 1})
    res = oracle.oracle_chaos_orthogonality(h, Gprod, G)
    inner_ok = abs(res.inner.value) <= res.inner.bound + EXACT_TOL
    leib_ok = all(abs(e.value) <= e.bound + EXACT_TOL for e in res.leibniz.values())
    bounds_ok = res.inner.bound < ORACLE_BOUND_MAX and all(e.bound < ORACLE_BOUND_MAX for e in res.leibniz.values())
    return inner_ok and leib_ok and bounds_ok, res.to_dict()


@_timed(7, "Measure preservation and equivariance of T", 60.0)
def measure_preservation(seed):
    rng = np.random.default_rng([seed, 7])
    exact_ok = True
    for _ in range(100):
        r = random_rectangle(rng, SPEC)
        pre = RegionSet((r,)).preimage(SPEC)
        img = RegionSet((r,)).image(SPEC)
        exact_ok &= pre.mass + pre.tail_bound == r.measure and pre.mass <= r.measure
        exact_ok &= img.mass == r.measure and img.tail_bound == 0

    W3 = window(3, spec=SPEC)
    roundtrip_ok = True
    for i in range(500):
        nu = pp.sample_poisson(W3, (seed, 7, 1, i), SPEC)
        steps = int(rng.integers(1, 60))
        back = pp.pushforward(pp.pushforward(nu, steps, SPEC), -steps, SPEC)
        roundtrip_ok &= back.atoms == nu.atoms

    W = window(2, spec=SPEC)
    lag = 5
    source = W | W.preimage(SPEC, lag)
    counts = []
    for i in range(10_000):
        nu = pp.sample_poisson(source, (seed, 7, 2, i), SPEC)
        counts.append(pp.count(pp.pushforward(nu, lag, SPEC), W))
    mo = moments(counts)
    lam = float(W.mass)
    poisson_ok = within(mo.mean, lam, mo.se_mean) and within(mo.var, lam, mo.se_var)
    return exact_ok and roundtrip_ok and poisson_ok, {
        "exact": exact_ok, "roundtrip": roundtrip_ok, "lag": lag, "mass": W.mass,
        "mean": mo.mean, "se_mean": mo.se_mean, "var": mo.var, "se_var": mo.se_var,
    }


@_timed(8, "Superposition and thinning", 60.0)
def superposition_thinning(seed):
    W1, W2 = window(1, spec=SPEC), window(2, spec=SPEC)
    trials = 100_000
    total = []
    for i in range(trials):
        a = pp.sample_poisson(W1, (seed, 8, 0, i), SPEC)
        b = pp.sample_poisson(W2, (seed, 8, 1, i), SPEC)
        total.append(len(pp.superpose(a, b)))
    lam = float(W1.mass + W2.mass)
    _, p_sup, _ = poisson_chi2(total, lam)

    kept = {0.25: [], 0.5: []}
    dropped = {0.25: [], 0.5: []}
    nested = True
    for i in range(trials):
        nu = pp.sample_marked(W2, (seed, 8, 2, i), SPEC)
        parts = {c: pp.thin_split(nu, c) for c in kept}
        for c, (k, d) in parts.items():
            kept[c].append(len(k))
            dropped[c].append(len(d))
        small, large = parts[0.25][0].multiset(), parts[0.5][0].multiset()
        nested &= all(large[a] >= n for a, n in small.items())
    details = {"superpose_p": p_sup, "nested": nested}
    ok = p_sup > P_MIN and nested
    for c in kept:
        _, p, _ = poisson_chi2(kept[c], c * float(W2.mass))
        r, se = correlation(kept[c], dropped[c])
        details[f"thin_{c}"] = {"p": p, "corr": r, "se": se}
        ok &= p > P_MIN and within(r, 0.0, se)
    return ok, details


@_timed(9, "Non-mixing: exact autocorrelations along n_j", 120.0)
def nonmixing(seed):
    A = RegionSet((Rectangle.build(0, 1, 1, SPEC),))
    exact = riesz.nonmixing_sequence(A, SPEC, 4)
    normalized = [v.normalized for v in exact]
    golden_ok = normalized == NONMIXING_GOLDEN["normalized"]
    bounded_ok = all(x >= NONMIXING_GOLDEN["threshold"] for x in normalized[1:])
    routes_ok = True
    mc = []
    mc_ok = True
    for j, v in enumerate(exact):
        lag = SPEC.n(j)
        pre = riesz.autocorr_exact(A, lag, SPEC, method="preimage")
        routes_ok &= pre.value <= v.value <= pre.value + pre.tail_bound
        source = A | A.preimage(SPEC, lag)
        xs, ys = [], []
        for i in range(10_000):
            nu = pp.sample_poisson(source, (seed, 9, j, i), SPEC)
            xs.append(pp.count(nu, A))
            ys.append(pp.count(pp.pushforward(nu, lag, SPEC), A))
        cov, se = covariance(xs, ys)
        mc.append({"lag": lag, "cov": cov, "se": se, "exact": v.value})
        mc_ok &= within(cov, float(v.value), se)
    ok = golden_ok and bounded_ok and routes_ok and mc_ok
    return ok, {"normalized": normalized, "threshold": NONMIXING_GOLDEN["threshold"],
                "routes_agree": routes_ok, "monte_carlo": mc}


@_timed(10, "Singularity evidence for sigma^{*1} vs sigma^{*2}", 60.0)
def singularity(seed):
    levels = (4, 6, 8, 10)
    rep = riesz.singularity_evidence(SPEC, 1, 2, levels)
    step = (Fraction(1) - Fraction(1, 2)) ** 2
    linear = all(s == J * step for s, J in zip(rep.divergence, levels))
    ok = rep.monotone and rep.overlaps[-1] < 0.5 and linear
    return ok, rep.to_dict()


CRITERIA = [
    riesz_coefficients,
    dissociation,
    window_counts,
    mecke,
    fock_structure,
    chaos_orthogonality,
    measure_preservation,
    superposition_thinning,
    nonmixing,
    singularity,
]


def run_all(seed: int = 42, only: list[int] | None = None) -> list[CheckResult]:
    return [c(seed) for c in CRITERIA if only is None or c.number in only]
