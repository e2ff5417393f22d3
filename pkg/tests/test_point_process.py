from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from suspension_lab import point_process as pp
from suspension_lab.odometer import GrowthSpec, Rectangle, RegionSet, TruncationExceeded, window
from suspension_lab.stats import correlation, covariance, moments, poisson_chi2, within

SPEC = GrowthSpec()
W1 = window(1, spec=SPEC)
W2 = window(2, spec=SPEC)
A = Rectangle.build(0, 1, 1, SPEC)
B = Rectangle.build(1, 1, 2, SPEC)


def test_sampling_is_deterministic():
    a = pp.sample_poisson(W2, (5, 1), SPEC)
    b = pp.sample_poisson(W2, (5, 1), SPEC)
    assert a.atoms == b.atoms
    assert pp.to_jsonl(a) == pp.to_jsonl(b)
    assert pp.sample_poisson(W2, (5, 2), SPEC).seed_trace == (5, 2)


def test_trials_do_not_depend_on_run_order():
    batch = pp.sample_trials(W2, 11, 20, SPEC)
    assert pp.sample_poisson(W2, (11, 13), SPEC).atoms == batch[13].atoms


def test_atoms_lie_in_region():
    for i in range(200):
        nu = pp.sample_poisson(W2, (3, i), SPEC)
        assert all(W2.contains(a) for a in nu.atoms)
        for a in nu.atoms:
            a.check(SPEC)


def test_empty_region_raises():
    with pytest.raises(pp.EmptyRegion):
        pp.sample_poisson(RegionSet(), 1, SPEC)


def test_window_one_counts_are_poisson_one():
    counts = [len(pp.sample_poisson(W1, (17, i), SPEC)) for i in range(100_000)]
    mo = moments(counts)
    assert within(mo.mean, 1.0, mo.se_mean)
    assert within(mo.var, 1.0, mo.se_var)


def test_disjoint_counts_uncorrelated():
    xs, ys = [], []
    for i in range(20_000):
        nu = pp.sample_poisson(W2, (19, i), SPEC)
        xs.append(pp.count(nu, A))
        ys.append(pp.count(nu, B))
    cov, se = covariance(xs, ys)
    assert within(cov, 0.0, se)


def test_count_mean_matches_measure():
    region = RegionSet((B,))
    counts = [pp.count(pp.sample_poisson(W2, (23, i), SPEC), region) for i in range(100_000)]
    mo = moments(counts)
    assert within(mo.mean, float(B.measure), mo.se_mean)


def test_count_basics():
    empty = pp.CountingMeasure.empty(W1)
    assert pp.count(empty, A) == 0
    nu = pp.sample_poisson(W2, (29, 4), SPEC)
    both = RegionSet((A,)) | RegionSet((B,))
    assert pp.count(nu, both) == pp.count(nu, A) + pp.count(nu, B)


def test_superpose_identity_and_additivity():
    a = pp.sample_poisson(W1, (31, 0), SPEC)
    assert pp.superpose(a, pp.CountingMeasure.empty()) is a
    b = pp.sample_poisson(W2, (31, 1), SPEC)
    s = pp.superpose(a, b)
    for r in (A, B, Rectangle((1, 1), 1, 1)):
        assert pp.count(s, r) == pp.count(a, r) + pp.count(b, r)
    assert s.support.mass == W2.mass


def test_superpose_rejects_shared_seed():
    a = pp.sample_poisson(W1, (37, 0), SPEC)
    with pytest.raises(pp.SeedCollision):
        pp.superpose(a, pp.sample_poisson(W2, (37, 0), SPEC))


def test_superposition_of_two_unit_windows():
    counts = []
    for i in range(100_000):
        a = pp.sample_poisson(W1, (41, 0, i), SPEC)
        b = pp.sample_poisson(W1, (41, 1, i), SPEC)
        counts.append(len(pp.superpose(a, b)))
    _, p, _ = poisson_chi2(counts, 2.0)
    assert p > 1e-3


def test_thin_full_level_keeps_everything():
    nu = pp.sample_marked(W2, (43, 0), SPEC)
    assert pp.thin(nu, 1).atoms == nu.atoms
    with pytest.raises(ValueError):
        pp.thin(nu, 0)


def test_thin_half_on_unit_window():
    kept, dropped = [], []
    for i in range(100_000):
        k, d = pp.thin_split(pp.sample_marked(W1, (47, i), SPEC), 0.5)
        kept.append(len(k))
        dropped.append(len(d))
    _, p, _ = poisson_chi2(kept, 0.5)
    assert p > 1e-3
    r, se = correlation(kept, dropped)
    assert within(r, 0.0, se)


def test_thinning_is_nested():
    for i in range(500):
        nu = pp.sample_marked(W2, (53, i), SPEC)
        small, large = Counter(pp.thin(nu, 0.2).atoms), Counter(pp.thin(nu, 0.7).atoms)
        assert all(large[a] >= n for a, n in small.items())


def test_pushforward_zero_is_identity():
    nu = pp.sample_poisson(W2, (59, 0), SPEC)
    assert pp.pushforward(nu, 0, SPEC) is nu


def test_pushforward_equivariance():
    rects = [A, B, Rectangle((1, 1, 0), 2, 4)]
    for i in range(200):
        nu = pp.sample_poisson(window(5, spec=SPEC), (61, i), SPEC)
        for r in rects:
            for steps in (1, 4, 13):
                moved = pp.pushforward(nu, steps, SPEC)
                target = RegionSet((r,)).image(SPEC, steps)
                assert pp.count(moved, target) == pp.count(nu, r)


def test_pushforward_support_is_transported():
    nu = pp.sample_poisson(W2, (67, 0), SPEC)
    moved = pp.pushforward(nu, 7, SPEC)
    assert moved.support.mass == W2.mass
    assert all(moved.support.contains(a) for a in moved.atoms)
    back = pp.pushforward(nu, -3, SPEC)
    assert back.support.mass + back.support.tail_bound - W2.tail_bound == W2.mass


def test_pushforward_backwards_needs_truncation():
    deep = RegionSet((Rectangle((0,) * 8, 1, 1),))
    nu = pp.sample_poisson(deep, (71, 0), SPEC)
    with pytest.raises(TruncationExceeded):
        pp.pushforward(nu, -1, SPEC, K=5)


def test_transported_window_stays_poisson():
    lag = 9
    source = W2 | W2.preimage(SPEC, lag)
    counts = [pp.count(pp.pushforward(pp.sample_poisson(source, (73, i), SPEC), lag, SPEC), W2)
              for i in range(10_000)]
    mo = moments(counts)
    lam = float(W2.mass)
    assert within(mo.mean, lam, mo.se_mean)
    assert within(mo.var, lam, mo.se_var)


def test_jsonl_roundtrip():
    nu = pp.sample_marked(W2, (79, 2), SPEC)
    text = pp.to_jsonl(nu)
    again = pp.from_jsonl(text)
    assert again.atoms == nu.atoms
    assert again.marks == nu.marks
    assert again.support == nu.support
    lines = text.splitlines()
    assert len(lines) == len(nu) + 1
    if len(nu):
        assert '"level": "' in lines[1]


def test_huge_levels_are_sampled_exactly():
    spec = GrowthSpec()
    top = spec.h(60)
    assert top > 2**90
    deep = Rectangle((1,) * 60 + (0,), top - 2**70, top)
    region = RegionSet((deep,))
    levels = [a.level for i in range(200) for a in pp.sample_poisson(region, (83, i), spec).atoms]
    assert deep.measure == Fraction(2**70 + 1, 2**61)
    assert levels and all(top - 2**70 <= v <= top for v in levels)
    assert len(set(levels)) == len(levels)


def test_trial_rng_streams_are_distinct():
    x = pp.trial_rng((1, 2), 0).random(4)
    y = pp.trial_rng((1, 2), 1).random(4)
    assert not np.allclose(x, y)
