import itertools
from fractions import Fraction

import numpy as np
import pytest

from suspension_lab import point_process as pp
from suspension_lab.fock import (
    I1,
    Const,
    Count,
    Product,
    Scale,
    SimpleFunction,
    Sum,
    diff1,
    diffn,
    equivalent,
    evaluate,
    mecke_check,
    project_n,
    shifted_difference,
    simplify,
)
from suspension_lab.odometer import BitSource, GrowthSpec, LazyWord, Rectangle, TowerPoint, window
from suspension_lab.stats import within

SPEC = GrowthSpec()
W = window(3, spec=SPEC)
A = Rectangle.build(0, 1, 1, SPEC)
B = Rectangle.build(1, 1, 2, SPEC)
C = Rectangle.build("110", 1, 3, SPEC)


def point(rect, level=None, key=0):
    return TowerPoint(LazyWord(rect.prefix, BitSource(7, (key,))), rect.lo if level is None else level)


def configs(n, seed=0):
    return [pp.sample_poisson(W, (seed, i), SPEC) for i in range(n)]


def test_simple_function_rejects_overlap():
    with pytest.raises(ValueError):
        SimpleFunction(((1, B), (2, Rectangle((1,), 2, 2))))


def test_simple_function_value_and_integral():
    f = SimpleFunction(((Fraction(3, 2), A), (-1, C)))
    assert f.value(point(A)) == Fraction(3, 2)
    assert f.value(point(B)) == 0
    assert f.integral == Fraction(3, 4) - Fraction(3, 8)


def test_count_with_added_point():
    empty = pp.CountingMeasure.empty(W)
    assert evaluate(Count(A), empty, [point(A)]) == 1
    assert evaluate(Count(A), empty, [point(B)]) == 0


def test_first_integral_is_compensated_count():
    F = I1(SimpleFunction.indicator(A))
    for nu in configs(50):
        assert evaluate(F, nu) == pp.count(nu, A) - float(A.measure)


def test_linearity_of_evaluation():
    F, G = Count(B), I1(SimpleFunction(((2, A), (1, C))))
    for nu in configs(50, 1):
        lhs = evaluate(Sum((Scale(3, F), Scale(-2, G))), nu)
        assert lhs == pytest.approx(3 * evaluate(F, nu) - 2 * evaluate(G, nu), abs=1e-12)


def test_diff1_leaf_rules():
    y = point(A)
    assert diff1(Count(A), y) == Const(1)
    assert diff1(Count(B), y) == Const(0)
    assert diff1(Const(5), y) == Const(0)
    f = SimpleFunction(((Fraction(1, 3), A),))
    assert diff1(I1(f), y) == Const(Fraction(1, 3))


def test_diff1_of_first_integral_on_random_configurations():
    f = SimpleFunction(((Fraction(3, 2), A), (-2, C)))
    F = I1(f)
    rng = np.random.default_rng(3)
    for i, nu in enumerate(configs(1000, 2)):
        r = W.parts[int(rng.integers(0, 4))]
        y = pp.sample_point(r, rng, BitSource(8, (i,)))
        assert evaluate(diff1(F, y), nu) == pytest.approx(float(f.value(y)), abs=1e-12)
        assert shifted_difference(F, nu, [y]) == pytest.approx(float(f.value(y)), abs=1e-12)


def test_diff1_of_product_matches_brute_force():
    F = Product((Count(A), I1(SimpleFunction(((2, B), (1, C))))))
    for y in (point(A), point(B), point(C, 2)):
        D = diff1(F, y)
        for nu in configs(40, 4):
            assert evaluate(D, nu) == pytest.approx(shifted_difference(F, nu, [y]), abs=1e-12)


def test_diffn_of_count_vanishes():
    for ys in itertools.product([point(A), point(B)], repeat=2):
        assert diffn(Count(A), list(ys)) == Const(0)


def test_diffn_of_disjoint_product():
    f = SimpleFunction(((1, A), (Fraction(1, 2), B)))
    g = SimpleFunction(((-1, C),))
    F = Product((I1(f), I1(g)))
    for y1, y2 in itertools.product([point(A), point(B), point(C, 3)], repeat=2):
        want = f.value(y1) * g.value(y2) + g.value(y1) * f.value(y2)
        assert diffn(F, [y1, y2]) == simplify(Const(want))


def test_diffn_permutation_invariance():
    F = Product((Count(A), Count(B), I1(SimpleFunction(((1, C),)))))
    ys = [point(A), point(B, 2), point(C, 2)]
    for nu in configs(10, 5):
        ref = evaluate(diffn(F, ys), nu)
        for perm in itertools.permutations(ys):
            assert evaluate(diffn(F, list(perm)), nu) == pytest.approx(ref, abs=1e-12)
            assert shifted_difference(F, nu, list(perm)) == pytest.approx(ref, abs=1e-12)


def test_simplify_and_equivalent():
    F = Sum((Product((Count(A), Const(2))), Scale(-1, Count(A)), Const(0)))
    assert simplify(F) == Count(A)
    assert equivalent(Count(A) * Count(B), Count(B) * Count(A))
    assert not equivalent(Count(A), Count(B))


def test_operators_build_trees():
    F = 2 * Count(A) - 1
    nu = pp.sample_poisson(W, (9, 0), SPEC)
    assert F(nu) == 2 * pp.count(nu, A) - 1


def test_project_zero_of_count():
    est = project_n(Count(B), [], W, 20_000, (11,), SPEC)
    assert not est.exact
    assert within(est.estimate, float(B.measure), est.standard_error)


def test_project_one_of_first_integral_is_exact():
    f = SimpleFunction(((Fraction(5, 4), A),))
    est = project_n(I1(f), [point(A)], W, 10, 12, SPEC)
    assert est.exact and est.standard_error == 0
    assert est.estimate == 1.25


def test_project_two_of_disjoint_product():
    f, g = SimpleFunction(((1, A),)), SimpleFunction(((3, B),))
    est = project_n(I1(f) * I1(g), [point(A), point(B)], W, 50, 13, SPEC)
    assert est.estimate == pytest.approx(3.0, abs=1e-12)


def test_project_needs_trials():
    with pytest.raises(ValueError):
        project_n(Count(A), [], W, 1, 0, SPEC)


@pytest.mark.parametrize(
    "g,f,expected",
    [
        (Const(1), SimpleFunction.indicator(B), float(B.measure)),
        (Count(A), SimpleFunction.indicator(B), float(A.measure * B.measure)),
        (Count(A), SimpleFunction.indicator(A), float(A.measure**2 + A.measure)),
    ],
)
def test_mecke_pairs(g, f, expected):
    rep = mecke_check(g, f, window(2, spec=SPEC), 20_000, (14,), SPEC)
    assert rep.z <= 3
    assert within(rep.lhs, expected, rep.se_lhs)
    assert abs(rep.rhs - expected) <= 3 * rep.se_rhs + 1e-12
    assert set(rep.to_dict()) == {"lhs", "rhs", "se_lhs", "se_rhs", "z", "trials"}


def test_mecke_constant_rhs_is_exact():
    rep = mecke_check(Const(1), SimpleFunction.indicator(B), window(2, spec=SPEC), 100, 15, SPEC)
    assert rep.rhs == float(B.measure)
    assert rep.se_rhs == 0
