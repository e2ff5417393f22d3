from fractions import Fraction

import pytest

from suspension_lab.fock import I1, Const, Product, Scale, Sum
from suspension_lab.oracle import (
    EnumerationTooLarge,
    FiniteGround,
    exact_expect,
    oracle_chaos_orthogonality,
    oracle_mecke,
    oracle_projection,
)

MASSES = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))


@pytest.fixture(scope="module")
def G():
    return FiniteGround(MASSES, count_cap=20)


def close(e, target):
    return abs(e.value - target) <= e.bound + 1e-12


def test_ground_validation():
    with pytest.raises(ValueError):
        FiniteGround((Fraction(1), Fraction(0)))
    with pytest.raises(IndexError):
        FiniteGround(MASSES).atoms([4])


def test_tail_bound_is_tiny(G):
    assert 0 < G.tail_bound < 1e-10


def test_moments_match_closed_forms(G):
    assert G.moment(1, 2) == pytest.approx(1 + 1)
    assert G.moment(3, 3) == pytest.approx(8 + 3 * 4 + 2)
    assert G.tail_moment(0, 2) < 1e-15


def test_mean_and_second_moment(G):
    assert close(exact_expect(G.count([0]), G), 0.5)
    N1 = G.count([0])
    assert close(exact_expect(N1 * N1, G), 0.25 + 0.5)


def test_independence_of_coordinates(G):
    F = Product((Sum((G.count([0]), Const(-0.5))), Sum((G.count([1]), Const(-1)))))
    assert close(exact_expect(F, G), 0.0)


def test_expect_with_extra_atoms(G):
    assert close(exact_expect(G.count([2]), G, extra=[2, 2]), 1.5 + 2)


def test_mecke_identities(G):
    one = oracle_mecke(G, h=lambda i: Const(1))
    assert one.holds and abs(one.lhs - 5.0) < 1e-10
    off = oracle_mecke(G, h=lambda i: G.count([j for j in range(4) if j != i]))
    lam = [float(x) for x in MASSES]
    want = sum(li * lj for i, li in enumerate(lam) for j, lj in enumerate(lam) if i != j)
    assert off.holds and abs(off.rhs - want) < 1e-10
    diag = oracle_mecke(G, h=lambda i: G.count([i]))
    assert diag.holds and abs(diag.rhs - sum(l * (l + 1) for l in lam)) < 1e-10
    assert max(one.bound, off.bound, diag.bound) < 1e-10


def test_mecke_product_form(G):
    res = oracle_mecke(G, g=G.count([0]), f={0: 1, 2: Fraction(1, 2)})
    assert res.holds
    with pytest.raises(ValueError):
        oracle_mecke(G, g=Const(1))


def test_projection_of_count(G):
    F = G.count([0, 2])
    p1 = oracle_projection(F, G, 1)
    assert [round(p1[(i,)].value, 12) for i in range(4)] == [1, 0, 1, 0]
    assert all(close(e, 0.0) for e in oracle_projection(F, G, 2).values())


def test_projection_of_disjoint_product(G):
    f, g = {0: 1, 1: Fraction(1, 2)}, {3: 2}
    F = G.i1(f) * G.i1(g)
    assert all(close(e, 0.0) for e in oracle_projection(F, G, 1).values())
    for (a, b), e in oracle_projection(F, G, 2).items():
        want = float(f.get(a, 0) * g.get(b, 0) + g.get(a, 0) * f.get(b, 0))
        assert close(e, want)


def test_projection_of_constant(G):
    assert close(oracle_projection(Const(3), G, 0)[()], 3.0)
    assert all(close(e, 0.0) for e in oracle_projection(Const(3), G, 2).values())


def test_isometry_and_centering(G):
    f, g = {0: 1, 1: 2}, {1: 3, 2: -1}
    assert close(exact_expect(G.i1(f), G), 0.0)
    want = sum(float(MASSES[i]) * f.get(i, 0) * g.get(i, 0) for i in range(4))
    assert close(exact_expect(G.i1(f) * G.i1(g), G), want)


def test_chaos_orthogonality(G):
    res = oracle_chaos_orthogonality(G.i1({0: 1}), G.i1({1: 1}) * G.i1({2: Fraction(-3, 2)}), G)
    assert close(res.inner, 0.0)
    assert all(close(e, 0.0) for e in res.leibniz.values())
    assert res.inner.bound < 1e-10


def test_second_chaos_is_not_orthogonal_to_itself(G):
    H = G.i1({1: 1}) * G.i1({2: 1})
    assert exact_expect(H * H, G).value == pytest.approx(1.0 * 1.5, abs=1e-10)


def test_enumeration_limit():
    big = FiniteGround(tuple(Fraction(1) for _ in range(8)), count_cap=20)
    with pytest.raises(EnumerationTooLarge):
        exact_expect(big.count([0]), big)


def test_scale_and_sum_nodes(G):
    F = Sum((Scale(2, G.count([1])), Const(1)))
    assert close(exact_expect(F, G), 3.0)
    assert close(exact_expect(I1(G.function({3: 1})), G), 0.0)
