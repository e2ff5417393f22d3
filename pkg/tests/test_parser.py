from fractions import Fraction

import pytest

from suspension_lab.fock import I1, Const, Count, Product, Scale, Sum, equivalent
from suspension_lab.odometer import GrowthSpec, Rectangle, RegionSet, window
from suspension_lab.oracle import FiniteGround
from suspension_lab.parser import ParseError, parse_observable, parse_region, parse_simple

SPEC = GrowthSpec()
A = Rectangle.build(0, 1, 1, SPEC)
B = Rectangle.build(1, 1, 2, SPEC)


def test_count_of_rectangle():
    assert parse_observable("N(C(0)[1..1])", SPEC) == Count(RegionSet((A,)))


def test_region_list_and_prefix():
    r = parse_region("C(0)[1..1], P(10)[1..2]", SPEC)
    assert r.mass == A.measure + B.measure
    assert parse_region("P()[1..1]", SPEC).mass == 1


def test_window_region():
    assert parse_region("W(2)", SPEC) == window(2, spec=SPEC)


def test_rational_numbers():
    f = parse_simple("1/4*C(0)[1..1] + 0.5*C(1)[1..2]", SPEC)
    assert [c for c, _ in f.terms] == [Fraction(1, 4), Fraction(1, 2)]


def test_precedence_and_unary_minus():
    F = parse_observable("2 + 3*N(C(0)[1..1]) - -N(C(1)[1..2])", SPEC)
    want = Sum((Const(2), Scale(3, Count(RegionSet((A,)))), Scale(-1, Scale(-1, Count(RegionSet((B,)))))))
    assert equivalent(F, want)


def test_product_of_integrals():
    F = parse_observable("I1(1*C(0)[1..1]) * (I1(2*C(1)[1..2]))", SPEC)
    assert isinstance(F, Product)
    assert all(isinstance(x, I1) for x in F.factors)


def test_ground_atoms():
    G = FiniteGround((Fraction(1), Fraction(2)))
    F = parse_observable("N({0,1}) * I1(3*{1})", ground=G)
    assert F.factors[0].region.indices == frozenset({0, 1})
    with pytest.raises(ParseError):
        parse_observable("N({0})", SPEC)


@pytest.mark.parametrize(
    "text",
    ["N(C(0)[1..1]", "N(C(1)[1..3])", "I1(C(0)[1..1])", "N(C(0)[1..1], C(0)[1..1])", "3 $ 4",
     "N(P(12)[1..1])", "I1(1*W(2))", ""],
)
def test_errors(text):
    with pytest.raises(ParseError):
        parse_observable(text, SPEC)


def test_error_reports_position():
    with pytest.raises(ParseError, match="at 4"):
        parse_observable("N(C(x", SPEC)
