"""
Difference operators, chaos projections and Mecke's formula
===========================================================

Observables are small expression trees; adding a point acts on them exactly.
"""
from fractions import Fraction

from suspension_lab import FiniteGround, GrowthSpec, window
from suspension_lab import oracle_chaos_orthogonality, oracle_mecke, oracle_projection
from suspension_lab.fock import diffn, mecke_check
from suspension_lab.odometer import BitSource, LazyWord, TowerPoint
from suspension_lab.parser import parse_observable, parse_simple

spec = GrowthSpec()
F = parse_observable("I1(1*C(0)[1..1]) * I1(2*C(1)[1..2]) + N(C(2)[1..5])", spec)

# second differences of a product of disjoint integrals are constants
y1 = TowerPoint(LazyWord.from_bits("0", BitSource(1, (0,))), 1)
y2 = TowerPoint(LazyWord.from_bits("10", BitSource(1, (1,))), 2)
print("D2 F(y1, y2) =", diffn(F, [y1, y2]))

# Mecke by simulation
g = parse_observable("N(C(0)[1..1])", spec)
f = parse_simple("1*C(1)[1..2]", spec)
print(mecke_check(g, f, window(2, spec=spec), 20_000, 7, spec).to_dict())

# and exactly, on a four-atom ground set
G = FiniteGround((Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)))
print(oracle_mecke(G, h=lambda i: G.count([i])).to_dict())
P2 = oracle_projection(G.i1({0: 1}) * G.i1({3: 2}), G, 2)
print("P2 at (0, 3):", P2[(0, 3)].value, " at (0, 0):", P2[(0, 0)].value)
print(oracle_chaos_orthogonality(G.i1({1: 1}), G.i1({2: 1}) * G.i1({3: 1}), G).to_dict())
