"""
The rank-one tower and its finite windows
=========================================

Column class k is the cylinder of words starting 1^k 0, and has height h_k.
The map T climbs one level, or jumps to the floor of the next column at the top.
"""
from fractions import Fraction

from suspension_lab import GrowthSpec, LazyWord, Rectangle, RegionSet, TowerPoint, apply_T, window, window_mass
from suspension_lab.odometer import BitSource

spec = GrowthSpec((3,))
print("n_j:", spec.ns(6))
print("h_k:", spec.hs(6))

# follow one point for a while; bits past the prefix come from a seeded stream
p = TowerPoint(LazyWord.from_bits("10", BitSource(0, (1,))), 1)
for _ in range(6):
    print(p.word.prefix(4), p.level)
    p = apply_T(p, spec)

# the window {level <= L} has finite mass, growing without bound in L
for L in (1, 2, 5, 14):
    tracked, tail = window_mass(L, spec)
    print(f"mu(X_{L}) = {tracked + tail}  (tail beyond class 30: {float(tail):.1e})")

# T preserves measure: images are exact, preimages carry a dyadic tail
r = Rectangle.build("110", 2, 5, spec)
img = RegionSet((r,)).image(spec, 7)
pre = RegionSet((r,)).preimage(spec, 7)
print(r.label(), r.measure, "->", img.labels(), img.mass)
print("preimage mass + tail:", pre.mass + pre.tail_bound == r.measure)
X2 = window(2, spec=spec)
print(f"X_2 as {len(X2)} column slices, tracked {X2.mass}, tail {X2.tail_bound}")
print("exact total:", X2.mass + X2.tail_bound == Fraction(3, 2))
