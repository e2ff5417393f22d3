"""
Riesz products and the failure of mixing
========================================

The maximal spectral type of the tower is a generalized Riesz product whose
Fourier coefficient at every n_j is exactly 1/2.
"""
from suspension_lab import GrowthSpec, Rectangle, RegionSet, coeff_at, singularity_evidence
from suspension_lab.riesz import nonmixing_sequence

spec = GrowthSpec()
print("sigma^(n_j):", [str(coeff_at(spec, spec.n(j))) for j in range(8)])
print("sigma^(5):", coeff_at(spec, 5), "(5 = 9 - 3 - 1)")

A = RegionSet((Rectangle.build(0, 1, 1, spec),))
for v in nonmixing_sequence(A, spec, 6):
    print(f"lag {v.lag:4d}: mu(A & T^-lag A) / mu(A) = {v.normalized}")

rep = singularity_evidence(spec, 1, 2, [4, 6, 8, 10, 12])
for J, s, o in zip(rep.levels, rep.divergence, rep.overlaps):
    print(f"J={J:2d}  S_J={str(s):>4}  overlap={o:.4f}")
