"""
Poisson configurations on the tower
===================================

Samples are seeded by integer traces, so every trial can be reproduced alone.
"""
import numpy as np

from suspension_lab import point_process as pp
from suspension_lab import GrowthSpec, window
from suspension_lab.stats import moments, poisson_chi2

spec = GrowthSpec()
W1, W2 = window(1, spec=spec), window(2, spec=spec)

nu = pp.sample_poisson(W2, (2024, 0), spec)
print(pp.to_jsonl(nu).splitlines()[1:4])

counts = [len(pp.sample_poisson(W1, (2024, 1, i), spec)) for i in range(20_000)]
mo = moments(counts)
print(f"N(X_1): mean {mo.mean:.3f} +- {mo.se_mean:.3f}, var {mo.var:.3f} +- {mo.se_var:.3f}")
print("chi-square p against Poisson(1):", round(poisson_chi2(counts, 1.0)[1], 3))

# pushing a configuration forward and back returns the same atoms
moved = pp.pushforward(nu, 40, spec)
print("round trip exact:", pp.pushforward(moved, -40, spec).atoms == nu.atoms)

# thinning by marks splits into two independent Poisson configurations
kept, dropped = zip(*(map(len, pp.thin_split(pp.sample_marked(W2, (2024, 2, i), spec), 0.25))
                      for i in range(20_000)))
print("kept mean", np.mean(kept), "expected", 0.25 * float(W2.mass))
print("corr(kept, dropped)", round(np.corrcoef(kept, dropped)[0, 1], 4))
