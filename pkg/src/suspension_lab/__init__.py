"""Poisson suspensions of a rank-one infinite-measure tower.

Submodules:

* :mod:`~suspension_lab.odometer`: the Kakutani tower over the odometer, its
  transformation ``T`` and exact finite-measure regions.
* :mod:`~suspension_lab.point_process`: seeded Poisson configurations and their
  transport, superposition and thinning.
* :mod:`~suspension_lab.fock`: polynomial observables and difference operators.
* :mod:`~suspension_lab.oracle`: exact expectations on a finite ground set.
* :mod:`~suspension_lab.riesz`: Riesz product coefficients, densities and
  autocorrelations.
"""
from .odometer import (
    CapExceeded,
    GrowthSpec,
    InfeasibleRectangle,
    LazyWord,
    Rectangle,
    RegionSet,
    TowerPoint,
    TruncationExceeded,
    apply_T,
    apply_T_inv,
    iterate_T,
    window,
    window_mass,
)
from .point_process import (
    CountingMeasure,
    MarkedCountingMeasure,
    pushforward,
    sample_marked,
    sample_poisson,
    superpose,
    thin,
)
from .fock import I1, Const, Count, SimpleFunction, diff1, diffn, evaluate, mecke_check, project_n
from .oracle import FiniteGround, exact_expect, oracle_chaos_orthogonality, oracle_mecke, oracle_projection
from .riesz import autocorr_exact, coeff_at, overlap, partial_coeffs, singularity_evidence
from .parser import parse_observable, parse_region, parse_simple

__version__ = "0.1.0"

__all__ = [
    "CapExceeded", "GrowthSpec", "InfeasibleRectangle", "LazyWord", "Rectangle", "RegionSet",
    "TowerPoint", "TruncationExceeded", "apply_T", "apply_T_inv", "iterate_T", "window",
    "window_mass", "CountingMeasure", "MarkedCountingMeasure", "pushforward", "sample_marked",
    "sample_poisson", "superpose", "thin", "I1", "Const", "Count", "SimpleFunction", "diff1",
    "diffn", "evaluate", "mecke_check", "project_n", "FiniteGround", "exact_expect",
    "oracle_chaos_orthogonality", "oracle_mecke", "oracle_projection", "autocorr_exact",
    "coeff_at", "overlap", "partial_coeffs", "singularity_evidence", "parse_observable",
    "parse_region", "parse_simple",
]
