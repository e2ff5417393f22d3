from fractions import Fraction

import numpy as np
import pytest

from suspension_lab import point_process as pp
from suspension_lab.acceptance import NONMIXING_GOLDEN
from suspension_lab.odometer import GrowthSpec, Rectangle, RegionSet, window
from suspension_lab.riesz import (
    GridTooCoarse,
    LevelTooLarge,
    OutOfRange,
    autocorr_exact,
    coeff_at,
    convolution_power_coeffs,
    default_grid_size,
    dissociation_collisions,
    generalized_coeffs,
    grid_density,
    nonmixing_sequence,
    overlap,
    partial_coeffs,
    partial_density,
    signed_digits,
    singularity_evidence,
    write_density_csv,
)
from suspension_lab.stats import covariance, within

SPEC = GrowthSpec()
HALF = Fraction(1, 2)
A = RegionSet((Rectangle.build(0, 1, 1, SPEC),))


def test_empty_product():
    assert partial_coeffs(SPEC, 0).coeffs == {0: Fraction(1)}


def test_level_two_coefficients():
    c = partial_coeffs(SPEC, 2)
    for k in (1, 3):
        assert c[k] == c[-k] == HALF
    for k in (2, 4):
        assert c[k] == c[-k] == Fraction(1, 4)
    assert c[0] == 1
    assert c[5] == 0


@pytest.mark.parametrize("J", [1, 4, 8])
def test_coefficient_half_at_every_nj(J):
    c = partial_coeffs(SPEC, J)
    assert all(c[SPEC.n(j)] == HALF for j in range(J))


@pytest.mark.parametrize("J", [0, 3, 7])
def test_symmetry_and_total(J):
    c = partial_coeffs(SPEC, J)
    assert c.is_symmetric()
    assert c.total() == 1


def test_coefficient_level_cap():
    with pytest.raises(LevelTooLarge):
        partial_coeffs(SPEC, 19)


def test_coeff_at_examples():
    assert coeff_at(SPEC, 0) == 1
    assert all(coeff_at(SPEC, SPEC.n(j)) == HALF for j in range(20))
    assert coeff_at(SPEC, 2) == Fraction(1, 4)
    # no representation with the first two frequencies
    assert coeff_at(SPEC, 5, 2) == 0
    # the full product represents 5 = 9 - 3 - 1
    assert signed_digits(SPEC, 5, 3) == [-1, -1, 1]
    assert coeff_at(SPEC, 5) == Fraction(1, 8)


def test_coeff_at_range():
    with pytest.raises(OutOfRange):
        coeff_at(SPEC, 9, 2)


def test_coeff_at_agrees_with_expansion():
    c = partial_coeffs(SPEC, 6)
    for k in range(-SPEC.n(6) + 1, SPEC.n(6)):
        assert coeff_at(SPEC, k, 6) == c[k]


def test_dissociation_small_levels():
    assert [dissociation_collisions(SPEC, J) for J in range(9)] == [0] * 9
    # mixed multipliers stay dissociated
    assert dissociation_collisions(GrowthSpec((4, 3)), 6) == 0


def test_convolution_power():
    assert convolution_power_coeffs(SPEC, 1, 5).coeffs == partial_coeffs(SPEC, 5).coeffs
    c2 = convolution_power_coeffs(SPEC, 2, 5)
    assert all(c2[SPEC.n(j)] == Fraction(1, 4) for j in range(5))
    assert c2[SPEC.n(0) + SPEC.n(1)] == Fraction(1, 16)
    c3 = convolution_power_coeffs(SPEC, 3, 4)
    assert c3[SPEC.n(2)] == Fraction(1, 8)


def test_generalized_weight():
    c = generalized_coeffs(SPEC, 3, Fraction(1, 4))
    assert c[1] == Fraction(1, 4)
    assert c.total() == 1


def test_density_nonnegative_and_normalized():
    J = 6
    N = default_grid_size(SPEC, J)
    k = np.arange(N)
    for p in (1, 2):
        f = grid_density(SPEC, p, J, k, N)
        assert f.min() >= -1e-12
        assert f.mean() == pytest.approx(1.0, abs=1e-9)


def test_grid_density_matches_direct_evaluation():
    J, N = 5, default_grid_size(SPEC, 5)
    k = np.arange(0, N, 7)
    assert np.allclose(grid_density(SPEC, 1, J, k, N), partial_density(SPEC, 1, J, k / N), atol=1e-9)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        overlap(SPEC, 1, 2, 6, grid_size=64)


def test_overlap_of_equal_measures():
    for J in (2, 5):
        assert overlap(SPEC, 2, 2, J) == pytest.approx(1.0, abs=1e-9)
    rep = singularity_evidence(SPEC, 3, 3, [4, 6])
    assert rep.overlaps == (1.0, 1.0)


def test_divergence_witness_exact():
    rep = singularity_evidence(SPEC, 1, 3, [2, 5])
    step = (1 - Fraction(1, 4)) ** 2
    assert rep.divergence == (2 * step, 5 * step)


def test_overlap_decreases():
    rep = singularity_evidence(SPEC, 1, 2, [4, 6, 8, 10])
    assert rep.monotone
    assert rep.overlaps[-1] < rep.overlaps[0]
    assert rep.overlaps[-1] < 0.5
    assert rep.divergence == tuple(Fraction(J, 4) for J in (4, 6, 8, 10))


def test_density_csv(tmp_path):
    path = tmp_path / "density.csv"
    rows = write_density_csv(path, SPEC, 1, 2, 3)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,f_1,f_2"
    assert len(lines) == rows + 1


def test_autocorr_lag_zero_and_bound():
    assert autocorr_exact(A, 0, SPEC).value == A.mass
    W = window(3, spec=SPEC)
    for lag in (1, 2, 5, 14, 40):
        v = autocorr_exact(W, lag, SPEC)
        assert 0 <= v.value <= W.mass


def test_autocorr_routes_agree():
    for lag in (1, 3, 9, 27):
        img = autocorr_exact(A, lag, SPEC)
        pre = autocorr_exact(A, lag, SPEC, method="preimage")
        assert img.tail_bound == 0
        assert pre.value <= img.value <= pre.value + pre.tail_bound


def test_nonmixing_golden_values():
    seq = nonmixing_sequence(A, SPEC, 4)
    assert [v.lag for v in seq] == NONMIXING_GOLDEN["lags"]
    assert [v.normalized for v in seq] == NONMIXING_GOLDEN["normalized"]


def test_nonmixing_persists_at_higher_levels():
    for v in nonmixing_sequence(A, SPEC, 7)[1:]:
        assert v.normalized == HALF
    # the mixing limit for an infinite invariant measure is 0
    assert min(v.normalized for v in nonmixing_sequence(A, SPEC, 4)[1:]) >= NONMIXING_GOLDEN["threshold"] > 0


def test_nonmixing_other_growth():
    spec = GrowthSpec((4, 5, 3))
    base = RegionSet((Rectangle.build(0, 1, 1, spec),))
    assert [v.normalized for v in nonmixing_sequence(base, spec, 4)[1:]] == [HALF] * 4


def test_autocorr_matches_monte_carlo():
    lag = 9
    source = A | A.preimage(SPEC, lag)
    xs, ys = [], []
    for i in range(10_000):
        nu = pp.sample_poisson(source, (5, i), SPEC)
        xs.append(pp.count(nu, A))
        ys.append(pp.count(pp.pushforward(nu, lag, SPEC), A))
    cov, se = covariance(xs, ys)
    assert within(cov, float(autocorr_exact(A, lag, SPEC).value), se)
