import numpy as np
import pytest

from critlab.cantor import CantorMap, build_schedule
from critlab.dimension import box_dimension_of_set, fit_slope, near_critical_dimension, product_counts
from critlab.folding import FoldingMap
from critlab.maps import PowerProfile, RadialMap
from critlab.regimes import RegimeParams
from critlab.verify import (ApproxCheckConfig, degree_2d, distortion, folding_signed_count, injectivity_scan,
                            mollify_and_check, sign_constancy_scan)

IDENTITY = RadialMap(PowerProfile(1, 1), 2)


@pytest.mark.parametrize("d,a", [(1, 1), (1.5, 0.5)])
def test_cantor_q_slope_exact(d, a):
    rep = box_dimension_of_set(build_schedule(RegimeParams(2, 3, a, d), 5), "Q")
    assert rep.slope == pytest.approx(d, abs=1e-12)


def test_cantor_r_slope_reported():
    rep = box_dimension_of_set(build_schedule(RegimeParams(2, 3, 1, 1), 5), "R")
    assert np.isfinite(rep.slope) and rep.target_d is None


def test_fit_slope_needs_three_scales():
    with pytest.raises(ValueError):
        fit_slope([0.5, 0.25], [2, 4])


def test_product_additivity():
    sides = [2.0 ** -j for j in range(2, 8)]
    a = [2 ** j for j in range(2, 8)]
    b = [round(2 ** (0.5 * j)) for j in range(2, 8)]
    sa, sb = fit_slope(sides, a)[0], fit_slope(sides, b)[0]
    assert fit_slope(sides, product_counts(a, b))[0] == pytest.approx(sa + sb, abs=0.1)


def test_near_critical_folding_line():
    m = FoldingMap(2, 3, 1)
    alpha = m.alpha
    rep = near_critical_dimension(m, 9, lambda j, side: 2 * alpha * side ** (alpha - 1), rule_text="crease")
    assert rep.slope == pytest.approx(1.0, abs=0.15)


def test_near_critical_none_flagged():
    rep = near_critical_dimension(IDENTITY, 6, lambda j, side: 0.5)
    assert rep.counts[-1] == 0 and "undefined" in rep.flagged


def test_identity_checks():
    assert injectivity_scan(IDENTITY, 64).verdict == "injective-on-sample"
    assert degree_2d(IDENTITY, [0.2, 0.1]) == 1
    assert degree_2d(IDENTITY, [3.0, 0.0]) == 0
    assert sign_constancy_scan(IDENTITY, 32).pos_fraction == 1.0
    assert distortion(IDENTITY, [0.3, 0.4]) == pytest.approx(1.0)
    min_jac, inj = mollify_and_check(IDENTITY, ApproxCheckConfig(0.1, 0.0, 0.02), [0.2, 0.2], [0.5, 0.5], 32)
    assert min_jac == pytest.approx(1.0) and inj


def test_distortion_examples():
    assert distortion(RadialMap(PowerProfile(2, 1), 2), [0.3, 0.4]) == pytest.approx(2.0)
    assert distortion(FoldingMap(2, 3, 1), [0.0, 0.2]) == 1.0


def test_degree_too_close():
    with pytest.raises(ValueError):
        degree_2d(IDENTITY, [0.999, 0.0])


def test_folding_degree_matches_signed_count():
    m = FoldingMap(2, 3, 1)
    rng = np.random.default_rng(7)
    for y in rng.uniform(-0.8, 0.8, (10, 2)):
        assert degree_2d(m, y) == folding_signed_count(m, y) == 1


def test_mollify_cantor_and_radius_trend():
    m = CantorMap(build_schedule(RegimeParams(2, 3, 1, 1), 4))
    lo, hi = [-0.95, 0.1], [-0.8, 0.9]
    vals = [mollify_and_check(m, ApproxCheckConfig(0.1, 0.0, r), lo, hi, 24) for r in (0.04, 0.02, 0.01)]
    assert all(inj for _, inj in vals)
    assert all(v >= 0.1 for v, _ in vals)
    assert vals[2][0] >= vals[0][0] - 1e-9
