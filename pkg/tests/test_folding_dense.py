import numpy as np
import pytest

from critlab.calculus import DiffConfig, fd_gradient, one_sided_hessian_norm
from critlab.dense import DenseMap, DenseProfile, choose_radii, dense_df_bound
from critlab.folding import FoldingMap, fold_alpha_window, folding_preimage_count


@pytest.fixture(scope="module")
def fold():
    return FoldingMap(2, 3, 1)


def test_alpha_window_and_rejection():
    assert fold_alpha_window(3, 1) == pytest.approx((5 / 3, 2.0))
    with pytest.raises(ValueError):
        FoldingMap(2, 3, 1, alpha=1.6)


def test_folding_examples(fold):
    for x2 in (-0.5, 0.0, 0.7):
        assert np.allclose(fold.value([-1.0, x2]), [-1.0, x2])
        assert fold.jac([0.0, x2]) == 0.0
    assert fold.jac([-0.25, 0.0]) < 0
    assert fold.in_negative_set(np.array([[-0.25, 0.0]]))[0]


def test_folding_gradient_matches_fd(fold):
    rng = np.random.default_rng(3)
    cfg = DiffConfig(step=1e-6, singular_standoff=1e-3)
    checked = 0
    for x in rng.uniform(-0.95, 0.95, (200, 2)):
        if fold.singular_distance(x[None, :])[0] < 1e-2:
            continue
        G = fold.gradient(x)
        assert np.allclose(fd_gradient(fold, x, cfg), G, rtol=1e-6, atol=1e-8)
        checked += 1
    assert checked > 100


def test_seam_continuity(fold):
    assert fold.check_seams() < 1e-9
    h = -0.5
    left = one_sided_hessian_norm(fold, np.array([0.5 * h, 0.0]), 0, -1)
    right = one_sided_hessian_norm(fold, np.array([0.5 * h, 0.0]), 0, +1)
    assert np.isfinite(left) and np.isfinite(right)


@pytest.mark.parametrize("y,count", [((0.1, 0.0), 3), ((0.05, 0.2), 3), ((-0.9, 0.0), 1), ((-1.0, 0.0), 1)])
def test_preimage_counts(fold, y, count):
    assert folding_preimage_count(fold, y) == count


def test_preimage_outside_range(fold):
    with pytest.warns(UserWarning):
        assert folding_preimage_count(fold, (1.5, 0.0)) == 0


def test_dense_single_factor():
    m = DenseMap([[0.0, 0.0]], [0.01])
    assert m.jac([0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    y = np.array([0.03, 0.0])
    assert np.allclose(m.value(y), y)
    assert dense_df_bound(m) <= 2


def test_dense_profile_slope_and_trend():
    p = DenseProfile(0.01)
    assert p.middle_slope == pytest.approx(1 + 1 / np.log(1 / p.rho))
    bounds = [dense_df_bound(DenseMap([[0.0, 0.0]], [r])) for r in (1e-2, 1e-3, 1e-4)]
    assert bounds[0] > bounds[1] > bounds[2] > 1
    energies = [DenseProfile(r).d2_energy() for r in (1e-2, 1e-3, 1e-4)]
    assert energies[0] > energies[1] > energies[2]
    assert DenseProfile(0.01).d2_energy_quadrature() == pytest.approx(energies[0], rel=1e-3)


def test_choose_radii_valid():
    rng = np.random.default_rng(4)
    centers = rng.uniform(-0.5, 0.5, (5, 2))
    radii, report = choose_radii(centers)
    m = DenseMap(centers, radii)
    for c in centers:
        assert abs(m.jac(c)) <= 1e-10
    assert len(report) == 5
