import numpy as np
import pytest

from critlab.base import DomainError
from critlab.calculus import DiffConfig, fd_gradient, fd_hessian
from critlab.maps import BallMap, PowerProfile, RadialMap, ball_boundary_sample, pairwise_distinct


def test_radial_identity():
    m = RadialMap(PowerProfile(1, 1), 2)
    x = np.array([0.3, -0.2])
    assert m.jac(x) == pytest.approx(1.0)
    assert np.max(np.abs(m.hessian(x))) < 1e-14
    with pytest.raises(DomainError):
        m.value([0.0, 0.0])


def test_radial_square_profile():
    m = RadialMap(PowerProfile(2, 1), 2)
    x = np.array([0.3, 0.4])
    assert m.jac(x) == pytest.approx(0.5, rel=1e-14)
    assert m.d2_surrogate(x) == pytest.approx(2.0, rel=1e-14)
    assert m.df_norm(x) == pytest.approx(1.0, rel=1e-14)
    H = fd_hessian(m, x)
    assert np.allclose(H, m.hessian(x), atol=1e-6)


def test_radial_gradient_matches_fd():
    m = RadialMap(PowerProfile(1.5, 2.0), 3)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-1, 1, (50, 3)):
        if np.linalg.norm(x) < 0.05:
            continue
        assert np.allclose(fd_gradient(m, x), m.gradient(x), atol=1e-8)


def test_ball_examples():
    m = BallMap(3, 3, 0.4)
    for t in (-1.0, 0.0, 0.7):
        assert np.allclose(m.value([0.0, 0.0, t]), 0.0)
    x = np.array([0.6, 0.8, 0.5])
    assert m.jac(x) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.det(fd_gradient(m, x)) == pytest.approx(1.0, rel=1e-8)


def test_ball_boundary_injective():
    m = BallMap(3, 3, 0.4)
    X = ball_boundary_sample(3, 1000, np.random.default_rng(0))
    assert pairwise_distinct(m.value(X), 1e-12)


def test_ball_hessian_matches_fd():
    m = BallMap(2, 3, 0.5)
    rng = np.random.default_rng(2)
    for x in rng.uniform([-1, -1.9], [1, 1.9], (40, 2)):
        if abs(x[0]) < 0.05 or abs(abs(x[1]) - 1) < 0.05:
            continue
        H = fd_hessian(m, x, DiffConfig(step=1e-6))
        assert np.allclose(H, m.hessian(x), atol=1e-4 * (1 + np.abs(H).max()))
