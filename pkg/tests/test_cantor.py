import numpy as np
import pytest

from critlab.calculus import DiffConfig, fd_gradient, fd_hessian
from critlab.cantor import (CantorMap, CantorSchedule, build_schedule, cell_centers, glue_radius, linear_glue,
                            profile_h, series_ratios)
from critlab.regimes import RegimeParams

P = RegimeParams(2, 3, 1, 1)


@pytest.fixture(scope="module")
def sched():
    return build_schedule(P, 4)


def test_schedule_values(sched):
    g = sched.gen(1)
    assert g.a == 0.25
    assert g.b == pytest.approx(2 ** (-2 - 5 / 3), rel=1e-14)
    assert g.r == pytest.approx(1 / 64)
    assert sched.beta == pytest.approx(5 / 3)
    assert CantorSchedule.from_dict(sched.to_dict()).to_dict() == sched.to_dict()


def test_schedule_rejects(sched):
    with pytest.raises(ValueError):
        build_schedule(RegimeParams(2, 3, 4, 1), 2)
    with pytest.raises(ValueError):
        build_schedule(P, 31)


def test_profile_endpoints(sched):
    for i in range(1, 5):
        a_i, a_p = sched.sides[i], sched.sides[i - 1]
        b_i, b_p = sched.heights[i], sched.heights[i - 1]
        assert profile_h(sched, i, np.array([a_i]))[0] == pytest.approx(b_i, rel=1e-12)
        assert profile_h(sched, i, np.array([0.5 * a_p]))[0] == pytest.approx(0.5 * b_p, rel=1e-12)


def test_center_jacobian_decay(sched):
    m = CantorMap(sched)
    _, z, _ = cell_centers(sched, 3)
    s3 = build_schedule(P, 3)
    J = CantorMap(s3)._jac(z)
    assert np.allclose(J, 2 ** (-3 * sched.beta), rtol=1e-12)
    assert np.all(m._jac(cell_centers(sched, 4)[1]) <= 2 ** (-4 * sched.beta) * (1 + 1e-12))


def test_batch_equals_pointwise(sched):
    m = CantorMap(sched)
    X = np.random.default_rng(5).uniform(-1, 1, (300, 2))
    H = m._hessian(X)
    for k in range(0, 300, 37):
        assert np.allclose(m._hessian(X[k:k + 1])[0], H[k])


def test_derivatives_match_fd(sched):
    m = CantorMap(build_schedule(P, 3))
    X = np.random.default_rng(6).uniform(-1, 1, (200, 2))
    G, H = m._gradient(X), m._hessian(X)
    cfg = DiffConfig(step=1e-7, singular_standoff=1e-6)
    for k, x in enumerate(X):
        assert np.allclose(fd_gradient(m, x), G[k], atol=1e-6)
        assert np.max(np.abs(fd_hessian(m, x, cfg) - H[k])) <= 1e-3 * (1 + np.abs(H[k]).max())


def test_glue_is_linear(sched):
    y = np.array([[glue_radius(sched, 2) * 1.02, 0.01]])
    s2 = build_schedule(P, 2)
    m = CantorMap(s2)
    _, z, zt = cell_centers(s2, 2)
    v = m._value(z[:1] + y)[0] - zt[0]
    assert np.allclose(v, linear_glue(s2, 2, y)[0], atol=1e-15)


def test_series_ratios_exact():
    from fractions import Fraction
    assert series_ratios(P) == (Fraction(-1, 3), Fraction(-1, 3))
