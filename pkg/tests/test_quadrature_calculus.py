import math

import numpy as np
import pytest

from critlab.calculus import DiffConfig, SingularQueryError, fd_gradient, fd_hessian
from critlab.maps import PowerProfile, RadialMap
from critlab.quadrature import CompensatedSum, integrate


def _line_locus(lo, hi):
    return (lo[:, 0] <= 0) & (hi[:, 0] >= 0)


def test_diff_config_validation():
    with pytest.raises(ValueError):
        DiffConfig(step=1e-2)
    with pytest.raises(ValueError):
        DiffConfig(step=1e-4, singular_standoff=1e-4)


def test_fd_on_plain_callable():
    f = lambda x: np.array([x[0] ** 3, x[0] * x[1]])  # noqa: E731
    x = np.array([0.4, -0.7])
    assert np.allclose(fd_gradient(f, x), [[3 * 0.16, 0.0], [-0.7, 0.4]], atol=1e-9)
    H = fd_hessian(f, x)
    assert H[0, 0, 0] == pytest.approx(2.4, rel=1e-6)
    assert H[1, 0, 1] == pytest.approx(1.0, rel=1e-6)


def test_standoff_enforced():
    m = RadialMap(PowerProfile(2, 1), 2)
    with pytest.raises(SingularQueryError):
        fd_gradient(m, np.array([1e-5, 0.0]))


def test_smooth_integral():
    r = integrate(lambda X: np.exp(X[:, 0]) * np.cos(X[:, 1]), [0, 0], [1, 1], tol_rel=1e-8)
    assert r.converged
    assert r.value == pytest.approx((math.e - 1) * math.sin(1), rel=1e-9)


@pytest.mark.parametrize("s,exact", [(0.5, 8.0), (0.9, 40.0)])
def test_power_singularity_converges(s, exact):
    r = integrate(lambda X: np.abs(X[:, 0]) ** (-s), [-1, -1], [1, 1], loci=_line_locus, tol_rel=1e-4)
    assert r.converged and not r.divergent
    assert r.value == pytest.approx(exact, rel=1e-4)
    assert abs(r.value - exact) <= r.error


@pytest.mark.parametrize("s", [1.0, 1.15])
def test_power_singularity_divergent(s):
    r = integrate(lambda X: np.abs(X[:, 0]) ** (-s), [-1, -1], [1, 1], loci=_line_locus)
    assert r.divergent and not r.converged and math.isinf(r.value)


def test_tolerance_honesty():
    fn = lambda X: np.abs(X[:, 0]) ** (-0.5) * (1 + X[:, 1] ** 2)  # noqa: E731
    a = integrate(fn, [-1, -1], [1, 1], loci=_line_locus, tol_rel=1e-3)
    b = integrate(fn, [-1, -1], [1, 1], loci=_line_locus, tol_rel=5e-4)
    assert abs(a.value - b.value) < 1e-3 * abs(b.value)


def test_zero_integrand_terminates():
    r = integrate(lambda X: 1e-30 * np.sin(1e3 * X[:, 0]), [0, 0], [1, 1])
    assert r.converged


def test_compensated_sum_order_independent():
    vals = np.random.default_rng(0).normal(size=10000) * 1e8
    a, b = CompensatedSum(), CompensatedSum()
    a.add(vals)
    for chunk in np.array_split(vals[::-1], 7):
        b.add(chunk)
    assert a.value == b.value
