import numpy as np
import pytest
from scipy.integrate import quad

from critlab.cantor import build_schedule
from critlab.energy import (BumpField, EnergyParams, LinearField, cantor_analytic_terms, cantor_series, el_residual,
                            energy, energy_fd_oracle, geometric_limit, key_estimate_check)
from critlab.folding import FoldingMap
from critlab.maps import BallMap, PowerProfile, RadialMap
from critlab.regimes import RegimeParams


def test_energy_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(3, 1, tol_rel=1.0)


def test_identity_energy():
    r = energy(RadialMap(PowerProfile(1, 1), 2), EnergyParams(2, 1))
    assert r.converged
    assert abs(r.d2_integral) < 1e-12
    assert r.jac_neg_integral == pytest.approx(4.0, rel=1e-12)


def test_ball_core_jacobian_integral():
    beta = 1.75
    m = BallMap(3, 3, 1, beta=beta)
    exact = 2 * 8 / (2 - beta) * quad(lambda t: np.cos(t) ** (beta - 2), 0, np.pi / 4)[0]
    r = energy(m, EnergyParams(3, 1), lo=[-1, -1, -1], hi=[1, 1, 1], channels=("jac",))
    assert r.jac.converged
    assert r.jac_neg_integral == pytest.approx(exact, rel=1e-3)


def test_folding_admissible_stable():
    m = FoldingMap(2, 3, 1)
    a = energy(m, EnergyParams(3, 1, tol_rel=1e-2), channels=("d2",))
    b = energy(m, EnergyParams(3, 1, tol_rel=5e-3), channels=("d2",))
    assert a.d2.converged and b.d2.converged
    assert abs(a.d2_integral - b.d2_integral) < 1e-2 * b.d2_integral


def test_cantor_series_telescopes():
    s = build_schedule(RegimeParams(2, 3, 1, 1), 6)
    d2, jac, e_d2, e_jac = cantor_analytic_terms(RegimeParams(2, 3, 1, 1), 6)
    partial = np.cumsum(jac)
    assert np.allclose(np.diff(partial), jac[1:], rtol=1e-15)
    assert sum(jac) < geometric_limit(jac[0], e_jac)
    rep = cantor_series(s, EnergyParams(3, 1))
    assert rep.jac_neg_integral == pytest.approx(sum(jac), rel=1e-15)


def test_el_residual_rejects_bad_support():
    m = FoldingMap(2, 3, 1)
    with pytest.raises(ValueError):
        el_residual(m, BumpField((0.0, 0.0), (0.1, 0.1), (1.0, 0.0)), EnergyParams(3, 1))


def test_el_residual_matches_oracle():
    m = RadialMap(PowerProfile(2, 1), 2)
    phi = BumpField((0.4, 0.4), (0.2, 0.2), (1.0, 0.5))
    ep = EnergyParams(3, 1)
    assert el_residual(m, phi, ep) == pytest.approx(energy_fd_oracle(m, phi, ep), rel=1e-6)


def test_key_estimate_precondition():
    with pytest.raises(ValueError):
        key_estimate_check(LinearField([1.0, 0.0]), [[0.3, 0.0]], RegimeParams(2, 3, 0.5, 1), 3.0)
