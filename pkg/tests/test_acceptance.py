"""Acceptance criteria 1-10, one test each."""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from critlab.calculus import DiffConfig, fd_gradient, fd_hessian_norm
from critlab.cantor import CantorMap, build_schedule
from critlab.dense import DenseMap, DenseProfile, choose_radii, dense_df_bound
from critlab.dimension import near_critical_dimension
from critlab.energy import (BumpField, EnergyParams, JacobianField, LinearField, cantor_analytic_terms,
                            cantor_series, el_residual, energy, energy_fd_oracle, fitted_band_ratios,
                            key_estimate_check)
from critlab.folding import FoldingMap, folding_preimage_count
from critlab.maps import BallMap, PowerProfile, RadialMap
from critlab.regimes import RegimeParams, classify, derive_exponents
from critlab.verify import injectivity_scan, sign_constancy_scan


def test_c1_regime_partition():
    t0 = time.perf_counter()
    count = 0
    for n in (2, 3):
        qs = np.linspace(n + 0.05, n + 6, 20)
        as_ = np.linspace(0.05, 6, 20)
        ds = np.linspace(0.05, n - 0.05, 20)
        for q, a, d in itertools.product(qs, as_, ds):
            v = classify(RegimeParams(n, float(q), float(a), float(d)))
            assert v.critical_set_null != v.counterexample_exists
            count += 1
    assert count == 2 * 8000
    assert time.perf_counter() - t0 < 1.0


def _families():
    return [
        RadialMap(PowerProfile(1.5, 1.0), 2),
        BallMap(3, 3, 0.4),
        FoldingMap(2, 3, 1),
        CantorMap(build_schedule(RegimeParams(2, 3, 1, 1), 3)),
        DenseMap([[0.2, -0.1], [-0.3, 0.4]], [0.02, 0.01]),
    ]


def test_c2_derivative_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    cfg = DiffConfig(step=1e-6, singular_standoff=1e-3)
    for m in _families():
        X = rng.uniform(m.lo, m.hi, (4000, m.n))
        X = X[m.contains(X) & (m.singular_distance(X) > 1e-2)][:1000]
        assert len(X) == 1000
        J = m._jac(X)
        for x, j in zip(X, J):
            fd = np.linalg.det(fd_gradient(m, x, cfg))
            assert abs(fd - j) <= 1e-6 * max(abs(j), 1e-300) + 1e-12, (type(m).__name__, x)
    # radial second-derivative surrogate vs finite-difference Hessian norm: one fitted constant in [1/n, n]
    n = 2
    m = RadialMap(PowerProfile(2.5, 1.0), n)
    pts = rng.uniform(-1, 1, (200, n))
    pts = pts[np.linalg.norm(pts, axis=1) > 0.1]
    ratios = np.array([fd_hessian_norm(m, x) / m.d2_surrogate(x) for x in pts])
    c = float(np.exp(np.mean(np.log(ratios))))
    assert 1 / n <= c <= n
    assert np.all((ratios / c >= 1 / n) & (ratios / c <= n))
    assert time.perf_counter() - t0 < 30.0


def test_c3_cantor_energy_convergence():
    t0 = time.perf_counter()
    p = RegimeParams(2, 3, 1, 1)
    ex = derive_exponents(p)
    assert ex.beta_exact == Fraction(5, 3)
    assert ex.series_exp_d2_exact == Fraction(-1, 3) and ex.series_exp_jac_exact == Fraction(-1, 3)
    d2, jac, _, _ = cantor_analytic_terms(p, 6)
    ratio = 2.0 ** (-1 / 3)
    # D² terms are q-th powers of per-generation L^q norms; the series is over the norms
    for terms in (np.asarray(d2) ** (1 / 3), np.asarray(jac)):
        partial = np.cumsum(terms)
        inc = np.diff(partial)
        assert np.all(inc > 0)
        assert np.allclose(inc[1:] / inc[:-1], ratio, rtol=0, atol=1e-12)
    rep = cantor_series(build_schedule(p, 4), EnergyParams(3, 1, tol_rel=1e-3), numeric_generations=4)
    assert rep.converged
    jac_band = fitted_band_ratios(rep.per_generation, "Jac")
    assert all(1 / 16 <= r <= 16 for r in jac_band["raw"])
    d2_band = fitted_band_ratios(rep.per_generation, "D2")
    assert all(1 / 16 <= r <= 16 for r in d2_band["normalised"])
    assert time.perf_counter() - t0 < 600.0


def test_c4_sharpness_witness():
    t0 = time.perf_counter()
    q = 3
    bad = FoldingMap(2, q, 1, alpha=2 - 1 / q - 0.05, strict=False)
    good = FoldingMap(2, q, 1)
    ep = EnergyParams(q, 1, tol_rel=5e-3)
    rb = energy(bad, ep, channels=("d2",))
    rg = energy(good, ep, channels=("d2",))
    assert rb.d2.divergent and not rb.converged
    assert rg.converged and np.isfinite(rg.d2_integral)
    assert time.perf_counter() - t0 < 300.0


@pytest.mark.parametrize("d,a,depth,band", [(1, 1, 10, (0.85, 1.15)), (1.5, 0.5, 8, (1.3, 1.7))])
def test_c5_dimension_estimate(d, a, depth, band):
    t0 = time.perf_counter()
    p = RegimeParams(2, 3, a, d)
    s = build_schedule(p, int(np.ceil((depth + 1) * d / 2)))
    rep = near_critical_dimension(CantorMap(s), depth)
    assert band[0] <= rep.slope <= band[1]
    assert time.perf_counter() - t0 < 600.0


def test_c6_non_injectivity_witnesses():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    fold = FoldingMap(2, 3, 1)
    targets = []
    for y2 in rng.uniform(-0.9, 0.9, 20):
        # triple-sheet region: 0 < y1 < peak of the folded sheet over x1 < 0 at this y2
        line = np.column_stack([np.linspace(-1, 0, 20001), np.full(20001, y2)])
        peak = float(np.max(fold._value(line)[:, 0]))
        targets.append(np.array([rng.uniform(0.1, 0.9) * peak, y2]))
    assert all(folding_preimage_count(fold, y) == 3 for y in targets)
    ball = BallMap(3, 3, 0.4)
    seg = np.column_stack([np.zeros(100), np.zeros(100), np.linspace(-1, 1, 100)])
    assert np.max(np.abs(ball._value(seg))) <= 1e-12
    cantor = CantorMap(build_schedule(RegimeParams(2, 3, 1, 1), 4))
    assert injectivity_scan(cantor, 512).verdict == "injective-on-sample"
    assert time.perf_counter() - t0 < 300.0


def test_c7_sign_structure():
    fold = sign_constancy_scan(FoldingMap(2, 3, 1), 512)
    assert fold.pos_fraction > 0 and fold.neg_fraction > 0
    cantor = sign_constancy_scan(CantorMap(build_schedule(RegimeParams(2, 3, 1, 1), 4)), 512)
    assert cantor.neg_fraction == 0


def test_c8_el_residual():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    ep = EnergyParams(3, 1)
    maps = [FoldingMap(2, 3, 1), RadialMap(PowerProfile(2, 1), 2), RadialMap(PowerProfile(1.5, 2), 2)]
    for k in range(5):
        f = maps[k % len(maps)]
        if isinstance(f, FoldingMap):
            center = (rng.uniform(0.35, 0.65), rng.uniform(-0.5, 0.5))
        else:
            center = tuple(rng.uniform(0.3, 0.6, 2))
        phi = BumpField(center, tuple(rng.uniform(0.1, 0.2, 2)), tuple(rng.uniform(-1, 1, 2)))
        res = el_residual(f, phi, ep)
        oracle = energy_fd_oracle(f, phi, ep)
        assert abs(res - oracle) <= 1e-3 * abs(oracle)
    assert time.perf_counter() - t0 < 120.0


def test_c9_key_estimate():
    lin = key_estimate_check(LinearField([1.0, 0.0]), [[0.0, 0.1], [0.0, -0.3]], RegimeParams(2, 3, 0.5, 1), 3.0)
    ratios = [r["ratio"] for r in lin["rows"]]
    assert max(ratios) / min(ratios) <= 1.05
    fold = FoldingMap(2, 3, 1)
    rep = key_estimate_check(JacobianField(fold), [[0.0, 0.3]], RegimeParams(2, 3, 1, 1), 3.0, js=range(3, 8))
    assert len(rep["rows"]) == 5
    assert np.isfinite(rep["max_ratio"]) and rep["variation"] < 10


def test_c10_dense_critical_construction():
    rng = np.random.default_rng(10)
    centers = rng.uniform(-0.6, 0.6, (5, 2))
    radii, _ = choose_radii(centers)
    g = DenseMap(centers, radii)
    assert np.all(np.abs(g._jac(centers)) <= 1e-10)
    for r in radii:
        assert dense_df_bound(DenseMap([[0.0, 0.0]], [r])) <= 2
    energies = [DenseProfile(r).d2_energy() for r in (1e-2, 1e-3, 1e-4)]
    assert energies[0] > energies[1] > energies[2]
