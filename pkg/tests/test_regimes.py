from fractions import Fraction

import numpy as np
import pytest

from critlab.regimes import (RegimeParams, classify, derive_exponents, parse_range, sobolev_exponent_b,
                             sweep)


@pytest.mark.parametrize("n,q,b", [(2, 2, 2.0), (3, 2, 1.2)])
def test_sobolev_exponent(n, q, b):
    assert sobolev_exponent_b(n, q) == pytest.approx(b, rel=1e-15)


def test_cantor_exponents_exact():
    ex = derive_exponents(RegimeParams(2, 3, 1, 1))
    assert ex.beta_exact == Fraction(5, 3)
    assert ex.series_exp_d2_exact == Fraction(-1, 3)
    assert ex.series_exp_jac_exact == Fraction(-1, 3)


def test_classify_examples():
    assert classify(RegimeParams(2, 4, 4, 1)).hk_applies
    v = classify(RegimeParams(2, 3, 1, 1))
    assert v.counterexample_exists and not v.critical_set_null
    assert classify(RegimeParams(3, 6, 3, 2)).critical_set_null


def test_partition_and_beta_sandwich():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(2, 4))
        q, a, d = n + rng.uniform(0.01, 5), rng.uniform(0.05, 6), rng.uniform(0.05, n - 0.05)
        p = RegimeParams(n, q, a, d)
        v = classify(p)
        assert v.critical_set_null != v.counterexample_exists
        if v.counterexample_exists:
            beta = derive_exponents(p).beta
            assert (n / d) * (q - n + d) / q < beta < (n / d) * (n - d) / a


def test_monotone_in_a():
    flags = [classify(RegimeParams(2, 3, a, 1)).critical_set_null for a in np.linspace(0.1, 4, 40)]
    assert flags == sorted(flags)


def test_sweep_rows_and_consistency():
    rows = sweep(2, [3], [1], [Fraction(1, 2), 1])
    assert len(rows) == 2
    single = sweep(2, [4], [4], [1])
    assert single[0] == classify(RegimeParams(2, 4, 4, 1)) and single[0].hk_applies


def test_parse_range():
    assert parse_range("1:2:0.5") == [1, Fraction(3, 2), 2]
    with pytest.raises(ValueError):
        parse_range("2:1:0.5")
