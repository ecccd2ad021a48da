"""Exponent bookkeeping and regime classification for (n, q, a, d).

Every inequality is encoded with the comparator exactly as stated by the
theorem it comes from.  Comparisons run in floating point first and are
re-evaluated in exact rational arithmetic whenever the float margin is within
``NEAR_BOUNDARY`` of zero, so boundary tuples never flip on rounding.
"""

from __future__ import annotations

import itertools
import operator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

NEAR_BOUNDARY = 1e-9


def exact(x) -> Fraction:
    """Exact rational value of a number; floats are read through their repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class RegimeParams:
    n: int
    q: float
    a: float
    d: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0 < self.d < self.n:
            raise ValueError(f"d must lie in (0, n), got {self.d}")

    def exact(self):
        return int(self.n), exact(self.q), exact(self.a), exact(self.d)


@dataclass(frozen=True)
class DerivedExponents:
    b: Optional[float]
    beta: float
    series_exp_d2: float
    series_exp_jac: float
    beta_exact: Fraction = field(repr=False)
    series_exp_d2_exact: Fraction = field(repr=False)
    series_exp_jac_exact: Fraction = field(repr=False)

    @property
    def b_defined(self) -> bool:
        return self.b is not None


@dataclass(frozen=True)
class RegimeVerdict:
    params: RegimeParams
    hk_applies: bool
    main_applies: bool
    critical_set_null: bool
    sign_constant: bool
    counterexample_exists: bool
    undetermined: bool
    notes: str

    def row(self, derived: Optional[DerivedExponents] = None) -> dict:
        p = self.params
        derived = derived or derive_exponents(p)
        return {
            "n": p.n, "q": p.q, "a": p.a, "d": p.d,
            "b": derived.b, "beta": derived.beta,
            "hk": self.hk_applies, "main": self.main_applies,
            "critnull": self.critical_set_null, "signconst": self.sign_constant,
            "counterex": self.counterexample_exists,
        }


CSV_COLUMNS = ("n", "q", "a", "d", "b", "beta", "hk", "main", "critnull", "signconst", "counterex")


def lemma_b_window(n, q) -> bool:
    """n^2/(2n-1) < q <= n, where J_f lies in W^{1,b}."""
    return _holds(lambda n, q: n * n / (2 * n - 1), operator.lt, lambda n, q: q, n, q) and \
        _holds(lambda n, q: q, operator.le, lambda n, q: n, n, q)


def sobolev_exponent_b(n: int, q) -> float:
    """b = nq / (n^2 - nq + q); only defined for n^2/(2n-1) < q <= n."""
    if not lemma_b_window(n, q):
        raise ValueError(f"b is only defined for n^2/(2n-1) < q <= n (n={n}, q={q})")
    n_, q_ = n, exact(q)
    return float(n_ * q_ / (n_ * n_ - n_ * q_ + q_))


def derive_exponents(p: RegimeParams) -> DerivedExponents:
    n, q, a, d = p.exact()
    beta = Fraction(n) / d * (q - n + d) / (2 * q) + Fraction(n) / d * (n - d) / (2 * a)
    exp_d2 = (Fraction(n) / d - beta) - Fraction(n * n) / (q * d) + Fraction(n) / q
    exp_jac = a * beta - Fraction(n * n) / d + n
    b = sobolev_exponent_b(p.n, p.q) if lemma_b_window(p.n, p.q) else None
    return DerivedExponents(
        b=b, beta=float(beta), series_exp_d2=float(exp_d2), series_exp_jac=float(exp_jac),
        beta_exact=beta, series_exp_d2_exact=exp_d2, series_exp_jac_exact=exp_jac,
    )


def _holds(lhs: Callable, cmp: Callable, rhs: Callable, *args) -> bool:
    """Evaluate ``cmp(lhs(*args), rhs(*args))``, exactly if near the boundary."""
    fargs = [float(v) for v in args]
    lv, rv = lhs(*fargs), rhs(*fargs)
    if abs(lv - rv) > NEAR_BOUNDARY * (1.0 + abs(rv)):
        return cmp(lv, rv)
    eargs = [exact(v) for v in args]
    return cmp(lhs(*eargs), rhs(*eargs))


def _near(lhs, rhs, *args) -> bool:
    fargs = [float(v) for v in args]
    lv, rv = lhs(*fargs), rhs(*fargs)
    return abs(lv - rv) <= NEAR_BOUNDARY * (1.0 + abs(rv))


# Individual hypotheses; each lambda takes (n, q, a, d).

def _hk(n, q, a, d):
    # q > n and (1 - n/q) a >= n
    return _holds(lambda n, q, a, d: q, operator.gt, lambda n, q, a, d: n, n, q, a, d) and \
        _holds(lambda n, q, a, d: (1 - n / q) * a, operator.ge, lambda n, q, a, d: n, n, q, a, d)


def _main(n, q, a, d):
    args = (n, q, a, d)
    if n == 2:
        # q > 4/3, a >= 1 and (3/2 - 2/q) a >= 1
        return (_holds(lambda n, q, a, d: 3 * q, operator.gt, lambda n, q, a, d: 4, *args)
                and _holds(lambda n, q, a, d: a, operator.ge, lambda n, q, a, d: 1, *args)
                and _holds(lambda n, q, a, d: (3 - 4 / q) * a, operator.ge, lambda n, q, a, d: 2, *args))
    if _holds(lambda n, q, a, d: q, operator.gt, lambda n, q, a, d: n, *args):
        # a > n - 1 (strict)
        return _holds(lambda n, q, a, d: a, operator.gt, lambda n, q, a, d: n - 1, *args)
    if _holds(lambda n, q, a, d: q, operator.gt, lambda n, q, a, d: n - 1, *args):
        # (1 - n/q + 1/(n-1)) a > 1 (strict)
        return _holds(lambda n, q, a, d: (1 - n / q + 1 / (n - 1)) * a, operator.gt,
                      lambda n, q, a, d: 1, *args)
    return False


def _critnull_supercritical(n, q, a, d):
    # (1 - (n-d)/q) a >= n - d
    return _holds(lambda n, q, a, d: (1 - (n - d) / q) * a, operator.ge, lambda n, q, a, d: n - d, n, q, a, d)


def _critnull_subcritical(n, q, a, d):
    # (n - d + d/n - (n/q)(n - d)) a >= n - d
    return _holds(lambda n, q, a, d: (n - d + d / n - (n / q) * (n - d)) * a, operator.ge,
                  lambda n, q, a, d: n - d, n, q, a, d)


def classify(p: RegimeParams) -> RegimeVerdict:
    n, q, a, d = p.n, p.q, p.a, p.d
    args = (n, q, a, d)
    notes = []
    if any(_near(lhs, rhs, *args) for lhs, rhs in _BOUNDARIES):
        notes.append("boundary tuple: decided in exact rational arithmetic")

    supercritical = _holds(lambda n, q, a, d: q, operator.gt, lambda n, q, a, d: n, *args)
    in_b_window = lemma_b_window(n, q)

    hk = _hk(*args)
    main = _main(*args)
    if supercritical:
        critnull = _critnull_supercritical(*args)
        # Corollary with d = n - 1: (1 - 1/q) a >= 1
        signconst = _holds(lambda n, q, a, d: (1 - 1 / q) * a, operator.ge, lambda n, q, a, d: 1, *args)
    elif in_b_window:
        critnull = _critnull_subcritical(*args)
        # (2 - 1/n - n/q) a >= 1
        signconst = _holds(lambda n, q, a, d: (2 - 1 / n - n / q) * a, operator.ge, lambda n, q, a, d: 1, *args)
    else:
        critnull = False
        signconst = False
        notes.append("q <= n^2/(2n-1): outside every positive result")

    # counterexample: (1 - (n-d)/q) a < n - d
    counterex = not _critnull_supercritical(*args)
    undetermined = not (critnull or counterex)
    if undetermined:
        notes.append("undetermined: gap between positive result and counterexample for q <= n")
    return RegimeVerdict(p, hk, main, critnull, signconst, counterex, undetermined, "; ".join(notes))


_BOUNDARIES = (
    (lambda n, q, a, d: (1 - n / q) * a, lambda n, q, a, d: n),
    (lambda n, q, a, d: (1 - (n - d) / q) * a, lambda n, q, a, d: n - d),
    (lambda n, q, a, d: (n - d + d / n - (n / q) * (n - d)) * a, lambda n, q, a, d: n - d),
    (lambda n, q, a, d: (1 - 1 / q) * a, lambda n, q, a, d: 1),
    (lambda n, q, a, d: (2 - 1 / n - n / q) * a, lambda n, q, a, d: 1),
    (lambda n, q, a, d: (3 - 4 / q) * a, lambda n, q, a, d: 2),
    (lambda n, q, a, d: a, lambda n, q, a, d: n - 1),
    (lambda n, q, a, d: q, lambda n, q, a, d: n),
)


# -- sweeps -----------------------------------------------------------------


def parse_range(spec) -> list:
    """Inclusive ``lo:hi:step`` range (or a single value) as exact rationals."""
    if isinstance(spec, (int, float, Fraction)):
        return [exact(spec)]
    parts = str(spec).split(":")
    if len(parts) == 1:
        return [Fraction(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"range must be lo:hi:step, got {spec!r}")
    lo, hi, step = (Fraction(x) for x in parts)
    if step <= 0:
        raise ValueError("range step must be positive")
    if hi < lo:
        raise ValueError(f"empty range {spec!r}")
    count = int((hi - lo) / step) + 1
    return [lo + k * step for k in range(count)]


def _as_number(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


def sweep(n: int, qs: Sequence, as_: Sequence, ds: Sequence, workers: int = 1) -> list:
    """Classify every grid point; rows in lexicographic (q, a, d) order."""
    qs, as_, ds = (sorted({exact(v) for v in vals}) for vals in (qs, as_, ds))
    if not (qs and as_ and ds):
        raise ValueError("empty sweep range")
    points = [RegimeParams(n, _as_number(q), _as_number(a), _as_number(d))
              for q, a, d in itertools.product(qs, as_, ds)]
    if workers <= 1:
        return [classify(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(classify, points))
