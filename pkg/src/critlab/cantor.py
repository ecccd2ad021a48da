"""Cantor squeeze construction at finite generation k.

Generation-i cubes Q_v = Q(z_v, a_i) are mapped onto rectangles
R_v = R(z~_v, a_i, b_i) with a_i = 2^{-(n/d) i} and b_i = 2^{-(n/d + beta) i}.
Inside Q'_v = Q(z_v, a_{i-1}/2) the map is f_i(x) = z~_v + g_i(x - z_v), where
g_i keeps the first n-1 coordinates and squeezes the last one by

    h_bar_i(x_bar, t) = Lam(x_bar) sgn(t) h_i(|t|) + (1 - Lam(x_bar)) s_{i-1} t,

with Lam = prod_j lambda_i(|x^j|) and s_{i-1} = b_{i-1}/a_{i-1}.  Evaluation
descends the cube tree lazily, so cost is O(k) per point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .base import MapFamily
from .kernels import SmoothCutoff, SmoothedPiecewiseLinear, piecewise_linear_kinks
from .regimes import RegimeParams, classify, derive_exponents

MAX_GENERATION = 24
MIN_SIDE = 2.0**-60
ENUMERATION_CAP = 2**20


@dataclass(frozen=True)
class Generation:
    i: int
    a: float
    b: float
    r: float
    profile: SmoothedPiecewiseLinear = field(repr=False)
    cutoff: SmoothCutoff = field(repr=False)

    @property
    def slope_inner(self) -> float:
        return self.b / self.a


@dataclass(frozen=True)
class CantorSchedule:
    n: int
    d: float
    q: float
    a: float
    beta: float
    k: int
    sides: tuple  # a_0..a_k
    heights: tuple  # b_0..b_k
    gens: tuple = field(repr=False)  # Generation objects for i = 1..k

    def gen(self, i: int) -> Generation:
        if not 1 <= i <= self.k:
            raise ValueError(f"generation {i} outside 1..{self.k}")
        return self.gens[i - 1]

    def per_gen(self) -> list[dict]:
        return [{"i": g.i, "a": g.a, "b": g.b, "r": g.r} for g in self.gens]

    def to_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "q": self.q, "a": self.a, "k": self.k,
                "beta": self.beta, "perGen": self.per_gen()}

    @classmethod
    def from_dict(cls, data: dict) -> "CantorSchedule":
        return build_schedule(RegimeParams(int(data["n"]), data["q"], data["a"], data["d"]), int(data["k"]))


def _make_generation(i, a_prev, a_i, b_prev, b_i) -> Generation:
    gap = 0.5 * a_prev - a_i
    r = gap / 16.0
    t1, t2 = a_i + 0.25 * gap, 0.5 * a_prev - 0.25 * gap
    s_in, s_out = b_i / a_i, b_prev / a_prev
    mid = (s_out * t2 - s_in * t1) / (t2 - t1)
    c0, s0, kinks, jumps = piecewise_linear_kinks((t1, t2), (s_in, mid, s_out))
    profile = SmoothedPiecewiseLinear(c0, s0, kinks, jumps, r)
    # cutoff window at 3/4 and 7/8 of the way from a_i to a_{i-1}/2
    cutoff = SmoothCutoff(0.375 * a_prev + 0.25 * a_i, 0.4375 * a_prev + 0.125 * a_i)
    return Generation(i, a_i, b_i, r, profile, cutoff)


def build_schedule(p: RegimeParams, k: int) -> CantorSchedule:
    if not 0 <= k <= MAX_GENERATION:
        raise ValueError(f"generation depth must lie in 0..{MAX_GENERATION}")
    if not classify(p).counterexample_exists:
        raise ValueError("construction needs (1 - (n-d)/q) a < n - d")
    ex = derive_exponents(p)
    if not (ex.series_exp_d2_exact < 0 and ex.series_exp_jac_exact < 0):
        raise AssertionError("series exponents must be negative in the counterexample regime")
    n, d, beta = p.n, float(p.d), ex.beta
    nd = n / d
    sides = tuple(2.0 ** (-nd * i) for i in range(k + 1))
    heights = tuple(2.0 ** (-(nd + beta) * i) for i in range(k + 1))
    if sides[-1] < MIN_SIDE:
        raise ValueError(f"a_k = {sides[-1]:.3e} is below 2^-60; reduce k")
    gens = tuple(_make_generation(i, sides[i - 1], sides[i], heights[i - 1], heights[i]) for i in range(1, k + 1))
    return CantorSchedule(n, d, float(p.q), float(p.a), beta, k, sides, heights, gens)


# -- profiles and cutoffs ------------------------------------------------------


def profile_h(s: CantorSchedule, i: int, t):
    """h_i(t) on [0, a_{i-1}/2]."""
    g = s.gen(i)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 0.5 * s.sides[i - 1] * (1 + 1e-12)):
        raise ValueError("profile argument outside [0, a_{i-1}/2]")
    return g.profile(t)


def profile_h_derivs(s: CantorSchedule, i: int, t):
    return s.gen(i).profile.evaluate(np.asarray(t, dtype=float))


def cutoff_lambda(s: CantorSchedule, i: int, t):
    return s.gen(i).cutoff(t)


# -- cells -----------------------------------------------------------------------


@dataclass(frozen=True)
class CellPair:
    word: tuple
    zv: np.ndarray
    ztv: np.ndarray
    q_half: float  # Q_v = Q(z_v, a_i)
    qp_half: float  # Q'_v = Q(z_v, a_{i-1}/2)
    r_half: tuple  # R_v = R(z~_v, a_i, b_i)
    rp_half: tuple  # R'_v = R(z~_v, a_{i-1}/2, b_{i-1}/2)


def _vertices(n: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def cell_centers(s: CantorSchedule, i: int):
    """Arrays (words, z, z~) for all 2^{ni} generation-i cells."""
    if i > s.k or i < 0:
        raise ValueError(f"generation {i} outside 0..{s.k}")
    if 2 ** (s.n * i) > ENUMERATION_CAP:
        raise ValueError(f"2^(n i) = 2^{s.n * i} cells exceed the enumeration cap; sample points instead")
    V = _vertices(s.n)
    words = np.zeros((1, 0), dtype=int)
    z = np.zeros((1, s.n))
    zt = np.zeros((1, s.n))
    for j in range(1, i + 1):
        a_prev, b_prev = s.sides[j - 1], s.heights[j - 1]
        step = V.copy() * 0.5 * a_prev
        step_t = step.copy()
        step_t[:, -1] = V[:, -1] * 0.5 * b_prev
        z = (z[:, None, :] + step[None]).reshape(-1, s.n)
        zt = (zt[:, None, :] + step_t[None]).reshape(-1, s.n)
        words = np.concatenate([np.repeat(words, len(V), axis=0),
                                np.tile(np.arange(len(V)), len(words))[:, None]], axis=1)
    return words, z, zt


def cantor_set_points(s: CantorSchedule, i: int) -> list[CellPair]:
    words, z, zt = cell_centers(s, i)
    if i == 0:
        return [CellPair((), z[0], zt[0], 1.0, 1.0, (1.0, 1.0), (1.0, 1.0))]
    a_i, a_p, b_i, b_p = s.sides[i], s.sides[i - 1], s.heights[i], s.heights[i - 1]
    return [CellPair(tuple(int(x) for x in w), z[c], zt[c], a_i, 0.5 * a_p, (a_i, b_i), (0.5 * a_p, 0.5 * b_p))
            for c, w in enumerate(words)]


# -- the generation map ----------------------------------------------------------


class CantorMap(MapFamily):
    family = "cantor"

    def __init__(self, schedule: CantorSchedule):
        self.s = schedule
        self.n = schedule.n
        self.lo, self.hi = np.full(self.n, -1.0), np.full(self.n, 1.0)

    def locate(self, X):
        """Deepest generation i (0 = identity), z_v and z~_v for each point."""
        s, m = self.s, len(X)
        level = np.zeros(m, dtype=int)
        z, zt = np.zeros((m, s.n)), np.zeros((m, s.n))
        active = np.ones(m, dtype=bool)
        for i in range(1, s.k + 1):
            if not np.any(active):
                break
            a_prev, b_prev = s.sides[i - 1], s.heights[i - 1]
            v = np.where(X[active] >= z[active], 1.0, -1.0)
            z[active] += 0.5 * a_prev * v
            zt[active, :-1] += 0.5 * a_prev * v[:, :-1]
            zt[active, -1] += 0.5 * b_prev * v[:, -1]
            level[active] = i
            inside = np.max(np.abs(X - z), axis=1) <= s.sides[i]
            active &= inside
        return level, z, zt

    def _local(self, X):
        """Value, gradient row and Hessian of the last component, per point."""
        s, m, n = self.s, len(X), self.n
        level, z, zt = self.locate(X)
        Y = X - z
        val = X.copy()
        grad = np.zeros((m, n))
        grad[:, -1] = 1.0
        hess = np.zeros((m, n, n))
        for i in range(1, s.k + 1):
            sel = level == i
            if not np.any(sel):
                continue
            y = Y[sel]
            g = s.gen(i)
            slope = s.heights[i - 1] / s.sides[i - 1]
            lam, dlam, d2lam = (np.asarray(p).reshape(len(y), n - 1) for p in g.cutoff.evaluate(np.abs(y[:, :-1])))
            sgn = np.sign(y[:, :-1])
            Lam = np.prod(lam, axis=1)
            # gradient / Hessian of Lam = prod_j lambda(|y_j|)
            k1 = n - 1
            dLam = np.zeros((len(y), k1))
            d2Lam = np.zeros((len(y), k1, k1))
            for j in range(k1):
                others = np.prod(np.delete(lam, j, axis=1), axis=1)
                dLam[:, j] = dlam[:, j] * sgn[:, j] * others
                d2Lam[:, j, j] = d2lam[:, j] * others
                for l in range(j + 1, k1):
                    rest = np.prod(np.delete(lam, [j, l], axis=1), axis=1)
                    cross = dlam[:, j] * sgn[:, j] * dlam[:, l] * sgn[:, l] * rest
                    d2Lam[:, j, l] = d2Lam[:, l, j] = cross
            t = y[:, -1]
            h, h1, h2 = g.profile.evaluate(np.abs(t))
            st = np.sign(t)
            H, H1, H2 = st * h, h1, st * h2
            lin = slope * t
            val[sel, -1] = zt[sel, -1] + Lam * H + (1 - Lam) * lin
            grad[sel, :-1] = dLam * (H - lin)[:, None]
            grad[sel, -1] = Lam * H1 + (1 - Lam) * slope
            hs = np.zeros((len(y), n, n))
            hs[:, :-1, :-1] = d2Lam * (H - lin)[:, None, None]
            hs[:, :-1, -1] = hs[:, -1, :-1] = dLam * (H1 - slope)[:, None]
            hs[:, -1, -1] = Lam * H2
            hess[sel] = hs
        # identity region (level 0 only when k = 0) needs no change
        return val, grad, hess, level

    def _value(self, X):
        return self._local(X)[0]

    def _gradient(self, X):
        _, grad, _, _ = self._local(X)
        m, n = X.shape
        G = np.broadcast_to(np.eye(n), (m, n, n)).copy()
        G[:, -1, :] = grad
        return G

    def _jac(self, X):
        return self._local(X)[1][:, -1]

    def _hessian(self, X):
        _, _, hess, _ = self._local(X)
        m, n = X.shape
        H = np.zeros((m, n, n, n))
        H[:, -1] = hess
        return H

    def to_spec(self):
        s = self.s
        return {"family": "cantor", "n": s.n, "params": {"d": s.d, "q": s.q, "a": s.a, "k": s.k}}


def gen_map_eval(m: CantorMap, x):
    """(value, J, max-entry |D^2 f|) at a single point."""
    return m.value(x), float(m.jac(x)), float(m.d2_norm(x))


def linear_glue(s: CantorSchedule, i: int, y):
    """The linear squeeze [y_bar, s_{i-1} y_n] that g_i must match near the boundary."""
    y = np.atleast_2d(np.asarray(y, dtype=float)).copy()
    y[:, -1] *= s.heights[i - 1] / s.sides[i - 1]
    return y


def glue_radius(s: CantorSchedule, i: int) -> float:
    """g_i is linear on Q(0, a_{i-1}/2) outside Q(0, glue_radius)."""
    return 0.4375 * s.sides[i - 1] + 0.125 * s.sides[i]


def series_ratios(p: RegimeParams):
    """Exact geometric ratios 2^{exp} of the two per-generation energy series."""
    ex = derive_exponents(p)
    return ex.series_exp_d2_exact, ex.series_exp_jac_exact


