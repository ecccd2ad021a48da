"""Folding map: J_f vanishes on a hyperplane and changes sign on a positive-measure set.

The first component is built from four branches keyed on x_1 versus 0,
h/2 and h, where h(x~) = min{0, -(1 - |x~|^2)^3 / 2}.  All derivatives are
propagated with second-order jets, so Df and D^2 f are exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .base import MapFamily

SEAM_TOLERANCE = 1e-9
# max over s in [0,1] of |grad h| = 3 (1-s)^2 sqrt(s), attained at s = 1/5
_H_SLOPE = 3 * 0.8**2 * np.sqrt(0.2)


@dataclass
class Jet:
    """Value, gradient (m, n) and Hessian (m, n, n) of a scalar field."""

    v: np.ndarray
    g: np.ndarray
    H: np.ndarray

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.g + other.g, self.H + other.H)
        return Jet(self.v + other, self.g, self.H)

    def __neg__(self):
        return Jet(-self.v, -self.g, -self.H)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return Jet(c * self.v, c * self.g, c * self.H)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        v = self.v * other.v
        g = self.g * other.v[:, None] + other.g * self.v[:, None]
        H = (self.H * other.v[:, None, None] + other.H * self.v[:, None, None]
             + self.g[:, :, None] * other.g[:, None, :] + other.g[:, :, None] * self.g[:, None, :])
        return Jet(v, g, H)

    def power(self, e: float):
        """self**e for a non-negative base; derivative terms at a zero base vanish where e > 2."""
        v = np.maximum(self.v, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            c0 = v**e
            c1 = np.where(v > 0, e * v ** (e - 1), 0.0 if e > 1 else (1.0 if e == 1 else np.inf))
            c2 = np.where(v > 0, e * (e - 1) * v ** (e - 2), 0.0 if (e > 2 or e == 1) else np.inf)
        outer = self.g[:, :, None] * self.g[:, None, :]
        g = _safe_mul(c1[:, None], self.g)
        H = _safe_mul(c1[:, None, None], self.H) + _safe_mul(c2[:, None, None], outer)
        return Jet(c0, g, H)


def _safe_mul(c, arr):
    """c * arr with 0 * inf treated as 0."""
    with np.errstate(invalid="ignore"):
        return np.where(arr == 0, 0.0, c * arr)


def _h_jets(X):
    """Jet of h(x~) = min{0, -(1 - |x~|^2)^3 / 2}."""
    m, n = X.shape
    xt = X.copy()
    xt[:, 0] = 0.0
    s = np.sum(xt**2, axis=1)
    w = np.clip(1.0 - s, 0.0, None)
    eye = np.eye(n)
    eye[0, 0] = 0.0
    hv = -0.5 * w**3
    hg = 3.0 * (w**2)[:, None] * xt
    hH = -12.0 * w[:, None, None] * xt[:, :, None] * xt[:, None, :] + 3.0 * (w**2)[:, None, None] * eye
    return Jet(hv, hg, hH)


def _coordinate_jet(X, k: int):
    m, n = X.shape
    g = np.zeros((m, n))
    g[:, k] = 1.0
    return Jet(X[:, k].copy(), g, np.zeros((m, n, n)))


def fold_alpha_window(q: float, a: float) -> tuple[float, float]:
    """Open interval (2 - 1/q, 1 + 1/a) of admissible fold exponents."""
    return 2.0 - 1.0 / q, 1.0 + 1.0 / a


class FoldingMap(MapFamily):
    family = "folding"

    def __init__(self, n: int, q: float, a: float, alpha: float | None = None, strict: bool = True):
        if n < 2:
            raise ValueError("dimension must be at least 2")
        lo, hi = fold_alpha_window(q, a)
        if alpha is None:
            if not lo < hi:
                raise ValueError(f"empty alpha window ({lo}, {hi}): need (1 - 1/q) a < 1")
            alpha = 0.5 * (lo + hi)
        if strict and not lo < alpha < hi:
            raise ValueError(f"alpha={alpha} outside ({lo}, {hi})")
        if alpha < 1:
            raise ValueError("fold exponent must be at least 1")
        self.n, self.q, self.a, self.alpha = int(n), float(q), float(a), float(alpha)
        self.lo = np.full(self.n, -1.0)
        self.hi = np.full(self.n, 1.0)
        self.check_seams()

    # -- branches ------------------------------------------------------------
    def branch_index(self, X):
        """0: x1 >= 0, 1: h/2 < x1 < 0, 2: h <= x1 <= h/2, 3: x1 <= h (x1 < h if h = 0 excluded)."""
        x1 = X[:, 0]
        h = _h_jets(X).v
        idx = np.full(len(X), 3)
        idx[x1 <= 0.5 * h] = 2
        idx[x1 < h] = 3
        idx[(x1 > 0.5 * h) & (x1 < 0)] = 1
        idx[x1 >= 0] = 0
        return idx

    def _branch_jet(self, k: int, X) -> Jet:
        al = self.alpha
        u = _coordinate_jet(X, 0)
        h = _h_jets(X)
        G = (-h).power(al)
        if k == 0:
            return u.power(al)
        if k == 1:
            return (-u).power(al).scale(2.0 ** (al - 1))
        if k == 2:
            return (u - h).power(al).scale(-(2.0 ** (al - 1))) + G
        coef = (G + 1.0) * (h + 1.0).power(-al)
        return -(coef * (h - u).power(al)) + G

    def _first_component(self, X) -> Jet:
        m, n = X.shape
        out = Jet(np.zeros(m), np.zeros((m, n)), np.zeros((m, n, n)))
        idx = self.branch_index(X)
        for k in range(4):
            sel = idx == k
            if np.any(sel):
                j = self._branch_jet(k, X[sel])
                out.v[sel], out.g[sel], out.H[sel] = j.v, j.g, j.H
        return out

    def _value(self, X):
        Y = X.copy()
        Y[:, 0] = self._first_component(X).v
        return Y

    def _gradient(self, X):
        m, n = X.shape
        G = np.broadcast_to(np.eye(n), (m, n, n)).copy()
        G[:, 0, :] = self._first_component(X).g
        return G

    def _jac(self, X):
        return self._first_component(X).g[:, 0]

    def _hessian(self, X):
        m, n = X.shape
        H = np.zeros((m, n, n, n))
        H[:, 0] = self._first_component(X).H
        return H

    # -- seams -----------------------------------------------------------------
    def seam_points(self, count: int = 257, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        xt = rng.uniform(-1.0, 1.0, size=(count, self.n - 1))
        xt[0] = 0.0
        X = np.column_stack([np.zeros(count), xt])
        h = _h_jets(X).v
        return X, h

    def check_seams(self, count: int = 257):
        """Assert branch formulas agree in value and gradient on x1 in {0, h/2, h}."""
        X, h = self.seam_points(count)
        inner = h < 0
        worst = 0.0
        for left, right, pos in ((1, 0, np.zeros_like(h)), (2, 1, 0.5 * h), (3, 2, h)):
            P = X[inner].copy()
            P[:, 0] = pos[inner]
            if not len(P):
                continue
            a, b = self._branch_jet(left, P), self._branch_jet(right, P)
            worst = max(worst, np.max(np.abs(a.v - b.v)), np.max(np.abs(a.g - b.g)))
        if worst > SEAM_TOLERANCE:
            raise AssertionError(f"folding branches disagree on a seam by {worst:.3e}")
        return worst

    # -- loci ------------------------------------------------------------------
    def singular_distance(self, X):
        X = np.atleast_2d(X)
        x1, h = X[:, 0], _h_jets(X).v
        vertical = np.min(np.abs(np.stack([x1, x1 - h, x1 - 0.5 * h])), axis=0)
        return vertical / np.sqrt(1.0 + _H_SLOPE**2)

    def loci_touch(self, lo, hi):
        t_lo = np.where(lo[:, 1:] > 0, lo[:, 1:], np.where(hi[:, 1:] < 0, -hi[:, 1:], 0.0))
        t_hi = np.maximum(lo[:, 1:] ** 2, hi[:, 1:] ** 2)
        s_min = np.minimum(np.sum(t_lo**2, axis=1), 1.0)
        s_max = np.minimum(np.sum(t_hi, axis=1), 1.0)
        h_min, h_max = -0.5 * (1 - s_min) ** 3, -0.5 * (1 - s_max) ** 3
        x_lo, x_hi = lo[:, 0], hi[:, 0]
        touch = (x_lo <= 0) & (x_hi >= 0)
        for c in (1.0, 0.5):
            touch |= (x_lo <= c * h_max) & (x_hi >= c * h_min)
        return touch

    def in_negative_set(self, X):
        """Membership in A = {h(x~) < x1 < 0}."""
        X = np.atleast_2d(X)
        h = _h_jets(X).v
        return (h < X[:, 0]) & (X[:, 0] < 0)

    def to_spec(self):
        return {"family": "folding", "n": self.n, "params": {"q": self.q, "a": self.a, "alpha": self.alpha}}


def folding_eval(m: FoldingMap, x):
    """(value, J) at a single point."""
    return m.value(x), float(m.jac(x))


def folding_preimage_count(m: FoldingMap, y, grid_res: int = 4096) -> int:
    """Number of preimages of y (crossings plus tangential touches)."""
    roots, tangential = folding_preimages(m, y, grid_res)
    return len(roots) + tangential


def folding_preimages(m: FoldingMap, y, grid_res: int = 4096):
    """x1-coordinates of the transversal preimages of y and the number of tangential ones.

    The remaining coordinates are copied verbatim by f, so preimages differ only
    in x1.  f1 - y1 is sampled on a grid along x1; sign changes are refined by
    bisection and near-zero minima without a sign change are reported as
    tangential preimages with a warning.
    """
    if grid_res < 64:
        raise ValueError("grid resolution must be at least 64")
    y = np.asarray(y, dtype=float)
    if y.shape != (m.n,) or np.any(np.abs(y) > 1.0):
        warnings.warn("target outside the image cube; reporting 0 preimages")
        return [], 0
    t = np.linspace(-1.0, 1.0, grid_res + 1)
    X = np.tile(y, (len(t), 1))
    X[:, 0] = t
    g = m._value(X)[:, 0] - y[0]
    threshold = np.max(np.abs(np.diff(g)))
    zero_tol = 1e-12 * (1.0 + abs(y[0]))
    g = np.where(np.abs(g) <= zero_tol, 0.0, g)

    def f1(s):
        P = y.copy()
        P[0] = s
        return m._value(P[None, :])[0, 0] - y[0]

    roots = []
    for k in range(len(t) - 1):
        if g[k] == 0.0:
            roots.append(t[k])
        elif g[k] * g[k + 1] < 0:
            lo, hi, glo = t[k], t[k + 1], g[k]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                gm = f1(mid)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if np.sign(gm) == np.sign(glo):
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    if g[-1] == 0.0:
        roots.append(t[-1])
    # tangential touches: interior local minima of |g| below threshold without a crossing
    absg = np.abs(g)
    tangential = 0
    for k in range(1, len(t) - 1):
        if absg[k] <= absg[k - 1] and absg[k] <= absg[k + 1] and 0 < absg[k] < threshold \
                and g[k - 1] * g[k + 1] > 0 and np.sign(g[k]) == np.sign(g[k - 1]):
            if not any(abs(r - t[k]) < 2 * (t[1] - t[0]) for r in roots):
                tangential += 1
    if tangential:
        warnings.warn(f"{tangential} tangential preimage(s) detected near a fold crease")
    merged = []
    for r in sorted(roots):
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    return merged, tangential
