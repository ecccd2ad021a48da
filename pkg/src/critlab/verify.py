"""Injectivity, degree, sign-constancy, mollification and distortion checks.

Grid-based checks are evidence on the sample only; reports say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .base import MapFamily, as_points, spectral_norm
from .folding import FoldingMap, folding_preimages

MAX_SAMPLES = 10**8
MAX_WITNESSES = 100


def grid_centers(lo, hi, res: int) -> np.ndarray:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    axes = [lo[j] + (hi[j] - lo[j]) * (np.arange(res) + 0.5) / res for j in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))


def _check_budget(n: int, res: int):
    if res < 2 or res**n > MAX_SAMPLES:
        raise ValueError(f"res^n = {res}^{n} outside the sample budget (<= 1e8)")


# -- injectivity -------------------------------------------------------------------


@dataclass
class InjectivityReport:
    sampled: int
    collisions: list
    verdict: str
    tol: float
    sep: float
    collision_count: int = 0

    def to_dict(self) -> dict:
        return {"sampled": self.sampled, "collisions": self.collisions, "verdict": self.verdict,
                "tol": self.tol, "sep": self.sep, "collisionCount": self.collision_count}


def injectivity_scan(m: MapFamily, res: int, lo=None, hi=None) -> InjectivityReport:
    """Look for x, y on a res^n grid with |f(x) - f(y)| < tol and |x - y| > sep.

    sep is two grid-cell widths of the unit scale, 2/res; tol is half the
    smallest local expansion h * sigma_min(Df) seen on the non-critical samples,
    so neighbouring samples of a locally injective map never collide.
    """
    lo = m.lo if lo is None else np.asarray(lo, dtype=float)
    hi = m.hi if hi is None else np.asarray(hi, dtype=float)
    _check_budget(m.n, res)
    X = grid_centers(lo, hi, res)
    Y = m._value(X)
    D = m._gradient(X)
    sig = np.linalg.svd(D, compute_uv=False)[:, -1]
    h = float(np.min(hi - lo)) / res
    positive = sig[sig > 1e-14]
    tol = 0.5 * h * float(positive.min()) if len(positive) else 0.0
    sep = 2.0 / res
    pairs = cKDTree(Y).query_pairs(tol, output_type="ndarray") if tol > 0 else np.zeros((0, 2), int)
    if len(pairs):
        far = np.linalg.norm(X[pairs[:, 0]] - X[pairs[:, 1]], axis=1) > sep
        pairs = pairs[far]
    witnesses = [(X[i].tolist(), X[j].tolist()) for i, j in pairs[:MAX_WITNESSES]]
    verdict = "collision-found" if len(pairs) else "injective-on-sample"
    return InjectivityReport(len(X), witnesses, verdict, tol, sep, int(len(pairs)))


# -- degree --------------------------------------------------------------------------


def box_boundary_loop(lo, hi, per_side: int = 2048) -> np.ndarray:
    """Counter-clockwise closed polyline around a 2-D box (last point not repeated)."""
    (x0, y0), (x1, y1) = lo, hi
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    return np.concatenate([
        np.column_stack([x0 + (x1 - x0) * t, np.full_like(t, y0)]),
        np.column_stack([np.full_like(t, x1), y0 + (y1 - y0) * t]),
        np.column_stack([x1 - (x1 - x0) * t, np.full_like(t, y1)]),
        np.column_stack([np.full_like(t, x0), y1 - (y1 - y0) * t]),
    ])


def degree_2d(m: MapFamily, y, loop=None) -> int:
    """Winding number of f(loop) around y by summed angle increments."""
    if m.n != 2:
        raise ValueError("degree_2d needs n = 2")
    loop = box_boundary_loop(m.lo, m.hi) if loop is None else np.asarray(loop, dtype=float)
    img = m._value(loop) - np.asarray(y, dtype=float)
    closed = np.vstack([img, img[:1]])
    spacing = float(np.max(np.linalg.norm(np.diff(closed, axis=0), axis=1)))
    margin = float(np.min(np.linalg.norm(img, axis=1)))
    if margin < 10 * spacing:
        raise ValueError(f"target within {margin:.3g} of the image curve (need >= {10 * spacing:.3g})")
    ang = np.arctan2(closed[:, 1], closed[:, 0])
    turns = math.fsum(np.angle(np.exp(1j * np.diff(ang)))) / (2 * math.pi)
    k = round(turns)
    if abs(turns - k) >= 0.05:
        raise ArithmeticError(f"winding sum {turns:.4f} is not near an integer")
    return int(k)


def folding_signed_count(m: FoldingMap, y, grid_res: int = 4096) -> int:
    """Sum of sign(J) over the transversal preimages of y."""
    roots, tangential = folding_preimages(m, y, grid_res)
    if tangential:
        raise ValueError("y is a critical value (tangential preimage)")
    y = np.asarray(y, dtype=float)
    P = np.tile(y, (len(roots), 1))
    if len(roots):
        P[:, 0] = roots
    return int(np.sum(np.sign(m._jac(P)))) if len(roots) else 0


# -- signs ----------------------------------------------------------------------------


@dataclass
class SignReport:
    pos_fraction: float
    neg_fraction: float
    zero_witnesses: list = field(default_factory=list)
    sampled: int = 0

    def to_dict(self) -> dict:
        return {"posFraction": self.pos_fraction, "negFraction": self.neg_fraction,
                "zeroWitnesses": self.zero_witnesses, "sampled": self.sampled}


def sign_constancy_scan(m: MapFamily, res: int, tol: float = 1e-12, lo=None, hi=None) -> SignReport:
    lo = m.lo if lo is None else lo
    hi = m.hi if hi is None else hi
    _check_budget(m.n, res)
    X = grid_centers(lo, hi, res)
    J = m._jac(X)
    zero = np.abs(J) <= tol
    return SignReport(float(np.mean(J > tol)), float(np.mean(J < -tol)),
                      X[zero][:MAX_WITNESSES].tolist(), len(X))


# -- mollification ------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproxCheckConfig:
    delta: float
    eta: float
    kernel_radius: float

    def __post_init__(self):
        if self.delta <= 0 or self.kernel_radius <= 0 or self.eta < 0:
            raise ValueError("need delta > 0, kernel_radius > 0 and eta >= 0")


def _bump_kernel(radius: float, n: int, order: int = 12):
    """Nodes and weights of the normalised bump exp(-1/(1-|z/R|^2)) by tensor Gauss."""
    x, w = np.polynomial.legendre.leggauss(order)
    Z = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n)
    W = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), -1).reshape(-1, n), axis=1)
    r2 = np.sum(Z**2, axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        psi = np.where(r2 < 1, np.exp(-1.0 / (1.0 - r2)), 0.0)
    W = W * psi
    keep = W > 0
    return radius * Z[keep], W[keep] / W[keep].sum()


class MollifiedMap(MapFamily):
    """f * psi_R sampled by a fixed kernel quadrature on the box G."""

    family = "mollified"

    def __init__(self, base: MapFamily, radius: float, lo, hi):
        self.base, self.radius = base, float(radius)
        self.n = base.n
        self.lo, self.hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        self.nodes, self.weights = _bump_kernel(radius, self.n)

    def _avg(self, fn, X):
        out = 0.0
        for z, w in zip(self.nodes, self.weights):
            out = out + w * fn(X - z)
        return out

    def _value(self, X):
        return self._avg(self.base._value, X)

    def _gradient(self, X):
        return self._avg(self.base._gradient, X)

    def _jac(self, X):
        return np.linalg.det(self._gradient(X))


def mollify_and_check(m: MapFamily, c: ApproxCheckConfig, lo, hi, res: int = 64):
    """(sampled min Jacobian of f * psi on G, injectivity verdict on G)."""
    if m.n != 2:
        raise ValueError("mollify_and_check needs n = 2")
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    R = c.kernel_radius
    if np.any(lo - R < m.lo) or np.any(hi + R > m.hi):
        raise ValueError("kernel radius exceeds the standoff between G and the domain boundary")
    halo = grid_centers(lo - R, hi + R, res)
    if np.min(m._jac(halo)) < 3 * c.delta:
        raise ValueError("J_f >= 3 delta fails on the kernel neighbourhood of G")
    mm = MollifiedMap(m, R, lo, hi)
    min_jac = float(np.min(mm._jac(grid_centers(lo, hi, res))))
    inj = injectivity_scan(mm, res)
    return min_jac, inj.verdict == "injective-on-sample"


# -- distortion ----------------------------------------------------------------------------


def distortion(m: MapFamily, x) -> float:
    """K = |Df|^n / J (spectral norm), and 1 where J = 0."""
    X, _ = as_points(x, m.n)
    D = m._gradient(X)[0]
    J = float(np.linalg.det(D))
    if J == 0.0:
        return 1.0
    return float(spectral_norm(D) ** m.n / J)
