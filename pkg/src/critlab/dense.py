"""Finite compositions of radial maps whose Jacobians vanish at chosen centers.

Each factor f_{x,r} is the radial map y -> x + h(|y-x|)(y-x)/|y-x| built
from the profile h with parameter rho = r/3:

    h(t) = t L / log(1/t)                 0 < t <= rho         (L = log(1/rho))
    piecewise linear with slopes 1 + 1/L, 1 - 1/L, 1 on [rho, 3rho/2, 2rho, inf),
    mollified with the kernel of radius rho/4 for t >= 5rho/4.

The profile equals t for t >= 9rho/4 = 3r/4, so the factor is the identity
outside B(x, 3r/4).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .base import DomainError, MapFamily
from .kernels import SmoothedPiecewiseLinear

MAX_RADIUS = 0.1
# the D^2 increment decays only like 1/log(1/r); cap the search instead of underflowing r
MAX_HALVINGS = 8


@dataclass(frozen=True)
class DenseProfile:
    r: float
    rho: float = field(init=False)
    L: float = field(init=False)
    smooth: SmoothedPiecewiseLinear = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.r < MAX_RADIUS:
            raise ValueError(f"factor radius must lie in (0, {MAX_RADIUS}), got {self.r}")
        rho = self.r / 3.0
        L = math.log(1.0 / rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "L", L)
        spl = SmoothedPiecewiseLinear(-rho / L, 1.0 + 1.0 / L, (1.5 * rho, 2.0 * rho), (-2.0 / L, 1.0 / L), rho / 4)
        object.__setattr__(self, "smooth", spl)

    @property
    def support(self) -> float:
        """h(t) = t for t >= support."""
        return 2.25 * self.rho

    @property
    def middle_slope(self) -> float:
        return 1.0 + 1.0 / self.L

    def evaluate(self, t):
        """h, h', h'' at t >= 0 (h'' is +inf at t = 0)."""
        t = np.asarray(t, dtype=float)
        L, rho = self.L, self.rho
        val, d1, d2 = np.array(t, copy=True), np.ones_like(t), np.zeros_like(t)
        log_part = t < rho
        mid = (t >= rho) & (t < self.support)
        if np.any(log_part):
            tl = t[log_part]
            with np.errstate(divide="ignore", invalid="ignore"):
                ell = -np.log(tl)
                val[log_part] = np.where(tl > 0, tl * L / ell, 0.0)
                d1[log_part] = np.where(tl > 0, L / ell + L / ell**2, 0.0)
                d2[log_part] = np.where(tl > 0, L / (tl * ell**2) + 2 * L / (tl * ell**3), np.inf)
        if np.any(mid):
            v, s1, s2 = self.smooth.evaluate(t[mid])
            val[mid], d1[mid], d2[mid] = v, s1, s2
        return val, d1, d2

    def ratio(self, t):
        """h(t)/t with its limit 0 at t = 0."""
        t = np.asarray(t, dtype=float)
        h = self.evaluate(t)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, h / np.where(t > 0, t, 1.0), 0.0)

    def jacobian(self, t):
        """J = h'(t) h(t) / t of the planar factor."""
        return self.evaluate(t)[1] * self.ratio(t)

    def d2_surrogate(self, t):
        """max{|h''|, |h'/t - h/t^2|} for t > 0."""
        h, d1, d2 = self.evaluate(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.maximum(np.abs(d2), np.abs(d1 / t - h / t**2))

    # -- per-factor integrals over B(x, r) ----------------------------------
    def _polar(self, log_piece, smooth_piece):
        """2 pi int_0^support F(t) t dt.

        ``log_piece(u)`` is the integrand F(t) t^2 written in u = log(1/t) on
        [L, inf) (dt = -t du); ``smooth_piece(t)`` is F on [rho, support].
        """
        inner, _ = integrate.quad(log_piece, self.L, np.inf, limit=200)
        rho = self.rho
        pts = [1.25 * rho, 1.75 * rho, 2.0 * rho]
        outer, _ = integrate.quad(lambda t: smooth_piece(t) * t, rho, self.support, points=pts, limit=200)
        return 2 * math.pi * (inner + outer)

    def d2_energy(self) -> float:
        """int_{B(x,r)} |D^2 f|^2 with the radial surrogate norm, in closed form.

        On t >= rho the profile is t + (rho/L) k(t/rho) for a fixed shape k, so
        that part contributes B / L^2 with a universal constant B; the log piece
        integrates exactly.
        """
        L = self.L
        return 2 * math.pi * (1 / (3 * L) + (1 + _smooth_d2_constant()) / L**2 + 4 / (5 * L**3))

    def d2_energy_quadrature(self) -> float:
        """Same integral as ``d2_energy`` by adaptive quadrature (cross-check)."""
        L = self.L
        return self._polar(
            lambda u: (L * (1 / u**2 + 2 / u**3)) ** 2,
            lambda t: float(self.d2_surrogate(np.array([t]))[0]) ** 2,
        )

    def exp_jac_excess(self) -> float:
        """int_{B(x,r)} |exp(J^{-1/3}) - e|; J = 1 outside the support."""
        L = self.L

        def log_piece(u):
            J = (L / u) ** 2 * (1 + 1 / u)
            return abs(math.exp(J ** (-1 / 3) - 2 * u) - math.exp(1 - 2 * u))

        def smooth_piece(t):
            J = float(self.jacobian(np.array([t]))[0])
            return abs(math.exp(J ** (-1 / 3)) - math.e)

        return self._polar(log_piece, smooth_piece)


@functools.lru_cache(maxsize=1)
def _smooth_d2_constant() -> float:
    """L^2 / (2 pi) * int_{rho < |y| < 9rho/4} |D^2 f|^2, independent of r."""
    prof = DenseProfile(0.03)
    L, rho = prof.L, prof.rho
    pts = [1.25 * rho, 1.75 * rho, 2.0 * rho]
    val, _ = integrate.quad(lambda t: float(prof.d2_surrogate(np.array([t]))[0]) ** 2 * t,
                            rho, prof.support, points=pts, limit=200)
    return val * L**2


class DenseMap(MapFamily):
    """g_k = f_{x_k, r_k} o ... o f_{x_1, r_1} on the closed unit disk."""

    family = "dense"

    def __init__(self, centers, radii):
        C = np.asarray(centers, dtype=float).reshape(-1, 2)
        R = np.asarray(radii, dtype=float).reshape(-1)
        if len(C) != len(R):
            raise ValueError("centers and radii must have equal length")
        validate_dense(C, R)
        self.n = 2
        self.centers, self.radii = C, R
        self.profiles = [DenseProfile(float(r)) for r in R]
        self.lo, self.hi = np.full(2, -1.0), np.full(2, 1.0)

    @property
    def depth(self) -> int:
        return len(self.radii)

    def contains(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X, axis=1) <= 1.0 + 1e-12

    @property
    def volume(self) -> float:
        return math.pi

    def _factor(self, k, Y):
        """Value, Df and J of factor k at points Y."""
        prof, c = self.profiles[k], self.centers[k]
        d = Y - c
        t = np.linalg.norm(d, axis=1)
        m = len(Y)
        val, D, J = Y.copy(), np.broadcast_to(np.eye(2), (m, 2, 2)).copy(), np.ones(m)
        act = t < prof.support
        if np.any(act):
            ta, da = t[act], d[act]
            h, h1, _ = prof.evaluate(ta)
            pos = ta > 0
            safe = np.where(pos, ta, 1.0)
            phi = np.where(pos, h / safe, 0.0)
            psi = np.where(pos, (h1 / safe - h / safe**2) / safe, 0.0)
            val[act] = c + phi[:, None] * da
            D[act] = phi[:, None, None] * np.eye(2) + psi[:, None, None] * da[:, :, None] * da[:, None, :]
            J[act] = h1 * phi
        return val, D, J

    def _run(self, X):
        Y = X.copy()
        D = np.broadcast_to(np.eye(2), (len(X), 2, 2)).copy()
        J = np.ones(len(X))
        for k in range(self.depth):
            Y, Dk, Jk = self._factor(k, Y)
            D = Dk @ D
            J = J * Jk
        return Y, D, J

    def _value(self, X):
        return self._run(X)[0]

    def _gradient(self, X):
        return self._run(X)[1]

    def _jac(self, X):
        return self._run(X)[2]

    def singular_distance(self, X):
        X = np.atleast_2d(X)
        if not self.depth:
            return np.full(len(X), np.inf)
        # centers and the mollification seams of every factor
        out = np.full(len(X), np.inf)
        for prof, c in zip(self.profiles, self.centers):
            t = np.linalg.norm(X - c, axis=1)
            out = np.minimum(out, np.minimum(t, np.abs(t - prof.rho)))
        return out

    def loci_touch(self, lo, hi):
        touch = np.zeros(len(lo), dtype=bool)
        for c in self.centers:
            touch |= np.all((lo <= c) & (hi >= c), axis=1)
        return touch

    def to_spec(self):
        return {"family": "dense", "n": 2,
                "params": {"centers": self.centers.tolist(), "radii": self.radii.tolist()}}


def density_bounds(centers: np.ndarray, k: int) -> float:
    """Strict upper bound for r_k (0-based k).

    Combines min{1 - |x_k|, 4^{-k} |x_k - x_j|^2} with the requirement that
    earlier balls avoid x_k's ball, so that x_k stays a fixed critical point.
    """
    c = centers[k]
    bound = 1.0 - float(np.linalg.norm(c))
    for j in range(k):
        dist = float(np.linalg.norm(c - centers[j]))
        bound = min(bound, 4.0 ** (-k) * dist**2)
    return min(bound, MAX_RADIUS)


def validate_dense(centers: np.ndarray, radii: np.ndarray):
    for k, (c, r) in enumerate(zip(centers, radii)):
        if not np.all(np.isfinite(c)) or np.linalg.norm(c) >= 1.0:
            raise DomainError(f"center {k} must lie in the open unit disk")
        for j in range(k):
            dist = float(np.linalg.norm(c - centers[j]))
            if dist == 0.0:
                raise ValueError("centers must be distinct")
            if r + radii[j] >= dist:
                raise ValueError(f"ball {k} overlaps ball {j}")
        if not 0 < r < density_bounds(centers, k):
            raise ValueError(f"radius r_{k + 1}={r} violates the density-point constraint")


@dataclass(frozen=True)
class RadiusChoice:
    radius: float
    d2_increment: float
    jac_increment: float
    halvings: int
    budgets_met: bool


def choose_radii(centers, max_halvings: int = MAX_HALVINGS) -> tuple[np.ndarray, list[RadiusChoice]]:
    """r_i = min(constraint/2, 8^-i), halved until the 2^{-2i} / 2^{-i} budgets hold (i 1-based)."""
    C = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii, report = [], []
    for k in range(len(C)):
        i = k + 1
        bound = density_bounds(C, k)
        for j in range(k):
            bound = min(bound, float(np.linalg.norm(C[k] - C[j])) - radii[j])
        r = min(0.5 * bound, 8.0 ** (-i))
        if r <= 0:
            raise ValueError(f"center {k} leaves no admissible radius")
        for halvings in range(max_halvings + 1):
            prof = DenseProfile(r)
            d2 = prof.d2_energy()
            if d2 <= 2.0 ** (-2 * i) or halvings == max_halvings:
                je = prof.exp_jac_excess()
                met = d2 <= 2.0 ** (-2 * i) and je <= 2.0 ** (-i)
                if met or halvings == max_halvings:
                    break
            r *= 0.5
        radii.append(r)
        report.append(RadiusChoice(r, d2, je, halvings, met))
    return np.array(radii), report


def dense_eval(m: DenseMap, x):
    """(value, J) at a single point."""
    return m.value(x), float(m.jac(x))


def dense_df_bound(m: DenseMap, samples: int = 20001) -> float:
    """Largest sup |Df_{x_i, r_i}| = max{h', h/t} over a dense radial sample per factor."""
    best = 1.0
    for prof in m.profiles:
        t = np.concatenate([np.geomspace(1e-300, prof.rho, samples // 2), np.linspace(prof.rho, prof.support, samples)])
        h, h1, _ = prof.evaluate(t)
        best = max(best, float(np.max(h1)), float(np.max(prof.ratio(t))))
    return best
