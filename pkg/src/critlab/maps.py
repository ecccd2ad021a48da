"""Radial, Ball and folding mapping families with closed-form derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .base import DomainError, MapFamily, as_points

# -- radial profiles ---------------------------------------------------------


@dataclass(frozen=True)
class PowerProfile:
    """rho(t) = c * t**p, strictly increasing for c, p > 0."""

    p: float
    c: float = 1.0

    def __post_init__(self):
        if self.p <= 0 or self.c <= 0:
            raise ValueError("power profile needs p > 0 and c > 0")

    def __call__(self, t):
        return self.evaluate(t)[0]

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        p, c = self.p, self.c
        return c * t**p, c * p * t ** (p - 1), c * p * (p - 1) * t ** (p - 2)

    def to_spec(self):
        return {"kind": "power", "p": self.p, "c": self.c}


@dataclass(frozen=True)
class CallableProfile:
    """Profile from user callables returning rho, rho' and rho''."""

    rho: Callable
    drho: Callable
    d2rho: Callable

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.rho(t), float), np.asarray(self.drho(t), float), np.asarray(self.d2rho(t), float)


def profile_from_spec(spec: dict):
    kind = spec.get("kind", "power")
    if kind != "power":
        raise ValueError(f"unknown radial profile kind {kind!r}")
    return PowerProfile(p=float(spec["p"]), c=float(spec.get("c", 1.0)))


# -- radial map --------------------------------------------------------------


class RadialMap(MapFamily):
    """h(x) = rho(|x|) x / |x| on the cube [-side, side]^n minus the origin."""

    family = "radial"

    def __init__(self, profile, n: int, side: float = 1.0):
        if n < 2:
            raise ValueError("dimension must be at least 2")
        self.profile, self.n, self.side = profile, int(n), float(side)
        self.lo = np.full(self.n, -self.side)
        self.hi = np.full(self.n, self.side)

    def _checked(self, x):
        X, single = super()._checked(x)
        if np.any(np.linalg.norm(X, axis=1) == 0.0):
            raise DomainError("radial formulas are singular at the origin")
        return X, single

    def _radial_terms(self, X):
        r = np.linalg.norm(X, axis=1)
        rho, d1, d2 = self.profile.evaluate(r)
        return r, rho, d1, d2

    def _value(self, X):
        r, rho, _, _ = self._radial_terms(X)
        return X * (rho / r)[:, None]

    def _gradient(self, X):
        # Dh = phi I + psi x x^T with phi = rho/r, psi = phi'/r
        r, rho, d1, _ = self._radial_terms(X)
        phi = rho / r
        psi = (d1 / r - rho / r**2) / r
        return phi[:, None, None] * np.eye(self.n) + psi[:, None, None] * X[:, :, None] * X[:, None, :]

    def _jac(self, X):
        r, rho, d1, _ = self._radial_terms(X)
        return d1 * (rho / r) ** (self.n - 1)

    def _hessian(self, X):
        r, rho, d1, d2 = self._radial_terms(X)
        dphi = d1 / r - rho / r**2
        d2phi = d2 / r - 2 * d1 / r**2 + 2 * rho / r**3
        psi = dphi / r
        dpsi = d2phi / r - dphi / r**2
        u = X / r[:, None]
        eye = np.eye(self.n)
        # d_k d_j h_i = phi' u_k d_ij + psi' u_k x_i x_j + psi (d_ik x_j + d_jk x_i)
        H = dphi[:, None, None, None] * eye[None, :, :, None] * u[:, None, None, :]
        H = H + dpsi[:, None, None, None] * X[:, :, None, None] * X[:, None, :, None] * u[:, None, None, :]
        H = H + psi[:, None, None, None] * (eye[None, :, None, :] * X[:, None, :, None]
                                            + eye[None, None, :, :] * X[:, :, None, None])
        return H

    def df_norm(self, x):
        """max{rho/r, |rho'|}: the operator norm of Dh."""
        X, single = self._checked(x)
        r, rho, d1, _ = self._radial_terms(X)
        out = np.maximum(np.abs(rho / r), np.abs(d1))
        return out[0] if single else out

    def d2_surrogate(self, x):
        """max{|rho''|, |rho/r^2 - rho'/r|}: size of D^2 h up to dimension constants."""
        X, single = self._checked(x)
        r, rho, d1, d2 = self._radial_terms(X)
        out = np.maximum(np.abs(d2), np.abs(rho / r**2 - d1 / r))
        return out[0] if single else out

    def singular_distance(self, X):
        return np.linalg.norm(np.atleast_2d(X), axis=1)

    def loci_touch(self, lo, hi):
        return np.all((lo <= 0.0) & (hi >= 0.0), axis=1)

    def to_spec(self):
        return {"family": "radial", "n": self.n, "params": {"profile": self.profile.to_spec(), "side": self.side}}


def radial_eval(m: RadialMap, x):
    """(value, |Df|, J, |D^2 f| surrogate) at a single point."""
    return m.value(x), float(m.df_norm(x)), float(m.jac(x)), float(m.d2_surrogate(x))


# -- Ball's cavitation-collapse map -----------------------------------------


def ball_beta_window(n: int, q: float, a: float) -> tuple[float, float]:
    """Open interval (2 - (n-1)/q, (n-1)/a) of admissible collapse exponents."""
    return 2.0 - (n - 1) / q, (n - 1) / a


class BallMap(MapFamily):
    """f(x) = [x_bar, |x_bar|^beta x_n] on [-1,1]^{n-1} x [-1,1], extended to |x_n| <= 2.

    On |x_n| > 1 the last component is sgn(x_n) ((|x_n|-1)^2 + |x_bar|^beta |x_n|).
    """

    family = "ball"

    def __init__(self, n: int, q: float, a: float, beta: float | None = None, strict: bool = True):
        if n < 2:
            raise ValueError("dimension must be at least 2")
        lo, hi = ball_beta_window(n, q, a)
        if beta is None:
            if not lo < hi:
                raise ValueError(f"empty beta window ({lo}, {hi}): need a(2/(n-1) - 1/q) < 1")
            beta = 0.5 * (lo + hi)
        if strict and not lo < beta < hi:
            raise ValueError(f"beta={beta} outside ({lo}, {hi})")
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.n, self.q, self.a, self.beta = int(n), float(q), float(a), float(beta)
        self.lo = np.concatenate([np.full(n - 1, -1.0), [-2.0]])
        self.hi = np.concatenate([np.full(n - 1, 1.0), [2.0]])

    def _parts(self, X):
        xb, xn = X[:, :-1], X[:, -1]
        R = np.linalg.norm(xb, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            Rb = R**self.beta
        return xb, xn, R, Rb, np.abs(xn) > 1.0

    def _value(self, X):
        xb, xn, R, Rb, outer = self._parts(X)
        last = np.where(outer, np.sign(xn) * ((np.abs(xn) - 1.0) ** 2 + Rb * np.abs(xn)), Rb * xn)
        return np.column_stack([xb, last])

    def _gradient(self, X):
        xb, xn, R, Rb, outer = self._parts(X)
        m, n, b = len(X), self.n, self.beta
        G = np.zeros((m, n, n))
        G[:, np.arange(n - 1), np.arange(n - 1)] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(R > 0, b * R ** (b - 2.0), 0.0 if b > 1 else np.inf)
        G[:, -1, :-1] = np.where(xb == 0, 0.0, coef[:, None] * xb * xn[:, None])
        G[:, -1, -1] = Rb + np.where(outer, 2.0 * (np.abs(xn) - 1.0), 0.0)
        return G

    def _jac(self, X):
        xb, xn, R, Rb, outer = self._parts(X)
        return Rb + np.where(outer, 2.0 * (np.abs(xn) - 1.0), 0.0)

    def _hessian(self, X):
        xb, xn, R, Rb, outer = self._parts(X)
        m, n, b = len(X), self.n, self.beta
        H = np.zeros((m, n, n, n))
        with np.errstate(divide="ignore", invalid="ignore"):
            c2 = b * R ** (b - 2.0)
            c4 = b * (b - 2.0) * R ** (b - 4.0)
            tang = c4[:, None, None] * xb[:, :, None] * xb[:, None, :] + c2[:, None, None] * np.eye(n - 1)
        H[:, -1, :-1, :-1] = tang * xn[:, None, None]
        H[:, -1, :-1, -1] = c2[:, None] * xb
        H[:, -1, -1, :-1] = c2[:, None] * xb
        H[:, -1, -1, -1] = np.where(outer, 2.0 * np.sign(xn), 0.0)
        H[R == 0] = np.inf
        return H

    def d2_dominant(self, x):
        """Analytic dominant term |x_bar|^(beta-2) of |D^2 f| on the core."""
        X, single = self._checked(x)
        R = np.linalg.norm(X[:, :-1], axis=1)
        with np.errstate(divide="ignore"):
            out = R ** (self.beta - 2.0)
        return out[0] if single else out

    def singular_distance(self, X):
        X = np.atleast_2d(X)
        # the segment {x_bar = 0} and the non-smooth planes |x_n| = 1
        return np.minimum(np.linalg.norm(X[:, :-1], axis=1), np.abs(np.abs(X[:, -1]) - 1.0))

    def loci_touch(self, lo, hi):
        axis = np.all((lo[:, :-1] <= 0.0) & (hi[:, :-1] >= 0.0), axis=1)
        # the seams |x_n| = 1 only matter when they cut through a cell's interior
        planes = ((lo[:, -1] < 1.0) & (hi[:, -1] > 1.0)) | ((lo[:, -1] < -1.0) & (hi[:, -1] > -1.0))
        return axis | planes

    def to_spec(self):
        return {"family": "ball", "n": self.n, "params": {"q": self.q, "a": self.a, "beta": self.beta}}


def ball_eval(m: BallMap, x):
    """(value, J, |D^2 f| dominant term) at a single point."""
    return m.value(x), float(m.jac(x)), float(m.d2_dominant(x))


def ball_boundary_sample(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish points on the boundary of [-1,1]^{n-1} x [-2,2]."""
    hi = np.concatenate([np.ones(n - 1), [2.0]])
    pts = rng.uniform(-hi, hi, size=(count, n))
    face = rng.integers(0, n, size=count)
    side = rng.choice([-1.0, 1.0], size=count)
    pts[np.arange(count), face] = side * hi[face]
    return pts


def pairwise_distinct(Y: np.ndarray, tol: float = 1e-12) -> bool:
    """True if no two rows of Y coincide (within tol)."""
    return len(cKDTree(Y).query_pairs(tol)) == 0


__all__ = [
    "PowerProfile", "CallableProfile", "profile_from_spec", "RadialMap", "radial_eval",
    "BallMap", "ball_eval", "ball_beta_window", "ball_boundary_sample", "pairwise_distinct",
    "as_points",
]
