"""Mollifier kernel, smoothed piecewise-linear profiles and smooth cutoffs.

The standard bump ``phi(t) = c * exp(-1 / (1 - t^2))`` on (-1, 1) is used for
every mollification in the package.  Convolving a piecewise-linear function
with ``phi_r`` only changes it near its kinks, and near a kink at ``t_k`` the
result is ``r * R((t - t_k) / r)`` times the slope jump, where ``R`` is the
convolution of the ramp ``u_+`` with ``phi``.  ``R``, its derivative (the kernel
CDF) and second derivative (``phi`` itself) are evaluated from a cubic Hermite
table whose node derivatives are exact, so profile values are accurate to
roughly machine precision and no per-query quadrature is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit

_TABLE_NODES = 4001
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _raw_bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _cell_integrals(fn, nodes):
    """Integral of ``fn`` over each [nodes[k], nodes[k+1]] by 16-point Gauss."""
    lo, hi = nodes[:-1], nodes[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    return (fn(pts) * _GL_W[None, :]).sum(axis=1) * half


class _BumpTables:
    def __init__(self, nodes: int = _TABLE_NODES):
        u = np.linspace(-1.0, 1.0, nodes)
        pieces = _cell_integrals(_raw_bump, u)
        total = pieces.sum()
        self.norm = 1.0 / total
        cdf = np.concatenate([[0.0], np.cumsum(pieces)]) * self.norm
        cdf[-1] = 1.0
        pdf = _raw_bump(u) * self.norm
        self.cdf = CubicHermiteSpline(u, cdf, pdf, extrapolate=False)

        # first moment tail m(s) = int_s^1 v phi(v) dv on [0, 1]
        s = np.linspace(0.0, 1.0, nodes // 2 + 1)
        mom = _cell_integrals(lambda v: v * _raw_bump(v), s) * self.norm
        tail = np.concatenate([np.cumsum(mom[::-1])[::-1], [0.0]])
        self.moment = CubicHermiteSpline(s, tail, -s * _raw_bump(s) * self.norm, extrapolate=False)


_TABLES = _BumpTables()
BUMP_NORMALIZATION = _TABLES.norm


def bump(u):
    """Normalized bump ``phi(u)``; zero outside (-1, 1) and integrates to 1."""
    return _raw_bump(u) * BUMP_NORMALIZATION


def bump_cdf(u):
    """``Phi(u) = int_{-1}^u phi``."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    return np.clip(_TABLES.cdf(u), 0.0, 1.0)


def ramp_smoothed(u):
    """Convolution of the ramp ``max(u, 0)`` with ``phi`` (unit radius)."""
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, -1.0, 1.0)
    inner = uc * bump_cdf(uc) + _TABLES.moment(np.abs(uc))
    return np.where(u >= 1.0, u, np.where(u <= -1.0, 0.0, inner))


def mollifier(r: float):
    """Return ``phi_r(t) = phi(t / r) / r`` as a callable."""
    if r <= 0:
        raise ValueError("mollifier radius must be positive")
    return lambda t: bump(np.asarray(t, dtype=float) / r) / r


@dataclass(frozen=True)
class SmoothedPiecewiseLinear:
    """``p * phi_r`` for ``p(t) = c0 + s0*t + sum_k jumps[k] * (t - kinks[k])_+``.

    Returns value, first and second derivative in closed form.
    """

    c0: float
    s0: float
    kinks: tuple
    jumps: tuple
    radius: float

    def __call__(self, t):
        return self.evaluate(t)[0]

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        r = self.radius
        val = self.c0 + self.s0 * t
        d1 = np.full_like(t, self.s0)
        d2 = np.zeros_like(t)
        for tk, dk in zip(self.kinks, self.jumps):
            u = (t - tk) / r
            val = val + dk * r * ramp_smoothed(u)
            d1 = d1 + dk * bump_cdf(u)
            d2 = d2 + dk * bump(u) / r
        return val, d1, d2


def piecewise_linear_kinks(breaks: Sequence[float], slopes: Sequence[float], value_at_zero: float = 0.0):
    """Kink form of a continuous piecewise-linear function.

    ``slopes[0]`` applies left of ``breaks[0]``, ``slopes[k]`` between
    ``breaks[k-1]`` and ``breaks[k]``.  Returns ``(c0, s0, kinks, jumps)``.
    """
    if len(slopes) != len(breaks) + 1:
        raise ValueError("need one more slope than break")
    jumps = tuple(float(slopes[k + 1] - slopes[k]) for k in range(len(breaks)))
    return float(value_at_zero), float(slopes[0]), tuple(float(b) for b in breaks), jumps


# -- smooth cutoff ----------------------------------------------------------


def _step_parts(u):
    """Smooth step S(u) (0 at u<=0, 1 at u>=1) with S' and S''."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    ui = np.where(inside, u, 0.5)
    g = 1.0 / ui - 1.0 / (1.0 - ui)
    s = expit(-g)
    s1m = s * (1.0 - s)
    k = 1.0 / ui**2 + 1.0 / (1.0 - ui) ** 2
    kp = -2.0 / ui**3 + 2.0 / (1.0 - ui) ** 3
    ds = s1m * k
    d2s = ds * (1.0 - 2.0 * s) * k + s1m * kp
    s = np.where(inside, s, np.where(u >= 1.0, 1.0, 0.0))
    ds = np.where(inside, ds, 0.0)
    d2s = np.where(inside, d2s, 0.0)
    return s, ds, d2s


@dataclass(frozen=True)
class SmoothCutoff:
    """C-infinity cutoff equal to 1 on (-inf, a], 0 on [b, inf), strictly decreasing between."""

    a: float
    b: float

    def __post_init__(self):
        if not 0 <= self.a < self.b:
            raise ValueError("cutoff needs 0 <= a < b")

    def evaluate(self, t):
        w = self.b - self.a
        s, ds, d2s = _step_parts((self.b - np.asarray(t, dtype=float)) / w)
        return s, -ds / w, d2s / w**2

    def __call__(self, t):
        return self.evaluate(t)[0]
