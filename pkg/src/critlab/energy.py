"""Second-gradient energies, the Cantor per-generation series, the weak
Euler-Lagrange residual and the key capacity estimate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .base import MapFamily, det_and_cofactor
from .cantor import CantorMap, CantorSchedule, build_schedule
from .quadrature import QuadResult, integrate
from .regimes import RegimeParams, derive_exponents


@dataclass(frozen=True)
class EnergyParams:
    q: float
    a: float
    tol_rel: float = 1e-3
    max_cells: int = 2_000_000

    def __post_init__(self):
        if self.q < 1 or self.a <= 0:
            raise ValueError("need q >= 1 and a > 0")
        if not 1e-6 <= self.tol_rel <= 1e-1:
            raise ValueError("tol_rel must lie in [1e-6, 1e-1]")
        if not 0 < self.max_cells <= 10**8:
            raise ValueError("max_cells must lie in (0, 1e8]")


@dataclass
class EnergyReport:
    d2_integral: float
    jac_neg_integral: float
    converged: bool
    cells_used: int
    per_generation: list = field(default_factory=list)
    d2: Optional[QuadResult] = None
    jac: Optional[QuadResult] = None

    def to_dict(self) -> dict:
        out = {"d2Integral": self.d2_integral, "jacNegIntegral": self.jac_neg_integral,
               "converged": self.converged, "cellsUsed": self.cells_used,
               "perGeneration": self.per_generation}
        for name, res in (("d2", self.d2), ("jac", self.jac)):
            if res is not None:
                out[name] = {"value": res.value, "error": res.error, "converged": res.converged,
                             "divergent": res.divergent, "cells": res.cells, "note": res.note}
        return out


# -- integrands ---------------------------------------------------------------


def d2_density(m: MapFamily, q: float):
    """x -> |D^2 f(x)|^q with the Frobenius norm of all second partials."""
    def fn(X):
        H = m._hessian(X)
        return np.sqrt(np.sum(H * H, axis=(1, 2, 3))) ** q
    return fn


def jac_density(m: MapFamily, a: float):
    """x -> |J_f(x)|^{-a}."""
    def fn(X):
        with np.errstate(divide="ignore"):
            return np.abs(m._jac(X)) ** (-a)
    return fn


def energy(m: MapFamily, p: EnergyParams, lo=None, hi=None, channels=("d2", "jac")) -> EnergyReport:
    """Integrals of |D^2 f|^q and |J_f|^{-a} over the box (default: the map's domain).

    ``channels`` selects which of the two integrals to compute; a skipped one
    is reported as NaN and does not affect ``converged``.
    """
    lo = m.lo if lo is None else np.asarray(lo, dtype=float)
    hi = m.hi if hi is None else np.asarray(hi, dtype=float)
    kw = dict(loci=m.loci_touch, tol_rel=p.tol_rel, max_cells=p.max_cells)
    d2 = integrate(d2_density(m, p.q), lo, hi, **kw) if "d2" in channels else None
    jac = integrate(jac_density(m, p.a), lo, hi, **kw) if "jac" in channels else None
    done = [r for r in (d2, jac) if r is not None]
    return EnergyReport(d2.value if d2 else math.nan, jac.value if jac else math.nan,
                        all(r.converged for r in done), sum(r.cells for r in done), [], d2, jac)


# -- Cantor series -------------------------------------------------------------


def cantor_analytic_terms(p: RegimeParams, k: int):
    """Per-generation analytic terms for i = 1..k.

    D^2 channel: 2^{ni} |Q'_v| 2^{q(n/d - beta) i}; Jacobian channel:
    2^{ni} |Q'_v| 2^{a beta i}; |Q'_v| = a_{i-1}^n.  Returns the two lists and
    the exact exponents of the common ratios.
    """
    ex = derive_exponents(p)
    n, q, a, d, beta = p.n, float(p.q), float(p.a), float(p.d), ex.beta
    d2_terms, jac_terms = [], []
    for i in range(1, k + 1):
        vol = 2.0 ** (-(n / d) * (i - 1) * n)
        d2_terms.append(2.0 ** (n * i) * vol * 2.0 ** (q * (n / d - beta) * i))
        jac_terms.append(2.0 ** (n * i) * vol * 2.0 ** (a * beta * i))
    return d2_terms, jac_terms, ex.series_exp_d2_exact, ex.series_exp_jac_exact


def _annulus_boxes(center, outer, inner):
    """Boxes tiling Q(center, outer) minus Q(center, inner)."""
    n = len(center)
    cuts = [(-outer, -inner), (-inner, inner), (inner, outer)]
    boxes = []
    for combo in itertools.product(range(3), repeat=n):
        if all(c == 1 for c in combo):
            continue
        lo = np.array([center[j] + cuts[c][0] for j, c in enumerate(combo)])
        hi = np.array([center[j] + cuts[c][1] for j, c in enumerate(combo)])
        boxes.append((lo, hi))
    return boxes


def cantor_generation_numeric(p: RegimeParams, i: int, ep: EnergyParams):
    """(numericD2, numericJac, converged) for generation i.

    All 2^{ni} cells carry the same recentred g_i, so one cell is integrated
    and multiplied by the cell count.  D^2 g_i vanishes on Q_v, so the D^2
    channel covers the annulus Q'_v minus Q_v exactly as the Jacobian one.
    """
    s = build_schedule(p, i)
    m = CantorMap(s)
    _, z, _ = _first_cell(s, i)
    center = z[0]
    count = 2.0 ** (p.n * i)
    d2_sum, jac_sum, ok = 0.0, 0.0, True
    for lo, hi in _annulus_boxes(center, 0.5 * s.sides[i - 1], s.sides[i]):
        kw = dict(tol_rel=ep.tol_rel, max_cells=ep.max_cells)
        r2 = integrate(d2_density(m, ep.q), lo, hi, **kw)
        rj = integrate(jac_density(m, ep.a), lo, hi, **kw)
        d2_sum += r2.value
        jac_sum += rj.value
        ok &= r2.converged and rj.converged
    return count * d2_sum, count * jac_sum, ok


def _first_cell(s: CantorSchedule, i: int):
    """Center of the all-(+1) cell without enumerating every word."""
    z = np.zeros(s.n)
    zt = np.zeros(s.n)
    for j in range(1, i + 1):
        z += 0.5 * s.sides[j - 1]
        zt[:-1] += 0.5 * s.sides[j - 1]
        zt[-1] += 0.5 * s.heights[j - 1]
    return None, z[None, :], zt[None, :]


def cantor_series(s: CantorSchedule, ep: EnergyParams, numeric_generations: int = 0) -> EnergyReport:
    p = RegimeParams(s.n, s.q, s.a, s.d)
    d2_terms, jac_terms, e_d2, e_jac = cantor_analytic_terms(p, s.k)
    for name, e in (("D^2", e_d2), ("Jacobian", e_jac)):
        if e >= 0:
            raise ArithmeticError(f"{name} series ratio 2^{e} is not contractive")
    rows, ok = [], True
    for i in range(1, s.k + 1):
        row = {"i": i, "analyticD2Term": d2_terms[i - 1], "analyticJacTerm": jac_terms[i - 1],
               "numericD2": None, "numericJac": None}
        if i <= numeric_generations:
            nd2, njac, conv = cantor_generation_numeric(p, i, ep)
            row["numericD2"], row["numericJac"] = nd2, njac
            ok &= conv
        rows.append(row)
    d2_sum = math.fsum(d2_terms) if d2_terms else 0.0
    jac_sum = math.fsum(jac_terms) if jac_terms else 0.0
    return EnergyReport(d2_sum, jac_sum, ok, 0, rows)


def fitted_band_ratios(rows, channel: str):
    """numeric/analytic ratios for one channel ("D2" or "Jac"), raw and normalised
    by the constant fitted at the first numeric generation."""
    raw = [r[f"numeric{channel}"] / r[f"analytic{channel}Term"] for r in rows if r[f"numeric{channel}"] is not None]
    if not raw:
        return {"raw": [], "fittedConstant": None, "normalised": []}
    c = raw[0]
    return {"raw": raw, "fittedConstant": c, "normalised": [x / c for x in raw]}


def geometric_limit(first: float, exponent: Fraction) -> float:
    """Sum of first * r^j, j >= 0, with r = 2^exponent < 1."""
    return first / (1.0 - 2.0 ** float(exponent))


# -- weak Euler-Lagrange residual -------------------------------------------------


@dataclass(frozen=True)
class BumpField:
    """phi(x) = amp * prod_j (1 - u_j^2)^4 with u = (x - center)/halfwidth, zero outside the box."""

    center: tuple
    halfwidth: tuple
    amp: tuple

    @property
    def lo(self):
        return np.asarray(self.center) - np.asarray(self.halfwidth)

    @property
    def hi(self):
        return np.asarray(self.center) + np.asarray(self.halfwidth)

    def _factors(self, X):
        u = (X - np.asarray(self.center)) / np.asarray(self.halfwidth)
        r = np.asarray(self.halfwidth)
        inside = np.abs(u) < 1
        s = np.where(inside, 1 - u**2, 0.0)
        w = s**4
        w1 = -8 * u * s**3 / r
        w2 = (-8 * s**3 + 48 * u**2 * s**2) / r**2
        return w, w1, w2

    def parts(self, X):
        """Value (m, n), gradient (m, n, n) and Hessian (m, n, n, n)."""
        w, w1, w2 = self._factors(X)
        m, n = X.shape
        amp = np.asarray(self.amp, dtype=float)
        prod = np.prod(w, axis=1)
        grad = np.zeros((m, n))
        hess = np.zeros((m, n, n))
        for j in range(n):
            others = np.prod(np.delete(w, j, axis=1), axis=1)
            grad[:, j] = w1[:, j] * others
            hess[:, j, j] = w2[:, j] * others
            for k in range(j + 1, n):
                rest = np.prod(np.delete(w, [j, k], axis=1), axis=1)
                hess[:, j, k] = hess[:, k, j] = w1[:, j] * w1[:, k] * rest
        return (prod[:, None] * amp, amp[None, :, None] * grad[:, None, :],
                amp[None, :, None, None] * hess[:, None, :, :])


def _check_support(f: MapFamily, phi: BumpField):
    lo, hi = phi.lo, phi.hi
    if np.any(lo < f.lo) or np.any(hi > f.hi):
        raise ValueError("test-function support leaves the domain")
    if f.loci_touch(lo[None, :], hi[None, :])[0]:
        raise ValueError("test-function support touches a registered singular locus")
    g = np.stack(np.meshgrid(*[np.linspace(lo[j], hi[j], 9) for j in range(f.n)], indexing="ij"), -1)
    if np.any(f._jac(g.reshape(-1, f.n)) <= 0):
        raise ValueError("test-function support meets {J_f <= 0}")


def el_residual(f: MapFamily, phi: BumpField, ep: EnergyParams, tol_rel: float = 1e-8) -> float:
    """int DPsi(D^2 f) : D^2 phi + DPhi(Df) : Dphi over supp phi,
    with Psi(G) = |G|^q and Phi(A) = |det A|^{-a}."""
    _check_support(f, phi)
    q, a = ep.q, ep.a

    def integrand(X):
        G, A = f._hessian(X), f._gradient(X)
        _, dphi, d2phi = phi.parts(X)
        gn = np.sqrt(np.sum(G * G, axis=(1, 2, 3)))
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(gn > 0, q * gn ** (q - 2), 0.0)
        t1 = coef * np.sum(G * d2phi, axis=(1, 2, 3))
        det, cof = det_and_cofactor(A)
        dphi_a = -a * np.abs(det) ** (-a - 1) * np.sign(det)
        t2 = dphi_a * np.sum(cof * dphi, axis=(1, 2))
        return t1 + t2

    return integrate(integrand, phi.lo, phi.hi, tol_rel=tol_rel).value


def support_energy(f: MapFamily, phi: BumpField, ep: EnergyParams, h: float, tol_rel: float = 1e-10) -> float:
    """E(f + h phi) restricted to supp phi."""
    q, a = ep.q, ep.a

    def integrand(X):
        _, dphi, d2phi = phi.parts(X)
        G = f._hessian(X) + h * d2phi
        A = f._gradient(X) + h * dphi
        return np.sqrt(np.sum(G * G, axis=(1, 2, 3))) ** q + np.abs(np.linalg.det(A)) ** (-a)

    return integrate(integrand, phi.lo, phi.hi, tol_rel=tol_rel).value


def energy_fd_oracle(f: MapFamily, phi: BumpField, ep: EnergyParams, h: float = 1e-4) -> float:
    """Central difference (E(f + h phi) - E(f - h phi)) / (2h), Richardson-extrapolated
    over h and h/2 because D^2 phi may dwarf D^2 f."""
    def central(step):
        return (support_energy(f, phi, ep, step) - support_energy(f, phi, ep, -step)) / (2 * step)
    return (4 * central(0.5 * h) - central(h)) / 3


# -- key estimate ----------------------------------------------------------------


class LinearField:
    """g(x) = c . x + c0, vanishing on a hyperplane."""

    def __init__(self, coef, offset: float = 0.0):
        self.coef = np.asarray(coef, dtype=float)
        self.offset = float(offset)

    def value(self, X):
        return X @ self.coef + self.offset

    def gradient(self, X):
        return np.broadcast_to(self.coef, X.shape)

    def loci_touch(self, lo, hi):
        c = self.coef
        vmin = np.sum(np.minimum(c * lo, c * hi), axis=1) + self.offset
        vmax = np.sum(np.maximum(c * lo, c * hi), axis=1) + self.offset
        return (vmin <= 0) & (vmax >= 0)


class JacobianField:
    """g = J_f with grad J_k = sum_ij cof(Df)_ij d_k Df_ij; loci are the map's."""

    def __init__(self, m: MapFamily):
        self.m = m

    def value(self, X):
        return self.m._jac(X)

    def gradient(self, X):
        _, cof = det_and_cofactor(self.m._gradient(X))
        H = self.m._hessian(X)
        return np.einsum("mij,mijk->mk", cof, H)

    def loci_touch(self, lo, hi):
        return self.m.loci_touch(lo, hi)


def key_estimate_check(g, zeros, p: RegimeParams, b: float, js=range(2, 7), tol_rel: float = 1e-3) -> dict:
    """Ratio r^{n - a(1 - n/b)} (int_B |Dg|^b)^{-a/b} / int_B |g|^{-a} over cubes B = Q(z, 2^-j)."""
    n, a = p.n, float(p.a)
    rows = []
    for z in np.atleast_2d(np.asarray(zeros, dtype=float)):
        if abs(float(g.value(z[None, :])[0])) > 1e-12:
            raise ValueError(f"g does not vanish at {z.tolist()}")
        for j in js:
            r = 2.0 ** (-j)
            lo, hi = z - r, z + r
            grad_int = integrate(lambda X: np.linalg.norm(g.gradient(X), axis=1) ** b, lo, hi,
                                 loci=g.loci_touch, tol_rel=tol_rel)
            with np.errstate(divide="ignore"):
                inv_int = integrate(lambda X: np.abs(g.value(X)) ** (-a), lo, hi, loci=g.loci_touch, tol_rel=tol_rel)
            lhs = r ** (n - a * (1 - n / b)) / grad_int.value ** (a / b)
            rhs = inv_int.value if not inv_int.divergent else math.inf
            rows.append({"zero": z.tolist(), "j": j, "r": r, "lhs": lhs, "rhs": rhs,
                         "ratio": lhs / rhs if math.isfinite(rhs) else 0.0,
                         "converged": grad_int.converged and inv_int.converged})
    finite = [row["ratio"] for row in rows if row["ratio"] > 0]
    return {"rows": rows, "max_ratio": max(finite) if finite else math.inf,
            "variation": (max(finite) / min(finite)) if finite else math.inf}
