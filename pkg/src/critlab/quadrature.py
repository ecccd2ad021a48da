"""Adaptive dyadic cubature with singular-locus refinement.

Cells are boxes processed breadth-first.  A cell that does not meet a
registered singular locus is refined until its tensor Gauss estimate agrees
with the sum over its 2^n children.  Cells meeting a locus are split every
level; the total after each level gives a sequence whose increments decide
convergence: geometrically shrinking increments are summed to the limit,
non-shrinking ones mark the integral as divergent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

GAUSS_ORDER = 4
BATCH_CELLS = 4096


class CompensatedSum:
    """Order-independent accumulation: batch sums are exact (fsum) and merged with fsum."""

    def __init__(self):
        self._parts: list[float] = []

    def add(self, values) -> None:
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size:
            self._parts.append(math.fsum(arr))

    def merge(self, other: "CompensatedSum") -> None:
        self._parts.extend(other._parts)

    @property
    def value(self) -> float:
        return math.fsum(self._parts)


@dataclass
class QuadResult:
    value: float
    error: float
    converged: bool
    divergent: bool
    cells: int
    level_totals: list = field(default_factory=list)
    note: str = ""


class _Rule:
    """Tensor Gauss-Legendre nodes on [0,1]^n for a cell and for its 2^n children."""

    def __init__(self, n: int, order: int):
        x, w = np.polynomial.legendre.leggauss(order)
        x, w = 0.5 * (x + 1.0), 0.5 * w
        grid = np.array(list(itertools.product(x, repeat=n)))
        wts = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
        corners = np.array(list(itertools.product((0.0, 0.5), repeat=n)))
        self.n, self.coarse_nodes, self.coarse_w = n, grid, wts
        self.fine_nodes = (corners[:, None, :] + 0.5 * grid[None, :, :]).reshape(-1, n)
        self.fine_w = np.tile(wts, len(corners)) / len(corners)
        self.corners = corners
        self.k_coarse, self.n_child = len(grid), len(corners)


def _eval_cells(fn, rule: _Rule, lo, hi):
    """Coarse estimate and per-child fine estimates for each cell."""
    width = hi - lo
    vol = np.prod(width, axis=1)
    nodes = np.concatenate([rule.coarse_nodes, rule.fine_nodes])
    pts = lo[:, None, :] + width[:, None, :] * nodes[None, :, :]
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(pts.reshape(-1, rule.n)), dtype=float).reshape(len(lo), -1)
    kc = rule.k_coarse
    coarse = vals[:, :kc] @ rule.coarse_w * vol
    fine_children = (vals[:, kc:] * rule.fine_w).reshape(len(lo), rule.n_child, kc).sum(axis=2) * vol[:, None]
    return coarse, fine_children


def _children(lo, hi, rule: _Rule):
    half = 0.5 * (hi - lo)
    clo = (lo[:, None, :] + rule.corners[None, :, :] * 2 * half[:, None, :]).reshape(-1, rule.n)
    chi = clo + np.repeat(half, rule.n_child, axis=0)
    return clo, chi


def integrate(fn: Callable, lo, hi, *, loci: Optional[Callable] = None, tol_rel: float = 1e-3,
              max_cells: int = 2_000_000, min_level: int = 2, max_level: int = 40,
              order: int = GAUSS_ORDER, abs_tol: float = 1e-13) -> QuadResult:
    """Integrate ``fn`` (points (m, n) -> values (m,)) over the box [lo, hi].

    ``loci(lo, hi)`` returns a mask of boxes that meet a singular locus.
    ``abs_tol`` is an absolute accuracy floor for the whole box, so that
    integrands that vanish up to rounding noise terminate.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    n = len(lo)
    rule = _Rule(n, order)
    loci = loci or (lambda a, b: np.zeros(len(a), dtype=bool))
    # initial grid
    ticks = [np.linspace(lo[j], hi[j], 2**min_level + 1) for j in range(n)]
    idx = np.array(list(itertools.product(range(2**min_level), repeat=n)))
    clo = np.column_stack([ticks[j][idx[:, j]] for j in range(n)])
    chi = np.column_stack([ticks[j][idx[:, j] + 1] for j in range(n)])

    total = CompensatedSum()
    cells_used = len(clo)
    sing = loci(clo, chi)
    reg_lo, reg_hi = clo[~sing], chi[~sing]
    sing_lo, sing_hi = clo[sing], chi[sing]
    # absolute accuracy is measured against the L1 norm, so integrands with
    # cancelling signs still terminate
    pilot, _ = _eval_cells(lambda X: np.abs(fn(X)), rule, clo, chi)
    scale = max(math.fsum(pilot[np.isfinite(pilot)]), 1e-300)
    domain_vol = float(np.prod(hi - lo))
    budget_hit = False
    unresolved = 0

    def refine_regular(rlo, rhi, depth_start):
        nonlocal cells_used, budget_hit, unresolved
        depth = depth_start
        while len(rlo):
            nxt_lo, nxt_hi = [], []
            for s in range(0, len(rlo), BATCH_CELLS):
                blo, bhi = rlo[s:s + BATCH_CELLS], rhi[s:s + BATCH_CELLS]
                coarse, fine_ch = _eval_cells(fn, rule, blo, bhi)
                fine = fine_ch.sum(axis=1)
                vol = np.prod(bhi - blo, axis=1)
                err = np.abs(fine - coarse)
                finite = np.isfinite(fine) & np.isfinite(coarse)
                ok = finite & ((err <= 0.1 * tol_rel * np.abs(fine)) | (err <= max(tol_rel * scale, abs_tol) * vol / domain_vol))
                if depth >= max_level or budget_hit:
                    unresolved += int(np.count_nonzero(~ok))
                    ok = np.ones_like(ok)
                    fine = np.where(np.isfinite(fine), fine, np.inf)
                total.add(fine[ok])
                if np.any(~ok):
                    c_lo, c_hi = _children(blo[~ok], bhi[~ok], rule)
                    cells_used += len(c_lo)
                    if cells_used > max_cells:
                        budget_hit = True
                    nxt_lo.append(c_lo)
                    nxt_hi.append(c_hi)
            rlo = np.concatenate(nxt_lo) if nxt_lo else np.zeros((0, n))
            rhi = np.concatenate(nxt_hi) if nxt_hi else np.zeros((0, n))
            depth += 1

    refine_regular(reg_lo, reg_hi, min_level)
    level_totals, increments = [], []
    converged = divergent = False
    note = ""
    level = min_level
    remainder = 0.0
    while True:
        if len(sing_lo):
            rem = CompensatedSum()
            for s in range(0, len(sing_lo), BATCH_CELLS):
                coarse, fine_ch = _eval_cells(fn, rule, sing_lo[s:s + BATCH_CELLS], sing_hi[s:s + BATCH_CELLS])
                rem.add(fine_ch.sum(axis=1))
            remainder = rem.value
        else:
            remainder = 0.0
        current = total.value + remainder
        level_totals.append(current)
        scale = max(scale, abs(current)) if math.isfinite(current) else scale
        if not len(sing_lo):
            converged = unresolved == 0 and not budget_hit
            break
        if len(level_totals) >= 2:
            increments.append(level_totals[-1] - level_totals[-2])
        verdict = _judge(level_totals, increments, tol_rel, abs_tol)
        if verdict is not None:
            converged, divergent, note = verdict
            break
        if budget_hit or level >= max_level:
            note = "cell budget exhausted" if budget_hit else "maximum refinement level reached"
            break
        # split singular cells; children off the locus go to regular refinement
        c_lo, c_hi = _children(sing_lo, sing_hi, rule)
        cells_used += len(c_lo)
        if cells_used > max_cells:
            budget_hit = True
        touch = loci(c_lo, c_hi)
        sing_lo, sing_hi = c_lo[touch], c_hi[touch]
        level += 1
        refine_regular(c_lo[~touch], c_hi[~touch], level)

    value, error = level_totals[-1], float("nan")
    limit = _extrapolate(level_totals, increments) if converged else None
    if limit is not None:
        prev = _extrapolate(level_totals[:-1], increments[:-1])
        value = limit
        error = abs(limit - prev) if prev is not None else abs(limit - level_totals[-1])
        # regular cells were each accepted at 0.1 * tol_rel relative accuracy
        error += 0.1 * tol_rel * abs(limit)
    elif converged:
        error = (abs(increments[-1]) if increments else 0.0) + 0.1 * tol_rel * abs(value)
    if unresolved:
        note = (note + "; " if note else "") + f"{unresolved} cells accepted unresolved"
    if divergent:
        value = math.inf
    return QuadResult(value, error, converged and not divergent, divergent, cells_used, level_totals, note)


def _extrapolate(totals, incs):
    """Geometric-tail limit T_L + d_L r / (1 - r) with r = d_L / d_{L-1}, or None."""
    if len(incs) < 2 or incs[-2] == 0:
        return None
    r = incs[-1] / incs[-2]
    if not 0 <= r < 0.98:
        return None
    return totals[-1] + incs[-1] * r / (1 - r)


def _judge(totals, incs, tol_rel, abs_tol=0.0):
    """(converged, divergent, note) once the level sequence is decisive, else None."""
    if any(not math.isfinite(t) for t in totals[-2:]):
        return False, True, "non-finite integrand values on singular cells"
    if len(incs) < 3:
        return None
    d0, d1, d2 = (abs(x) for x in incs[-3:])
    cur = max(abs(totals[-1]), 1e-300)
    if max(d1, d2) <= max(1e-15 * cur, abs_tol):
        return True, False, "locus contribution vanishes"
    a_now = _extrapolate(totals, incs)
    a_prev = _extrapolate(totals[:-1], incs[:-1])
    if a_now is not None and a_prev is not None and abs(a_now - a_prev) <= 0.5 * tol_rel * abs(a_now):
        return True, False, f"geometric tail, ratio {incs[-1] / incs[-2]:.4f}"
    # a geometric tail keeps one sign; small increments of mixed sign are
    # rounding/quadrature noise around an already resolved total
    signs = {math.copysign(1.0, x) for x in incs[-3:] if x != 0}
    if len(signs) == 2 and max(d0, d1, d2) <= 0.25 * tol_rel * cur:
        return True, False, "level totals stable to noise"
    if d0 > 0 and d1 > 0 and d1 / d0 >= 1.0 and d2 / d1 >= 1.0 and len(incs) >= 4 \
            and abs(incs[-4]) > 0 and d0 / abs(incs[-4]) >= 1.0:
        return False, True, f"increments grow by {d2 / d1:.4f} per level"
    return None
