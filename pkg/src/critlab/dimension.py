"""Box-counting dimension of the Cantor sets and of near-critical sets {|J_f| <= eps}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .base import MapFamily
from .cantor import CantorMap, CantorSchedule, cell_centers

GRID_DEPTH_LIMIT = {2: 12, 3: 8}
SLAB_POINTS = 1 << 20


@dataclass
class DimensionReport:
    scales: list
    counts: list
    slope: float
    target_d: Optional[float]
    epsilon_rule: str
    residual: float = 0.0
    flagged: str = ""
    fitted_constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"scales": self.scales, "counts": self.counts, "slope": self.slope, "targetD": self.target_d,
                "epsilonRule": self.epsilon_rule, "residual": self.residual, "flagged": self.flagged,
                "fittedConstants": self.fitted_constants}


def fit_slope(scales, counts, deepest: Optional[int] = None):
    """Least-squares slope of log2 count against log2(1/side), with the RMS residual."""
    s = np.asarray(scales, dtype=float)
    c = np.asarray(counts, dtype=float)
    if deepest is not None:
        s, c = s[-deepest:], c[-deepest:]
    if len(s) < 3:
        raise ValueError("at least 3 scales are needed for a slope")
    if np.any(c <= 0):
        return float("nan"), float("nan")
    x, y = -np.log2(s), np.log2(c)
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return float(coef[0]), rms


# -- explicit Cantor sets -------------------------------------------------------


def box_dimension_of_set(s: CantorSchedule, which: str = "Q", generations=None) -> DimensionReport:
    """Dimension of C_Q (analytic counts 2^{ni} at side 2 a_i) or C_R (brute-force box count).

    For C_R the rectangles R_v = Q(z~_v) with half-sides (a_i, ..., a_i, b_i)
    are covered by a dyadic grid of side 2 a_i on [-1, 1]^n.
    """
    gens = list(range(1, s.k + 1)) if generations is None else list(generations)
    if len(gens) < 3:
        raise ValueError("at least 3 generations are needed")
    scales = [2.0 * s.sides[i] for i in gens]
    if which == "Q":
        counts = [2 ** (s.n * i) for i in gens]
        rule = "analytic count 2^{ni} of generation-i cubes"
    elif which == "R":
        counts = [_rectangle_box_count(s, i) for i in gens]
        rule = "dyadic boxes of side 2 a_i meeting a generation-i rectangle"
    else:
        raise ValueError("which must be 'Q' or 'R'")
    slope, res = fit_slope(scales, counts)
    target = s.d if which == "Q" else None
    return DimensionReport(scales, counts, slope, target, rule, res)


def _rectangle_box_count(s: CantorSchedule, i: int) -> int:
    _, _, zt = cell_centers(s, i)
    half = np.full(s.n, s.sides[i])
    half[-1] = s.heights[i]
    side = 2.0 * s.sides[i]
    lo = np.floor((zt - half + 1.0) / side + 1e-12).astype(np.int64)
    hi = np.ceil((zt + half + 1.0) / side - 1e-12).astype(np.int64) - 1
    boxes = set()
    for a, b in zip(lo, hi):
        grid = np.stack(np.meshgrid(*[np.arange(a[j], b[j] + 1) for j in range(s.n)], indexing="ij"), -1)
        boxes.update(map(tuple, grid.reshape(-1, s.n).tolist()))
    return len(boxes)


def product_counts(counts_a, counts_b):
    """Box counts of a product set at common scales (for the additivity self-test)."""
    return [int(x) * int(y) for x, y in zip(counts_a, counts_b)]


# -- near-critical sets ----------------------------------------------------------------


def fitted_jacobian_constant(m: CantorMap) -> float:
    """Geometric mean of J(z_v) / 2^{-i beta} over the centers of generations 1..k."""
    s = m.s
    ratios = []
    for i in range(1, s.k + 1):
        z = cell_centers(s, i)[1] if 2 ** (s.n * i) <= 4096 else _sample_centers(s, i, 4096)
        ratios.append(m._jac(z) / 2.0 ** (-i * s.beta))
    r = np.concatenate(ratios)
    return float(np.exp(np.mean(np.log(r))))


def _sample_centers(s: CantorSchedule, i: int, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    z = np.zeros((count, s.n))
    for j in range(1, i + 1):
        z += 0.5 * s.sides[j - 1] * rng.choice((-1.0, 1.0), size=(count, s.n))
    return z


def _grid_count(jac: Callable, lo, hi, per_axis: int, eps: float) -> int:
    """Boxes of the per_axis^n grid whose center has |J| <= eps; evaluated in slabs."""
    n = len(lo)
    side = (hi - lo) / per_axis
    rest = per_axis ** (n - 1)
    rows = max(1, SLAB_POINTS // rest)
    axes = [lo[j] + side[j] * (np.arange(per_axis) + 0.5) for j in range(n)]
    tail = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, n - 1)
    count = 0
    for start in range(0, per_axis, rows):
        first = axes[0][start:start + rows]
        P = np.column_stack([np.repeat(first, len(tail)), np.tile(tail, (len(first), 1))])
        count += int(np.count_nonzero(np.abs(jac(P)) <= eps))
    return count


def near_critical_dimension(m: MapFamily, depth: int, eps_rule: Optional[Callable] = None,
                            min_scale: int = 2, rule_text: str = "") -> DimensionReport:
    """Box-count slope of {|J_f| <= eps(j)} on grids of side 2^{-j}, j = min_scale..depth.

    For a CantorMap the threshold follows the construction,
    eps(j) = 2 C 2^{-beta i(j)} with i(j) = (j + 1) d / n the (real) generation
    whose cubes have side 2^{-j}, and C the fitted Jacobian constant.  Other
    maps need ``eps_rule(j, side)``.
    """
    n = m.n
    if depth > GRID_DEPTH_LIMIT.get(n, 6):
        raise ValueError(f"depth {depth} exceeds the grid budget for n={n}")
    if depth - min_scale + 1 < 4:
        raise ValueError("need at least 4 scales")
    consts = {}
    target = None
    if isinstance(m, CantorMap):
        s = m.s
        c_hat = fitted_jacobian_constant(m)
        consts["jacobianConstant"] = c_hat
        i_needed = (depth + 1) * s.d / n
        if s.k < np.ceil(i_needed):
            raise ValueError(f"schedule depth {s.k} < generation {i_needed:.2f} resolved at scale 2^-{depth}")

        def eps_rule(j, side, s=s, c=c_hat):
            return 2.0 * c * 2.0 ** (-s.beta * (j + 1) * s.d / s.n)
        rule_text = "eps(j) = 2 C 2^{-beta (j+1) d / n}"
        target = s.d
    elif eps_rule is None:
        raise ValueError("eps_rule(j, side) is required for maps other than the Cantor map")
    lo, hi = m.lo, m.hi
    scales, counts = [], []
    for j in range(min_scale, depth + 1):
        side = 2.0 ** (-j)
        per_axis = int(round(float(np.max(hi - lo)) / side))
        counts.append(_grid_count(m._jac, lo, hi, per_axis, eps_rule(j, side)))
        scales.append(side)
    flagged = ""
    if counts[-1] == 0:
        return DimensionReport(scales, counts, float("nan"), target, rule_text, float("nan"),
                               "no occupied boxes; slope undefined", consts)
    slope, res = fit_slope(scales, counts, deepest=4)
    if any(c2 < c1 for c1, c2 in zip(counts, counts[1:])):
        flagged = "counts decrease with scale"
    return DimensionReport(scales, counts, slope, target, rule_text or "user rule", res, flagged, consts)
