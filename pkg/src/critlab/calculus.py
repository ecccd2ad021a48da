"""Finite-difference differentiation oracle for any map evaluator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import DomainError


@dataclass(frozen=True)
class DiffConfig:
    step: float = 1e-5
    richardson: bool = True
    singular_standoff: float = 1e-4

    def __post_init__(self):
        if not 1e-8 <= self.step <= 1e-3:
            raise ValueError("step must lie in [1e-8, 1e-3]")
        if self.singular_standoff < 10 * self.step:
            raise ValueError("singular standoff must be at least 10 * step")

    @property
    def hessian_step(self) -> float:
        """Second differences of values lose two orders to cancellation, so use a larger step."""
        return 0.1 * math.sqrt(self.step)


class SingularQueryError(DomainError):
    """The stencil would come within the standoff of a singular locus."""


def _evaluator(f):
    """Batch evaluator X (m, n) -> (m, n) and the object's domain/locus hooks."""
    if hasattr(f, "_value"):
        return f._value, f
    return (lambda X: np.asarray([np.asarray(f(x), dtype=float) for x in X])), None


def _check(fam, x, standoff):
    if fam is None:
        return
    # every family's formulas extend smoothly past its domain box, so only the
    # base point itself must lie in the domain
    if not fam.contains(x[None, :])[0]:
        raise DomainError("point outside the domain")
    if fam.singular_distance(x[None, :])[0] < standoff:
        raise SingularQueryError(f"point within {standoff:g} of a singular locus")


def _nan_guard(vals, offsets, x):
    bad = ~np.all(np.isfinite(vals), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        coord = int(np.argmax(np.abs(offsets[k]))) if np.any(offsets[k]) else -1
        raise FloatingPointError(f"non-finite map value at stencil offset along coordinate {coord} from {x}")


def _central_gradient(ev, x, h):
    n = len(x)
    offsets = np.vstack([h * np.eye(n), -h * np.eye(n)])
    vals = ev(x[None, :] + offsets)
    _nan_guard(vals, offsets, x)
    return (vals[:n] - vals[n:]).T / (2 * h)


def fd_gradient(f, x, c: DiffConfig = DiffConfig()) -> np.ndarray:
    """Central-difference Df (rows: components, columns: directions)."""
    x = np.asarray(x, dtype=float)
    ev, fam = _evaluator(f)
    _check(fam, x, c.singular_standoff)
    g = _central_gradient(ev, x, c.step)
    if c.richardson:
        g2 = _central_gradient(ev, x, 0.5 * c.step)
        g = (4 * g2 - g) / 3
    return g


def _central_hessian(ev, x, h):
    n = len(x)
    eye = np.eye(n)
    offsets = [np.zeros(n)]
    for j in range(n):
        offsets += [h * eye[j], -h * eye[j]]
    for j in range(n):
        for k in range(j + 1, n):
            for sj in (1, -1):
                for sk in (1, -1):
                    offsets.append(h * (sj * eye[j] + sk * eye[k]))
    offsets = np.array(offsets)
    vals = ev(x[None, :] + offsets)
    _nan_guard(vals, offsets, x)
    f0 = vals[0]
    H = np.zeros((vals.shape[1], n, n))
    for j in range(n):
        H[:, j, j] = (vals[1 + 2 * j] - 2 * f0 + vals[2 + 2 * j]) / h**2
    idx = 1 + 2 * n
    for j in range(n):
        for k in range(j + 1, n):
            pp, pm, mp, mm = vals[idx:idx + 4]
            H[:, j, k] = H[:, k, j] = (pp - pm - mp + mm) / (4 * h**2)
            idx += 4
    return H


def fd_hessian(f, x, c: DiffConfig = DiffConfig()) -> np.ndarray:
    """All second partials, shape (components, n, n)."""
    x = np.asarray(x, dtype=float)
    ev, fam = _evaluator(f)
    h = c.hessian_step
    _check(fam, x, max(2 * c.singular_standoff, 2 * h))
    H = _central_hessian(ev, x, h)
    if c.richardson:
        H2 = _central_hessian(ev, x, 0.5 * h)
        H = (4 * H2 - H) / 3
    return H


def fd_hessian_norm(f, x, c: DiffConfig = DiffConfig()) -> float:
    """Max-entry norm of all second partials of all components."""
    return float(np.max(np.abs(fd_hessian(f, x, c))))


def one_sided_hessian_norm(f, x, axis: int, side: int, c: DiffConfig = DiffConfig()) -> float:
    """Limit of the Hessian norm approaching x from one side along ``axis``.

    Meant for points on a seam: central stencils are placed at offsets s and 2s
    on the requested side (never straddling the seam) and linearly
    extrapolated back to the seam.
    """
    x = np.asarray(x, dtype=float)
    ev, _ = _evaluator(f)
    h = c.hessian_step
    e = np.zeros_like(x)
    e[axis] = 1.0 if side > 0 else -1.0
    s = 4 * h
    n1 = np.max(np.abs(_central_hessian(ev, x + s * e, h)))
    n2 = np.max(np.abs(_central_hessian(ev, x + 2 * s * e, h)))
    return float(2 * n1 - n2)
