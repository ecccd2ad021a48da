"""Shared evaluator interface for all mapping families."""

from __future__ import annotations

import numpy as np


def as_points(x, n: int) -> tuple[np.ndarray, bool]:
    """Coerce ``x`` to an (m, n) float array; report whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != n:
        raise ValueError(f"expected points of dimension {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates")
    return arr, single


class DomainError(ValueError):
    """Raised when a point lies outside the family's domain."""


class MapFamily:
    """Vectorized evaluator: points are (m, n) arrays.

    Subclasses implement ``_value``, ``_gradient`` and optionally ``_hessian``
    (component-wise second derivatives, shape (m, n, n, n) indexed
    ``[point, component, i, j]``).  ``lo``/``hi`` bound the domain box.
    """

    family = "abstract"
    n: int
    lo: np.ndarray
    hi: np.ndarray
    has_hessian = True

    # -- domain -------------------------------------------------------------
    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        tol = 1e-12
        return np.all((X >= self.lo - tol) & (X <= self.hi + tol), axis=1)

    def _checked(self, x):
        X, single = as_points(x, self.n)
        if not np.all(self.contains(X)):
            raise DomainError(f"{self.family} map: point outside domain")
        return X, single

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    # -- evaluation ---------------------------------------------------------
    def value(self, x):
        X, single = self._checked(x)
        out = self._value(X)
        return out[0] if single else out

    def gradient(self, x):
        X, single = self._checked(x)
        out = self._gradient(X)
        return out[0] if single else out

    def jac(self, x):
        X, single = self._checked(x)
        out = self._jac(X)
        return out[0] if single else out

    def hessian(self, x):
        X, single = self._checked(x)
        out = self._hessian(X)
        return out[0] if single else out

    def d2_norm(self, x):
        """Max-entry norm of all second partials of all components."""
        H = self.hessian(x)
        return np.max(np.abs(H), axis=(-3, -2, -1))

    def _jac(self, X):
        return np.linalg.det(self._gradient(X))

    def _hessian(self, X):
        raise NotImplementedError(f"{self.family} map has no closed-form second derivatives")

    # -- singular loci --------------------------------------------------------
    def singular_distance(self, X) -> np.ndarray:
        """Lower bound on the distance to registered singular / non-smooth loci."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(len(X), np.inf)

    def loci_touch(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Mask of boxes [lo, hi] (each (m, n)) that meet a registered locus."""
        return np.zeros(len(lo), dtype=bool)

    def to_spec(self) -> dict:
        raise NotImplementedError


def det_and_cofactor(A: np.ndarray):
    """Determinant and cofactor matrix of a stack of square matrices."""
    det = np.linalg.det(A)
    n = A.shape[-1]
    if n == 2:
        cof = np.empty_like(A)
        cof[..., 0, 0] = A[..., 1, 1]
        cof[..., 0, 1] = -A[..., 1, 0]
        cof[..., 1, 0] = -A[..., 0, 1]
        cof[..., 1, 1] = A[..., 0, 0]
        return det, cof
    inv_t = np.swapaxes(np.linalg.inv(A), -1, -2)
    return det, det[..., None, None] * inv_t


def spectral_norm(A: np.ndarray) -> np.ndarray:
    return np.linalg.norm(A, ord=2, axis=(-2, -1))
