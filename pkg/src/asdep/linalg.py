"""Dense symmetric eigendecomposition and matrix helpers.

The eigensolver is a cyclic Jacobi sweep: simple, robust and accurate for the
moderate dimensions used here (d up to a few hundred).  Eigenvectors follow a
fixed sign convention so results are reproducible across runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericError

SYMMETRY_RTOL = 1e-12
SIGN_EPS = 1e-12


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    m = np.asarray(values, dtype=float)
    if m.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return m


def ensure_symmetric(values, name: str = "matrix") -> np.ndarray:
    """Validate symmetry entrywise and return an exactly symmetric copy."""
    m = as_matrix(values, name)
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {m.shape}")
    gap = np.abs(m - m.T)
    tol = SYMMETRY_RTOL * np.maximum(1.0, np.abs(m))
    if np.any(gap > tol):
        raise InvalidInputError(f"{name} is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # first component larger than SIGN_EPS in magnitude is made positive
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.nonzero(np.abs(col) > SIGN_EPS)[0]
        if nz.size and col[nz[0]] < 0.0:
            out[:, k] = -col
    return out


def sym_eig(matrix, sweep_tol: float = 1e-14, max_sweeps: int = 64) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns a :class:`Spectrum` with eigenvalues sorted descending (stable order
    for ties) and orthonormal eigenvector columns.
    """
    a = ensure_symmetric(matrix)
    d = a.shape[0]
    if d == 1:
        return Spectrum(a[0, :1].copy(), np.ones((1, 1)))

    v = np.eye(d)
    scale = float(np.linalg.norm(a, "fro"))
    if scale == 0.0:
        return Spectrum(np.zeros(d), v)
    thresh = sweep_tol * scale
    rot_floor = thresh / (d * d)

    converged = False
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= thresh:
            converged = True
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= rot_floor:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        converged = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2))) <= thresh
    if not converged:
        raise NumericError("Jacobi sweep did not converge")

    eig = np.diag(a).copy()
    order = np.argsort(-eig, kind="stable")
    return Spectrum(eig[order], _fix_signs(v[:, order]))


def pseudo_inverse(matrix, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.

    Eigenvalues of magnitude at most ``tol * max |eigenvalue|`` invert to zero.
    """
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    spec = sym_eig(matrix)
    top = float(np.max(np.abs(spec.eigenvalues))) if spec.dim else 0.0
    if top == 0.0:
        return np.zeros_like(np.asarray(matrix, dtype=float))
    cutoff = tol * top
    inv = np.where(np.abs(spec.eigenvalues) > cutoff, 1.0 / spec.eigenvalues, 0.0)
    v = spec.eigenvectors
    return symmetrize((v * inv) @ v.T)


def sym_trace(matrix) -> float:
    m = ensure_symmetric(matrix)
    return float(np.trace(m))
