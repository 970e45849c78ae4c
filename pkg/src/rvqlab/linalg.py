"""Hermitian eigen-decomposition with a fixed ordering convention.

Everything downstream assumes eigenvalues sorted in descending order and,
for Gram matrices, non-negative values (tiny negative round-off clamped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 64
HERMITICITY_RTOL = 1e-10
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class HermitianEigen:
    """Eigen-decomposition M = V diag(values) V*, values descending."""

    values: np.ndarray
    vectors: np.ndarray | None  # columns are eigenvectors, aligned with values


def hermitian_eig(m: np.ndarray, vectors: bool = True) -> HermitianEigen:
    """Eigen-decomposition of a Hermitian matrix, descending eigenvalues.

    The matrix must be square, at most 64x64, and Hermitian to within
    1e-10 relative Frobenius tolerance.  With vectors=False only the
    eigenvalues are computed, which is noticeably cheaper in hot loops.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("hermitian_eig requires a square matrix")
    if m.shape[0] > MAX_DIM:
        raise ValueError(f"hermitian_eig supports dimension <= {MAX_DIM}")
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.conj().T) > HERMITICITY_RTOL * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian within tolerance")
    h = (m + m.conj().T) / 2.0
    if not vectors:
        w = np.linalg.eigvalsh(h)
        return HermitianEigen(values=w[::-1].copy(), vectors=None)
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return HermitianEigen(values=w[order], vectors=v[:, order])


def gram_spectrum(g: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a Gram (PSD) matrix, round-off clamped.

    Values in [-1e-12 * top, 0) are set to 0; anything more negative means
    the input was not a Gram matrix.
    """
    vals = hermitian_eig(g).values.copy()
    floor = -CLAMP_TOL * max(vals[0], 1.0) if vals.size else 0.0
    if vals.size and vals[-1] < floor:
        raise ValueError("matrix has a significantly negative eigenvalue")
    np.clip(vals, 0.0, None, out=vals)
    return vals


def check_spectrum(lam, n_min: int = 1) -> np.ndarray:
    """Validate a spectrum array: 1-D, length >= n_min, descending, >= 0."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size < n_min:
        raise ValueError(f"spectrum must be a 1-D array of length >= {n_min}")
    if np.any(lam < 0):
        raise ValueError("spectrum entries must be non-negative")
    if np.any(np.diff(lam) > 0):
        raise ValueError("spectrum must be sorted in descending order")
    if lam[0] <= 0:
        raise ValueError("leading eigenvalue must be positive")
    return lam
