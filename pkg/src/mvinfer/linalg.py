"""Dense matrix kernel: projections, Kronecker composition, pseudoinverse, PSD roots.

Everything here operates on small dense float64 arrays (design dimensions are
a handful to a few hundred).  All functions are pure and safe to call from
concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Result of a Kronecker product may not exceed this many entries.
_MAX_KRON_ENTRIES = 10**8


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def centering(a: int) -> np.ndarray:
    """The a-dimensional centering projection I - J/a (symmetric, idempotent)."""
    if a < 1:
        raise ValueError(f"dimension must be a positive integer, got {a}")
    return np.eye(a) - np.full((a, a), 1.0 / a)


def kron(a, b) -> np.ndarray:
    """Kronecker product with a guard against runaway result sizes."""
    am = _as_matrix(a, "left operand")
    bm = _as_matrix(b, "right operand")
    entries = am.shape[0] * bm.shape[0] * am.shape[1] * bm.shape[1]
    if entries > _MAX_KRON_ENTRIES:
        raise ValueError(
            f"Kronecker result would have {entries} entries "
            f"(limit {_MAX_KRON_ENTRIES})"
        )
    return np.kron(am, bm)


def direct_sum(blocks) -> np.ndarray:
    """Block-diagonal matrix of the given blocks; off-block entries are exact zeros."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("direct_sum requires at least one block")
    return scipy.linalg.block_diag(*[_as_matrix(b, "block") for b in blocks])


@dataclass
class SymEigen:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Column k of ``vectors`` is the orthonormal eigenvector paired with
    ``values[k]``; ``vectors @ diag(values) @ vectors.T`` reconstructs the input.
    """

    values: np.ndarray
    vectors: np.ndarray


def sym_eigen(a) -> SymEigen:
    """Eigendecomposition of a symmetric matrix.

    Raises ValueError when the input is not square or deviates from symmetry
    by more than 1e-10 relative to its Frobenius norm.
    """
    m = _as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > 1e-10 * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(values)[::-1]
    return SymEigen(values=values[order], vectors=vectors[:, order])


def moore_penrose(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Symmetric inputs go through the symmetric eigendecomposition, everything
    else through the SVD.  Spectral values below
    ``max(rows, cols) * eps * sigma_max`` are treated as exact zeros, the
    usual numerical-rank convention.
    """
    m = _as_matrix(a)
    rows, cols = m.shape
    if rows == cols:
        scale = np.linalg.norm(m)
        if np.linalg.norm(m - m.T) <= 1e-10 * max(scale, 1.0):
            eig = sym_eigen(m)
            cutoff = max(rows, cols) * np.finfo(float).eps * np.max(np.abs(eig.values), initial=0.0)
            inv = np.where(np.abs(eig.values) > cutoff, 1.0 / np.where(eig.values == 0, 1.0, eig.values), 0.0)
            return (eig.vectors * inv) @ eig.vectors.T
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    cutoff = max(rows, cols) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, 1.0 / np.where(s == 0, 1.0, s), 0.0)
    return (vt.T * inv) @ u.T


def pinv_symmetric_psd(m: np.ndarray) -> np.ndarray:
    """Pseudoinverse of a symmetric PSD matrix via its eigendecomposition.

    Fast path used in the resampling loop; assumes symmetry (not re-checked).
    """
    values, vectors = np.linalg.eigh(m)
    cutoff = m.shape[0] * np.finfo(float).eps * np.max(np.abs(values), initial=0.0)
    inv = np.where(np.abs(values) > cutoff, 1.0 / np.where(values == 0, 1.0, values), 0.0)
    return (vectors * inv) @ vectors.T


def psd_sqrt(a) -> np.ndarray:
    """Symmetric square root L of a PSD matrix, L @ L.T == A.

    Uses the eigendecomposition rather than a triangular factorization so that
    singular (rank-deficient) inputs work.  Eigenvalues in
    [-1e-10 * ||A||_F, 0) are clamped to zero; anything more negative raises
    ``numpy.linalg.LinAlgError``.
    """
    eig = sym_eigen(a)
    tol = 1e-10 * max(np.linalg.norm(np.asarray(a, dtype=float)), 1e-300)
    if np.min(eig.values, initial=0.0) < -tol:
        raise np.linalg.LinAlgError(
            f"matrix is not positive semidefinite (min eigenvalue {eig.values.min():.3e})"
        )
    values = np.clip(eig.values, 0.0, None)
    return (eig.vectors * np.sqrt(values)) @ eig.vectors.T
