"""Small dense complex linear algebra (N <= 8).

Matrices are plain ``numpy.ndarray`` of dtype complex128. Batched helpers
accept a leading axis.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DimMismatch, NoConvergence, NotHermitian, NotUnitary

MAX_SWEEPS = 100


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def fnorm(m) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(m)) ** 2)))


def hermiticity_residual(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def is_hermitian(m, tol: float = 1e-12) -> bool:
    m = as_cmatrix(m)
    return hermiticity_residual(m) <= tol * max(1.0, fnorm(m))


def is_unitary(m, tol: float = 1e-10) -> bool:
    m = as_cmatrix(m)
    return fnorm(dagger(m) @ m - np.eye(m.shape[0])) <= tol


def is_psd(m, tol: float = 1e-10) -> bool:
    m = as_cmatrix(m)
    if not is_hermitian(m, tol):
        return False
    w, _ = eig_hermitian(0.5 * (m + dagger(m)))
    return bool(w[0] >= -tol)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    return a @ b + b @ a


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return fnorm(a - b)


def conjugate(u, m, tol: float = 1e-10) -> np.ndarray:
    """Return ``u† m u``."""
    u = as_cmatrix(u)
    m = as_cmatrix(m)
    if u.shape != m.shape:
        raise DimMismatch(f"shapes differ: {u.shape} vs {m.shape}")
    if not is_unitary(u, tol):
        raise NotUnitary("conjugating matrix is not unitary")
    return dagger(u) @ m @ u


def canonical_gauge(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and >= 0.

    Ties (within 1e-9 relative) go to the lowest index so the choice does not
    flicker with rounding. Works on a single matrix or a batch.
    """
    v = np.array(vecs, dtype=np.complex128, copy=True)
    mag = np.abs(v)
    peak = mag.max(axis=-2, keepdims=True)
    idx = np.argmax(mag >= peak * (1.0 - 1e-9), axis=-2)
    pivot = np.take_along_axis(v, idx[..., None, :], axis=-2)
    r = np.abs(pivot)
    phase = np.where(r > 0, np.conj(pivot) / np.where(r > 0, r, 1.0), 1.0)
    return v * phase


def eig_hermitian_batch(mats, tol: float = 1e-12, max_sweeps: int = MAX_SWEEPS):
    """Batched Jacobi diagonalization.

    Returns ascending eigenvalues ``(B, N)`` and eigenvector columns
    ``(B, N, N)`` in the canonical gauge.
    """
    a = np.asarray(mats, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimMismatch(f"expected (B, N, N), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    norms = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    resid = np.max(np.abs(a - dagger(a)), axis=(1, 2)) if a.size else np.zeros(len(a))
    bad = resid > tol * np.maximum(norms, 1.0)
    if bad.any():
        raise NotHermitian(f"symmetry residual {resid[bad].max():.3e} exceeds tolerance")
    a = 0.5 * (a + dagger(a))
    w, v, sweeps = kernels.jacobi_batch(np.ascontiguousarray(a), tol * norms, max_sweeps)
    if (sweeps < 0).any():
        raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps")
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, canonical_gauge(v)


def eig_hermitian(m, tol: float = 1e-12):
    """Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.

    Raises ``NotHermitian`` when the symmetry residual exceeds
    ``tol * max(1, ||m||_F)`` and ``NoConvergence`` after 100 sweeps.
    """
    m = as_cmatrix(m)
    w, v = eig_hermitian_batch(m[None], tol)
    return w[0], v[0]


def degenerate_clusters(w, tol: float):
    """Group sorted eigenvalues whose neighbours are closer than ``tol``."""
    clusters = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] < tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def polar_unitary(m) -> np.ndarray:
    """Unitary factor ``U`` of the polar decomposition ``m = U P``."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
