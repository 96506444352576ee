"""Small dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays. Dimensions stay tiny (at most ~81), so
cubic algorithms are fine everywhere.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ValidationError

EIG_TOL = 1e-10
HERM_TOL = 1e-12
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns match eigenvalue order


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def max_abs(a) -> float:
    """Entrywise infinity norm, max |a_ij|."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def check_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix is not square: {m.shape}")
    resid = max_abs(m - m.conj().T)
    if resid >= tol:
        raise ValidationError(f"matrix is not Hermitian (residual {resid:.3e})")
    return m


def hermitian_eig(a, method: str = "lapack") -> EigenDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    ``method="lapack"`` uses ``numpy.linalg.eigh``; ``method="jacobi"`` runs
    the cyclic Jacobi sweep in :func:`jacobi_eigh`.
    """
    m = check_hermitian(a)
    m = 0.5 * (m + m.conj().T)
    if method == "lapack":
        w, v = np.linalg.eigh(m)
    elif method == "jacobi":
        w, v = jacobi_eigh(m)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL):
    """Cyclic Jacobi for complex Hermitian matrices.

    Each rotation first strips the phase of ``a[p, q]`` and then applies the
    real symmetric 2x2 rotation. Stops when the off-diagonal Frobenius norm
    drops below ``tol`` times ``max(1, ||a||_F)``.
    Returns unsorted eigenvalues and the unitary of eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * r, aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                # columns p, q of the rotation: (c, -s e^{-i phi}), (s, c e^{-i phi})
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.conj().T @ a[[p, q], :]
                v[:, [p, q]] = v[:, [p, q]] @ rot
                a[p, q] = a[q, p] = 0.0
    else:
        raise ValidationError("Jacobi eigensolver did not converge")
    return np.real(np.diag(a)).copy(), v


def eigvalsh_desc(a: np.ndarray) -> np.ndarray:
    """Descending eigenvalues without validation (hot path)."""
    return np.linalg.eigvalsh(a)[::-1]


def tensor_product(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def schur_product(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValidationError(f"Schur product needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)
