"""Dense complex linear algebra kernel.

Norms, determinants, singular values, general (non-Hermitian) eigenvalues,
resolvents, low-rank factorization, and the Sherman-Morrison rank-one
update.  Everything here is a pure function of its inputs; matrices are
plain complex ndarrays validated on entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NearSingularError(ValueError):
    """Raised when a shift or update denominator is numerically singular."""

    def __init__(self, message, smin=None):
        super().__init__(message)
        self.smin = smin


def as_matrix(a) -> np.ndarray:
    """Validate and return a 2-d complex matrix.

    Rejects empty matrices and any non-finite entry.
    """
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix contains non-finite entries")
    return m


def _require_square(m: np.ndarray):
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue multiset of a square matrix.

    Eigenvalues are stored in a stable order: descending modulus, ties
    broken by argument.  ``source_dim`` is the matrix dimension, so
    ``len(eigenvalues) == source_dim`` always.
    """

    eigenvalues: np.ndarray
    source_dim: int

    def __post_init__(self):
        if len(self.eigenvalues) != self.source_dim:
            raise ValueError("eigenvalue count must equal source dimension")


def sort_eigenvalues(lam) -> np.ndarray:
    """Canonical eigenvalue ordering: modulus descending, argument tiebreak."""
    lam = np.asarray(lam, dtype=complex)
    order = np.lexsort((np.angle(lam), -np.abs(lam)))
    return lam[order]


def hs_norm(m) -> float:
    """Hilbert-Schmidt (Frobenius) norm sqrt(tr(M M*))."""
    m = as_matrix(m)
    return float(np.sqrt(np.sum(np.abs(m) ** 2)))


def operator_norm(m) -> float:
    """Spectral norm: the largest singular value."""
    m = as_matrix(m)
    return float(np.linalg.norm(m, 2))


def singular_values(m) -> np.ndarray:
    """Singular values in decreasing order."""
    m = as_matrix(m)
    _require_square(m)
    return np.linalg.svd(m, compute_uv=False)


def eigenvalues(m) -> Spectrum:
    """Eigenvalues of a general complex square matrix, canonically ordered."""
    m = as_matrix(m)
    _require_square(m)
    try:
        lam = np.linalg.eig(m)[0]
    except np.linalg.LinAlgError as exc:
        # hash lets a failing matrix be reproduced from a seeded run
        digest = hex(abs(hash(m.tobytes())))
        raise RuntimeError(f"eigensolver failed to converge (matrix {digest})") from exc
    return Spectrum(sort_eigenvalues(lam), m.shape[0])


def determinant(m) -> complex:
    """Determinant via LU with partial pivoting."""
    m = as_matrix(m)
    _require_square(m)
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    sign = (-1) ** int(np.sum(piv != np.arange(len(piv))))
    return complex(sign * np.prod(np.diag(lu)))


def resolvent(m, z: complex) -> np.ndarray:
    """(M - zI)^{-1}, refusing numerically singular shifts."""
    m = as_matrix(m)
    _require_square(m)
    shifted = m - z * np.eye(m.shape[0])
    smin = singular_values(shifted)[-1]
    if smin <= 1e-12 * (1.0 + operator_norm(m)):
        raise NearSingularError(
            f"shift z={z} is numerically an eigenvalue (s_min={smin:.3e})", smin=smin
        )
    return np.linalg.solve(shifted, np.eye(m.shape[0], dtype=complex))


def sherman_morrison_inverse(ainv, u, v) -> np.ndarray:
    """Inverse of A + u v* given Ainv, by the rank-one update formula."""
    ainv = as_matrix(ainv)
    _require_square(ainv)
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    denom = 1.0 + v.conj() @ (ainv @ u)
    if abs(denom) <= 1e-12:
        raise NearSingularError(f"singular rank-one update (1 + v*Ainv u = {denom:.3e})")
    au = ainv @ u
    va = v.conj() @ ainv
    return ainv - np.outer(au, va) / denom


def low_rank_factor(a, tol: float):
    """Split A into B C with B = U sqrt(S), C = sqrt(S) V*.

    The rank k counts singular values above ``tol``; the symmetric split
    keeps ||B|| and ||C|| near sqrt(||A||) each.
    """
    a = as_matrix(a)
    _require_square(a)
    n = a.shape[0]
    u, s, vh = np.linalg.svd(a)
    k = int(np.sum(s > tol))
    if k == 0:
        return np.zeros((n, 0), dtype=complex), np.zeros((0, n), dtype=complex)
    root = np.sqrt(s[:k])
    b = u[:, :k] * root
    c = root[:, None] * vh[:k, :]
    return b, c
