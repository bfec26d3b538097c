"""Complex linear-algebra kernels: covariance, eigensystems, least squares.

Records are either a 1-D time series or a 2-D array whose columns are
snapshots; the covariance routines slide a length-``m`` window over every
column and average all windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import solve_triangular

from .errors import InsufficientDataError, NumericalError, SingularSystemError

RANK_TOL = 1e-10


def as_snapshots(x) -> np.ndarray:
    """View a record as an (N, K) complex array of snapshots."""
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"record must be a non-empty vector or matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class CovarianceMatrix:
    entries: np.ndarray
    source_length: int

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def principal(self, p: int) -> np.ndarray:
        return self.eigenvectors[:, :p]


def exchange(m: int) -> np.ndarray:
    return np.eye(m)[::-1]


def fb_covariance(x, m: int) -> CovarianceMatrix:
    """Forward-backward averaged covariance of window size ``m``.

    Windows are averaged over every snapshot and every in-record position
    (N - m + 1 per snapshot); the result is exactly Hermitian and
    persymmetric.
    """
    xs = as_snapshots(x)
    n, k = xs.shape
    if m < 2:
        raise ValueError(f"window size must be >= 2, got {m}")
    if m > n:
        raise InsufficientDataError(f"window size {m} exceeds record length {n}")
    # (K, N-m+1, m) -> (m, K*(N-m+1))
    win = sliding_window_view(xs.T, m, axis=1).reshape(-1, m).T
    rf = (win @ win.conj().T) / win.shape[1]
    rf = 0.5 * (rf + rf.conj().T)
    r = 0.5 * (rf + rf[::-1, ::-1].conj())
    return CovarianceMatrix(r, n)


def zero_pad(x, m: int) -> np.ndarray:
    """Surround each snapshot with ``m`` zeros on both ends."""
    if int(m) < 1:
        raise ValueError(f"padding must be >= 1, got {m}")
    a = np.asarray(x, dtype=complex)
    pad = [(m, m)] + [(0, 0)] * (a.ndim - 1)
    return np.pad(a, pad)


def herm_eig(r) -> EigenSystem:
    """Full eigensystem of a Hermitian matrix, eigenvalues descending."""
    mat = r.entries if isinstance(r, CovarianceMatrix) else np.asarray(r, dtype=complex)
    try:
        w, v = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigendecomposition failed: {exc}") from exc
    return EigenSystem(w[::-1].copy(), v[:, ::-1].copy())


def ls_solve(a, b) -> np.ndarray:
    """Least-squares solution of A X = B through a QR factorization of A."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise SingularSystemError(f"need a tall full-rank matrix, got shape {a.shape}")
    q, rr = np.linalg.qr(a)
    sv = np.linalg.svd(rr, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise SingularSystemError(
            f"rank deficient system (condition {sv[0] / max(sv[-1], 1e-300):.3g})"
        )
    return solve_triangular(rr, q.conj().T @ b)
