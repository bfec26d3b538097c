"""ESPRIT, zero-padded ESPRIT (ESPRIT-AC) and the Gamma-beta trust statistic."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularSystemError
from .linalg import as_snapshots, fb_covariance, herm_eig, ls_solve, zero_pad

SIGMA2_FLOOR = 1e-300

# (M, N) -> beta; other pairs need a user-supplied value
BETA_TABLE = {(18, 25): 0.72}


class Branch(str, enum.Enum):
    ESPRIT = "esprit"
    ESPRIT_AC = "esprit-ac"
    ESPRIT_AC_RR = "esprit-ac-rr"


@dataclass(frozen=True)
class FrequencyEstimate:
    """Ascending frequencies in [0, 1), with provenance and likelihood cost."""

    frequencies: np.ndarray
    branch: Branch | None = None
    cost: float | None = None

    def __post_init__(self):
        f = np.sort(np.mod(np.atleast_1d(np.asarray(self.frequencies, dtype=float)), 1.0))
        # mod can return exactly 1.0 for tiny negative inputs
        f[f >= 1.0] = 0.0
        f = np.sort(f)
        f.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        if self.cost is not None and self.cost < 0:
            raise ValueError(f"cost must be nonnegative, got {self.cost}")

    @property
    def p(self) -> int:
        return self.frequencies.size

    def with_cost(self, cost: float) -> "FrequencyEstimate":
        return replace(self, cost=float(cost))


@dataclass(frozen=True)
class GammaBetaReport:
    gamma_db: float
    sigma2_hat: float
    lambda_p: float
    beta: float
    m: int
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        return self.gamma_db > 0.0


def default_window(n: int, p: int) -> int:
    """Covariance window: 18 for N = 25, otherwise round(0.72 N) clamped to [p+2, N-1]."""
    if n == 25:
        m = 18
    else:
        m = int(round(0.72 * n))
    return max(p + 2, min(m, n - 1))


def default_beta(m: int, n: int) -> float:
    try:
        return BETA_TABLE[(m, n)]
    except KeyError:
        raise ValueError(
            f"beta: no shipped value for (M={m}, N={n}); supply beta explicitly"
        ) from None


def doa_default_beta(m: int, k: int) -> float:
    warnings.warn(
        f"using beta=0.72 for an array problem (M={m}, K={k}); "
        "beta depends on (M, K) and should be calibrated",
        stacklevel=2,
    )
    return 0.72


def _check_order(p: int, m: int, length: int):
    if p < 1:
        raise ValueError(f"p: must be >= 1, got {p}")
    if not p < m:
        raise ValueError(f"M: window {m} must exceed model order {p}")
    if m > length:
        raise ValueError(f"M: window {m} exceeds record length {length}")


def _rotation_eigs(es: np.ndarray, method: str) -> np.ndarray:
    e1, e2 = es[:-1], es[1:]
    if method == "ls":
        phi = ls_solve(e1, e2)
    elif method == "tls":
        p = es.shape[1]
        _, _, vh = np.linalg.svd(np.hstack([e1, e2]), full_matrices=True)
        v = vh.conj().T
        v12, v22 = v[:p, p:], v[p:, p:]
        try:
            phi = -v12 @ np.linalg.inv(v22)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("TLS rotation estimate is singular") from exc
    else:
        raise ValueError(f"unknown ESPRIT solver {method!r}")
    return np.linalg.eigvals(phi)


def esprit_from_covariance(r, p: int, method: str = "ls") -> np.ndarray:
    """Frequencies from the shift invariance of the ``p`` principal eigenvectors."""
    es = herm_eig(r).principal(p)
    z = _rotation_eigs(es, method)
    return np.angle(z) / (2.0 * np.pi)


def esprit(x, p: int, m: int, method: str = "ls") -> FrequencyEstimate:
    """Conventional (forward-backward) ESPRIT on the record ``x``."""
    xs = as_snapshots(x)
    _check_order(p, m, xs.shape[0])
    f = esprit_from_covariance(fb_covariance(xs, m), p, method)
    return FrequencyEstimate(f, Branch.ESPRIT)


def esprit_ac(x, p: int, m: int, method: str = "ls") -> FrequencyEstimate:
    """ESPRIT applied to the record padded with ``m`` zeros on both ends."""
    xs = as_snapshots(x)
    _check_order(p, m, xs.shape[0])
    f = esprit_from_covariance(fb_covariance(zero_pad(xs, m), m), p, method)
    return FrequencyEstimate(f, Branch.ESPRIT_AC)


def gamma_from_eigenvalues(lam: np.ndarray, p: int, beta: float) -> GammaBetaReport:
    m = lam.size
    if not 0 < p < m:
        raise ValueError(f"p: need 0 < p < M, got p={p}, M={m}")
    if beta <= 0:
        raise ValueError(f"beta: must be positive, got {beta}")
    sigma2 = float(np.mean(lam[p:]))
    lam_p = float(lam[p - 1])
    degenerate = sigma2 <= SIGMA2_FLOOR
    s2 = max(sigma2, SIGMA2_FLOOR)
    num = lam_p - s2
    if num <= 0.0:
        gamma = -math.inf
    else:
        gamma = 10.0 * math.log10(num / (m * beta * s2))
    return GammaBetaReport(gamma, max(sigma2, 0.0), lam_p, float(beta), m, degenerate)


def gamma_beta(x, p: int, m: int, beta: float) -> GammaBetaReport:
    """Estimated SNR minus estimated threshold, in dB (positive = trust ESPRIT)."""
    xs = as_snapshots(x)
    _check_order(p, m, xs.shape[0])
    lam = herm_eig(fb_covariance(xs, m)).eigenvalues
    return gamma_from_eigenvalues(lam, p, beta)
