"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_core`` module; used when
the extension is not built or ``SINEST_PURE_PYTHON`` is set.
"""

from itertools import combinations

import numpy as np
from scipy.linalg import solve_triangular

TWO_PI = 2.0 * np.pi


def steering(f, n):
    """N x p matrix with columns exp(j 2 pi f_k n)."""
    ph = np.mod(np.outer(np.arange(n), np.asarray(f, dtype=float)), 1.0)
    return np.exp(1j * TWO_PI * ph)


def fit(x, f):
    """Least-squares fit of cisoids at ``f`` to every column of ``x``.

    Returns ``(cost, residual, amplitudes, pivot_ratio)`` where
    ``pivot_ratio`` is the smallest |R_kk| / sqrt(N) of the QR factor.
    """
    n = x.shape[0]
    s = steering(f, n)
    q, r = np.linalg.qr(s)
    piv = float(np.abs(np.diag(r)).min() / np.sqrt(n))
    c = q.conj().T @ x
    resid = x - q @ c
    if piv > 0.0:
        amps = solve_triangular(r, c)
    else:
        amps = np.full_like(c, np.nan)
    cost = float(np.vdot(resid, resid).real)
    return cost, resid, amps, piv


def cost_grad(x, f, want_grad=True):
    """Concentrated cost and its analytic gradient in the frequencies."""
    cost, resid, amps, piv = fit(x, f)
    if not want_grad:
        return cost, None, piv
    n = x.shape[0]
    s = steering(f, n)
    t = (resid.conj().T * (1j * TWO_PI * np.arange(n))) @ s  # (K, p)
    grad = -2.0 * np.real(np.sum(amps.T * t, axis=0))
    return cost, grad, piv


def grid_search(xg, dk, n, p, xnorm2, tol):
    """Exhaustive minimization over ascending index tuples of a uniform grid.

    ``xg[g, k]`` is the DFT of snapshot k at grid point g and ``dk[m]`` the
    Gram kernel sum_n exp(j 2 pi m n / G). Tuples whose Cholesky pivot
    falls below ``tol`` are skipped. Ties go to the lexicographically
    smallest tuple.
    """
    g = xg.shape[0]
    best_cost = np.inf
    best = None
    if p == 1:
        costs = xnorm2 - np.sum(np.abs(xg) ** 2, axis=1) / n
        i = int(np.argmin(costs))
        return np.array([i], dtype=np.int64), float(costs[i])
    for prefix in combinations(range(g - 1), p - 1):
        # Cholesky of the prefix block
        lmat = np.zeros((p, p), dtype=complex)
        y = np.zeros((p, xg.shape[1]), dtype=complex)
        ok = True
        energy = 0.0
        for lev, i in enumerate(prefix):
            for j in range(lev):
                sacc = dk[(prefix[j] - i) % g]
                for mm in range(j):
                    sacc -= lmat[lev, mm] * np.conj(lmat[j, mm])
                lmat[lev, j] = sacc / lmat[j, j].real
            d = n - np.sum(np.abs(lmat[lev, :lev]) ** 2)
            if d <= tol:
                ok = False
                break
            lmat[lev, lev] = np.sqrt(d)
            y[lev] = (xg[i] - lmat[lev, :lev] @ y[:lev]) / lmat[lev, lev].real
            energy += float(np.sum(np.abs(y[lev]) ** 2))
        if not ok:
            continue
        last = np.arange(prefix[-1] + 1, g)
        if last.size == 0:
            continue
        lrow = np.zeros((last.size, p - 1), dtype=complex)
        for j in range(p - 1):
            sacc = dk[(prefix[j] - last) % g]
            for mm in range(j):
                sacc = sacc - lrow[:, mm] * np.conj(lmat[j, mm])
            lrow[:, j] = sacc / lmat[j, j].real
        d = n - np.sum(np.abs(lrow) ** 2, axis=1)
        valid = d > tol
        piv = np.sqrt(np.where(valid, d, 1.0))
        ylast = (xg[last] - lrow @ y[: p - 1]) / piv[:, None]
        costs = xnorm2 - (energy + np.sum(np.abs(ylast) ** 2, axis=1))
        costs = np.where(valid, costs, np.inf)
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best = prefix + (int(last[k]),)
    if best is None:
        return None, np.inf
    return np.array(best, dtype=np.int64), best_cost
