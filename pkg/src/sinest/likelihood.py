"""Concentrated likelihood cost, matrix notch filter, local descent and ML baselines.

All routines accept a 1-D time series or an (N, K) snapshot matrix; for
snapshots the cost is the sum of per-snapshot residual energies.
"""

from __future__ import annotations

import logging
import math
from math import comb

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import IllConditionedError
from .linalg import as_snapshots
from .signal import circular_gaps
from .subspace import FrequencyEstimate

log = logging.getLogger(__name__)

MIN_GAP = 1e-9
PIVOT_TOL = 1e-12
ARMIJO = 1e-4
INITIAL_STEP = 1e-3
MAX_ITER = 500
REL_DECREASE_TOL = 1e-12
GRAD_TOL = 1e-10
GRID_P_LIMIT = 3


def steering(f, n: int) -> np.ndarray:
    """N x k matrix whose column i is exp(j 2 pi f_i n), n = 0..N-1."""
    return kernels._fallback.steering(np.atleast_1d(f), n)


def _record(x) -> np.ndarray:
    return np.ascontiguousarray(as_snapshots(x))


def _check_freqs(f: np.ndarray, n: int):
    if f.ndim != 1:
        raise ValueError("frequency vector must be one-dimensional")
    if f.size > n / 2:
        raise ValueError(f"p: {f.size} components exceed N/2 for N={n}")
    if not np.all(np.isfinite(f)):
        raise ValueError("frequencies must be finite")
    if f.size > 1 and circular_gaps(f).min() <= MIN_GAP:
        raise IllConditionedError(f"frequencies within {MIN_GAP:g} of each other: {f}")


def _cost_grad(xs, f, want_grad=True):
    cost, grad, piv = kernels.cost_grad(xs, f, want_grad)
    if piv < PIVOT_TOL:
        raise IllConditionedError(f"steering matrix numerically rank deficient at {f}")
    return max(cost, 0.0), grad


def likelihood_cost(x, f) -> float:
    """x^H (I - S (S^H S)^-1 S^H) x, evaluated through an orthogonal factorization of S."""
    xs = _record(x)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if f.size == 0:
        return float(np.vdot(xs, xs).real)
    _check_freqs(f, xs.shape[0])
    return _cost_grad(xs, f, False)[0]


def likelihood_gradient(x, f) -> np.ndarray:
    """Analytic dL/df_k = -2 Re{ r^H D_k a_k }, r the residual and a the LS amplitudes."""
    xs = _record(x)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    _check_freqs(f, xs.shape[0])
    return _cost_grad(xs, f, True)[1]


def notch_filter(x, f_keepout) -> np.ndarray:
    """Project out the cisoids at ``f_keepout``; output has the shape of ``x``."""
    arr = np.asarray(x, dtype=complex)
    f = np.atleast_1d(np.asarray(f_keepout, dtype=float))
    if f.size == 0:
        return arr.copy()
    xs = _record(arr)
    _check_freqs(f, xs.shape[0])
    _, resid, _, piv = kernels.fit(xs, f)
    if piv < PIVOT_TOL:
        raise IllConditionedError(f"steering matrix numerically rank deficient at {f}")
    return resid.reshape(arr.shape)


def _collapsed(f: np.ndarray) -> bool:
    return f.size > 1 and circular_gaps(f).min() <= MIN_GAP


def descend(x, f0, max_iter: int = MAX_ITER) -> FrequencyEstimate:
    """Local minimization of the likelihood cost from ``f0``.

    Quasi-Newton (BFGS) directions with Armijo backtracking by halving.
    The first step is scaled to move at most 1e-3 in frequency. Stops on a
    relative cost decrease below 1e-12, a gradient infinity-norm below
    1e-10 ||x||^2, or ``max_iter`` iterations.

    Raises IllConditionedError if the starting point is degenerate.
    """
    xs = _record(x)
    f = np.atleast_1d(np.asarray(f0, dtype=float)).copy()
    _check_freqs(f, xs.shape[0])
    xnorm2 = float(np.vdot(xs, xs).real)
    p = f.size
    eye = np.eye(p)
    cost, g = _cost_grad(xs, f)
    gmax = np.abs(g).max()
    h = eye * (INITIAL_STEP / gmax) if gmax > 0 else eye
    for it in range(max_iter):
        gmax = np.abs(g).max()
        if gmax <= GRAD_TOL * xnorm2:
            break
        d = -h @ g
        slope = g @ d
        if slope >= 0.0:
            h = eye * (INITIAL_STEP / gmax)
            d = -h @ g
            slope = g @ d
        t = 1.0
        while True:
            trial = f + t * d
            if not _collapsed(trial):
                try:
                    new_cost, new_g = _cost_grad(xs, trial)
                except IllConditionedError:
                    new_cost = math.inf
                if new_cost <= cost + ARMIJO * t * slope:
                    break
            t *= 0.5
            if t < 1e-20:
                new_cost = None
                break
        if new_cost is None:
            break
        s = trial - f
        yv = new_g - g
        sy = float(s @ yv)
        if sy > 0.0:
            if it == 0:
                h = eye * (sy / float(yv @ yv))
            rho = 1.0 / sy
            a = eye - rho * np.outer(s, yv)
            h = a @ h @ a.T + rho * np.outer(s, s)
        decrease = cost - new_cost
        f, g = trial, new_g
        prev, cost = cost, new_cost
        if prev > 0.0 and decrease / prev < REL_DECREASE_TOL:
            break
    return FrequencyEstimate(f, cost=cost)


def try_descend(x, f0, branch=None) -> FrequencyEstimate:
    """descend(), falling back to ``f0`` (with its cost) on ill-conditioning."""
    try:
        est = descend(x, f0)
    except IllConditionedError as exc:
        log.debug("refinement failed, keeping start point: %s", exc)
        est = FrequencyEstimate(f0, cost=_safe_cost(x, f0))
    return FrequencyEstimate(est.frequencies, branch, est.cost)


def _safe_cost(x, f) -> float | None:
    try:
        return likelihood_cost(x, f)
    except IllConditionedError:
        return None


def default_grid(p: int) -> int:
    return 500 if p <= 2 else 100


def _grid_tables(xs: np.ndarray, g: int):
    n = xs.shape[0]
    xg = np.ascontiguousarray(np.fft.fft(xs, n=g, axis=0))
    m = np.arange(g)
    dk = np.exp(2j * np.pi * np.mod(np.outer(m, np.arange(n)), g) / g).sum(axis=1)
    return xg, dk


def grid_minimizer(x, p: int, g: int) -> tuple[np.ndarray, float]:
    """Best ascending p-tuple on the uniform grid {0, 1/G, ..., (G-1)/G} and its cost."""
    xs = _record(x)
    n = xs.shape[0]
    xg, dk = _grid_tables(xs, g)
    xnorm2 = float(np.vdot(xs, xs).real)
    idx, cost = kernels.grid_search(xg, dk, n, p, xnorm2, 1e-9 * n)
    if idx is None:
        raise IllConditionedError("no well-conditioned grid tuple")
    return np.asarray(idx) / g, max(float(cost), 0.0)


def mle_grid(x, p: int, g: int | None = None, allow_large: bool = False) -> FrequencyEstimate:
    """Exhaustive coarse grid search over ascending p-tuples, then local descent."""
    xs = _record(x)
    n = xs.shape[0]
    if p < 1:
        raise ValueError(f"p: must be >= 1, got {p}")
    if p > GRID_P_LIMIT and not allow_large:
        raise ValueError(
            f"p={p}: exhaustive grid needs C(G,{p}) evaluations; pass allow_large=True to force"
        )
    g = default_grid(p) if g is None else int(g)
    if g < 2 * n:
        raise ValueError(f"G: grid of {g} points is below 2N={2 * n}")
    if comb(g, p) == 0:
        raise ValueError(f"G: grid of {g} points cannot hold {p} distinct frequencies")
    f_grid, _ = grid_minimizer(xs, p, g)
    return try_descend(xs, f_grid)


def periodogram_peaks(x, p: int, g: int | None = None) -> np.ndarray:
    """Frequencies of the ``p`` largest local maxima of the periodogram on a G-point grid."""
    xs = _record(x)
    g = 8 * xs.shape[0] if g is None else g
    pw = np.sum(np.abs(np.fft.fft(xs, n=g, axis=0)) ** 2, axis=1)
    is_peak = (pw >= np.roll(pw, 1)) & (pw > np.roll(pw, -1))
    cand = np.flatnonzero(is_peak)
    cand = cand[np.argsort(-pw[cand], kind="stable")]
    if cand.size < p:
        rest = np.setdiff1d(np.argsort(-pw, kind="stable"), cand, assume_unique=False)
        cand = np.concatenate([cand, rest[: p - cand.size]])
    return np.sort(cand[:p] / g)


def _residual_peak(r: np.ndarray, g: int) -> float:
    n = r.shape[0]
    pw = np.sum(np.abs(np.fft.fft(r, n=g, axis=0)) ** 2, axis=1)
    i = int(np.argmax(pw))
    nn = np.arange(n)

    def neg_power(v):
        e = np.exp(-2j * np.pi * np.mod(v * nn, 1.0))
        return -float(np.sum(np.abs(e @ r) ** 2))

    res = minimize_scalar(neg_power, bounds=((i - 1) / g, (i + 1) / g), method="bounded",
                          options={"xatol": 1e-12})
    return float(np.mod(res.x, 1.0))


def fast_ml(x, p: int, f0, max_cycles: int = 50, grid_factor: int = 8) -> FrequencyEstimate:
    """Fast ML: cyclic one-dimensional searches, then joint local descent.

    Each coordinate (visited in descending order of its starting
    frequency) moves to the peak of the periodogram of the data with the
    other p-1 components projected out: a grid of ``grid_factor * N``
    points, refined by a bounded scalar search. Cycles repeat until the
    likelihood cost stops improving by 1e-12 ||x||^2.
    """
    xs = _record(x)
    n = xs.shape[0]
    f = np.atleast_1d(np.asarray(f0, dtype=float)).copy()
    if f.size != p:
        raise ValueError(f"f0: expected {p} starting frequencies, got {f.size}")
    _check_freqs(f, n)
    xnorm2 = float(np.vdot(xs, xs).real)
    order = np.argsort(-f, kind="stable")
    g = grid_factor * n
    prev = likelihood_cost(xs, f)
    for _ in range(max_cycles):
        for k in order:
            others = np.delete(f, k)
            r = notch_filter(xs, others) if others.size else xs
            f[k] = _residual_peak(r, g)
        if _collapsed(f):
            break
        cost = likelihood_cost(xs, f)
        if prev - cost < REL_DECREASE_TOL * xnorm2:
            break
        prev = cost
    if _collapsed(f):
        return FrequencyEstimate(f, cost=None)
    return try_descend(xs, f)
