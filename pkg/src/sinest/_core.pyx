# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: concentrated likelihood fit/gradient and exhaustive grid search.

Mirrors ``sinest._fallback`` exactly in signature and semantics.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fmod, INFINITY, M_PI

cnp.import_array()

ctypedef double complex cplx


cdef inline double abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cj(cplx z) nogil:
    return z.real - 1j * z.imag


cdef double _fit(const cplx[:, :] x, const double[:] f, cplx[:, ::1] q,
                 cplx[:, ::1] r, cplx[:, ::1] coef, cplx[:, ::1] resid,
                 cplx[:, ::1] amps, double *piv) noexcept nogil:
    """Modified Gram-Schmidt with one reorthogonalization pass."""
    cdef Py_ssize_t n = x.shape[0], kk = x.shape[1], p = f.shape[0]
    cdef Py_ssize_t i, j, k, c, it
    cdef double ph, nrm, cost = 0.0, ratio
    cdef double sqn = sqrt(<double>n)
    cdef cplx acc
    piv[0] = INFINITY
    for k in range(p):
        for i in range(k + 1):
            r[i, k] = 0
        for i in range(n):
            ph = 2.0 * M_PI * fmod(f[k] * i, 1.0)
            q[i, k] = cos(ph) + 1j * sin(ph)
        for it in range(2):
            for j in range(k):
                acc = 0
                for i in range(n):
                    acc = acc + cj(q[i, j]) * q[i, k]
                for i in range(n):
                    q[i, k] = q[i, k] - acc * q[i, j]
                r[j, k] = r[j, k] + acc
        nrm = 0.0
        for i in range(n):
            nrm += abs2(q[i, k])
        nrm = sqrt(nrm)
        r[k, k] = nrm
        ratio = nrm / sqn
        if ratio < piv[0]:
            piv[0] = ratio
        if nrm > 0.0:
            for i in range(n):
                q[i, k] = q[i, k] / nrm
    for c in range(kk):
        for k in range(p):
            acc = 0
            for i in range(n):
                acc = acc + cj(q[i, k]) * x[i, c]
            coef[k, c] = acc
        for i in range(n):
            acc = x[i, c]
            for k in range(p):
                acc = acc - q[i, k] * coef[k, c]
            resid[i, c] = acc
            cost += abs2(acc)
        for k in range(p - 1, -1, -1):
            acc = coef[k, c]
            for j in range(k + 1, p):
                acc = acc - r[k, j] * amps[j, c]
            if r[k, k].real > 0.0:
                amps[k, c] = acc / r[k, k].real
            else:
                amps[k, c] = INFINITY
    return cost


def fit(x, f):
    """Least-squares fit of cisoids at ``f`` to every column of ``x``.

    Returns ``(cost, residual, amplitudes, pivot_ratio)``.
    """
    cdef const cplx[:, :] xv = np.asarray(x, dtype=np.complex128)
    cdef const double[:] fv = np.asarray(f, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], kk = xv.shape[1], p = fv.shape[0]
    q = np.empty((n, p), dtype=np.complex128)
    r = np.zeros((p, p), dtype=np.complex128)
    coef = np.empty((p, kk), dtype=np.complex128)
    resid = np.empty((n, kk), dtype=np.complex128)
    amps = np.empty((p, kk), dtype=np.complex128)
    cdef double piv
    cdef double cost = _fit(xv, fv, q, r, coef, resid, amps, &piv)
    return cost, resid, amps, piv


def cost_grad(x, f, bint want_grad=True):
    """Concentrated cost and its analytic gradient in the frequencies."""
    cdef const cplx[:, :] xv = np.asarray(x, dtype=np.complex128)
    cdef const double[:] fv = np.asarray(f, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], kk = xv.shape[1], p = fv.shape[0]
    cdef cplx[:, ::1] q = np.empty((n, p), dtype=np.complex128)
    cdef cplx[:, ::1] r = np.zeros((p, p), dtype=np.complex128)
    cdef cplx[:, ::1] coef = np.empty((p, kk), dtype=np.complex128)
    cdef cplx[:, ::1] resid = np.empty((n, kk), dtype=np.complex128)
    cdef cplx[:, ::1] amps = np.empty((p, kk), dtype=np.complex128)
    cdef double piv, ph
    cdef double cost
    cdef Py_ssize_t i, k, c
    cdef cplx acc, e
    with nogil:
        cost = _fit(xv, fv, q, r, coef, resid, amps, &piv)
    if not want_grad:
        return cost, None, piv
    grad = np.zeros(p, dtype=np.float64)
    cdef double[::1] gv = grad
    with nogil:
        for k in range(p):
            for c in range(kk):
                acc = 0
                for i in range(n):
                    ph = 2.0 * M_PI * fmod(fv[k] * i, 1.0)
                    e = cos(ph) + 1j * sin(ph)
                    acc = acc + cj(resid[i, c]) * (2.0 * M_PI * i) * 1j * e
                gv[k] += -2.0 * (amps[k, c] * acc).real
    return cost, grad, piv


cdef struct GridState:
    Py_ssize_t g, kk, p
    double n, xnorm2, tol, best
    Py_ssize_t *idx
    Py_ssize_t *best_idx
    cplx *lmat
    cplx *y
    double *energy
    const cplx *xg
    const cplx *dk


cdef void _recurse(GridState *st, Py_ssize_t lev, Py_ssize_t start) noexcept nogil:
    cdef Py_ssize_t i, j, m, c
    cdef Py_ssize_t p = st.p, g = st.g, kk = st.kk
    cdef cplx s
    cdef double d, piv, e, cost
    for i in range(start, g - (p - lev) + 1):
        st.idx[lev] = i
        d = st.n
        for j in range(lev):
            s = st.dk[((st.idx[j] - i) % g + g) % g]
            for m in range(j):
                s = s - st.lmat[lev * p + m] * cj(st.lmat[j * p + m])
            s = s / st.lmat[j * p + j].real
            st.lmat[lev * p + j] = s
            d -= abs2(s)
        if d <= st.tol:
            continue
        piv = sqrt(d)
        st.lmat[lev * p + lev] = piv
        e = st.energy[lev - 1] if lev > 0 else 0.0
        for c in range(kk):
            s = st.xg[i * kk + c]
            for m in range(lev):
                s = s - st.lmat[lev * p + m] * st.y[m * kk + c]
            s = s / piv
            st.y[lev * kk + c] = s
            e += abs2(s)
        if lev == p - 1:
            cost = st.xnorm2 - e
            if cost < st.best:
                st.best = cost
                for m in range(p):
                    st.best_idx[m] = st.idx[m]
        else:
            st.energy[lev] = e
            _recurse(st, lev + 1, i + 1)


def grid_search(xg, dk, n, int p, double xnorm2, double tol):
    """Exhaustive minimization over ascending index tuples of a uniform grid.

    Returns ``(indices, cost)``; ties go to the lexicographically smallest
    tuple.
    """
    cdef cplx[:, ::1] xgv = np.ascontiguousarray(xg, dtype=np.complex128)
    cdef cplx[::1] dkv = np.ascontiguousarray(dk, dtype=np.complex128)
    cdef Py_ssize_t g = xgv.shape[0], kk = xgv.shape[1]
    cdef Py_ssize_t[::1] idx = np.zeros(p, dtype=np.intp)
    best_idx_arr = np.full(p, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] best_idx = best_idx_arr
    cdef cplx[::1] lmat = np.zeros(p * p, dtype=np.complex128)
    cdef cplx[::1] y = np.zeros(p * kk, dtype=np.complex128)
    cdef double[::1] energy = np.zeros(p, dtype=np.float64)
    cdef GridState st
    st.g = g
    st.kk = kk
    st.p = p
    st.n = <double>n
    st.xnorm2 = xnorm2
    st.tol = tol
    st.best = INFINITY
    st.idx = &idx[0]
    st.best_idx = &best_idx[0]
    st.lmat = &lmat[0]
    st.y = &y[0]
    st.energy = &energy[0]
    st.xg = &xgv[0, 0]
    st.dk = &dkv[0]
    if p < 1 or p > g:
        return None, INFINITY
    with nogil:
        _recurse(&st, 0, 0)
    if best_idx[0] < 0:
        return None, INFINITY
    return best_idx_arr.astype(np.int64), st.best
