# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as the functions in _fallback.py."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double TINY = 1e-300


cdef double _objective(double[::1] q, double[::1] logp, long[:, ::1] idx,
                       long[::1] nlab, double[::1] w, double t, double* marg) nogil:
    cdef Py_ssize_t S = idx.shape[0], m = q.shape[0], s, i, j
    cdef double val = 0.0
    for s in range(S):
        if w[s] == 0.0:
            continue
        for j in range(nlab[s]):
            marg[j] = 0.0
        for i in range(m):
            marg[idx[s, i]] += q[i]
        for j in range(nlab[s]):
            if marg[j] > 0.0:
                val -= w[s] * marg[j] * log(marg[j])
    if t > 0.0:
        for i in range(m):
            if q[i] > 0.0:
                val -= t * q[i] * (log(q[i]) - logp[i])
    return val


cdef int _solve(double* K, double* b, Py_ssize_t n) nogil:
    """Gaussian elimination with partial pivoting, in place; b gets x."""
    cdef Py_ssize_t i, j, k, piv
    cdef double best, tmp, f
    for k in range(n):
        piv = k
        best = fabs(K[k * n + k])
        for i in range(k + 1, n):
            if fabs(K[i * n + k]) > best:
                best = fabs(K[i * n + k])
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(n):
                tmp = K[k * n + j]
                K[k * n + j] = K[piv * n + j]
                K[piv * n + j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, n):
            f = K[i * n + k] / K[k * n + k]
            if f != 0.0:
                for j in range(k, n):
                    K[i * n + j] -= f * K[k * n + j]
                b[i] -= f * b[k]
    for k in range(n - 1, -1, -1):
        tmp = b[k]
        for j in range(k + 1, n):
            tmp -= K[k * n + j] * b[j]
        b[k] = tmp / K[k * n + k]
    return 0


def entropy_newton(q0, logp_in, idx_in, nlab_in, w_in, double t,
                   double tol=1e-12, int maxiter=200, double reg=1e-13):
    cdef double[::1] q = np.array(q0, dtype=np.float64)
    cdef double[::1] logp = np.ascontiguousarray(logp_in, dtype=np.float64)
    cdef long[:, ::1] idx = np.ascontiguousarray(idx_in, dtype=np.int64)
    cdef long[::1] nlab = np.ascontiguousarray(nlab_in, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t m = q.shape[0], S = idx.shape[0], s, i, j, n1 = m + 1
    cdef Py_ssize_t maxlab = max(int(np.max(nlab_in)), 1)
    cdef double[::1] qn = np.empty(m)
    cdef double[::1] g = np.empty(m)
    cdef double[::1] d = np.empty(m)
    cdef double* marg = <double*> malloc(maxlab * sizeof(double))
    cdef double* K = <double*> malloc(n1 * n1 * sizeof(double))
    cdef double* rhs = <double*> malloc(n1 * sizeof(double))
    cdef double total, F, Fn, gbar, crit, slope, step, dmax, mi
    cdef int it, ok
    cdef bint converged = False, noise
    total = 0.0
    for i in range(m):
        total += q[i]
    for i in range(m):
        q[i] /= total
    try:
        with nogil:
            F = _objective(q, logp, idx, nlab, w, t, marg)
            it = 0
            while it < maxiter:
                # gradient
                for i in range(m):
                    g[i] = 0.0
                for s in range(S):
                    if w[s] == 0.0:
                        continue
                    for j in range(nlab[s]):
                        marg[j] = 0.0
                    for i in range(m):
                        marg[idx[s, i]] += q[i]
                    for i in range(m):
                        mi = marg[idx[s, i]]
                        if mi < TINY:
                            mi = TINY
                        g[i] -= w[s] * (log(mi) + 1.0)
                if t > 0.0:
                    for i in range(m):
                        mi = q[i] if q[i] > TINY else TINY
                        g[i] -= t * (log(mi) - logp[i] + 1.0)
                gbar = 0.0
                for i in range(m):
                    gbar += q[i] * g[i]
                crit = 0.0
                for i in range(m):
                    if q[i] * fabs(g[i] - gbar) > crit:
                        crit = q[i] * fabs(g[i] - gbar)
                if crit < tol:
                    converged = True
                    break
                # scaled KKT system
                for i in range(n1 * n1):
                    K[i] = 0.0
                for s in range(S):
                    if w[s] == 0.0:
                        continue
                    for j in range(nlab[s]):
                        marg[j] = 0.0
                    for i in range(m):
                        marg[idx[s, i]] += q[i]
                    for i in range(m):
                        mi = marg[idx[s, i]]
                        if mi < TINY:
                            mi = TINY
                        for j in range(m):
                            if idx[s, i] == idx[s, j]:
                                K[i * n1 + j] -= w[s] * q[i] * q[j] / mi
                for i in range(m):
                    K[i * n1 + i] -= (t + reg) * q[i]
                    K[i * n1 + m] = q[i]
                    K[m * n1 + i] = q[i]
                    rhs[i] = -q[i] * (g[i] - gbar)
                rhs[m] = 0.0
                ok = _solve(K, rhs, n1)
                if ok != 0:
                    break
                slope = 0.0
                dmax = 0.0
                for i in range(m):
                    d[i] = rhs[i]
                    slope += q[i] * (g[i] - gbar) * d[i]
                    if -d[i] > dmax:
                        dmax = -d[i]
                if not slope > 0.0:
                    converged = crit < 1e3 * tol
                    break
                step = 1.0
                if dmax > 0.99:
                    step = 0.99 / dmax
                noise = slope * step < 1e-14 * (1.0 + fabs(F) + t)
                while True:
                    total = 0.0
                    for i in range(m):
                        qn[i] = q[i] * (1.0 + step * d[i])
                        total += qn[i]
                    for i in range(m):
                        qn[i] /= total
                    Fn = _objective(qn, logp, idx, nlab, w, t, marg)
                    if noise or Fn >= F + 1e-4 * step * slope:
                        break
                    step *= 0.5
                    if step < 1e-20:
                        break
                if step < 1e-20:
                    converged = crit < 1e3 * tol
                    break
                for i in range(m):
                    q[i] = qn[i]
                F = Fn
                it += 1
    finally:
        free(marg)
        free(K)
        free(rhs)
    return np.asarray(q), it, bool(converged)


def permutation_accumulate(perm_idx_in, coeffs_in):
    cdef long[:, ::1] perm_idx = np.ascontiguousarray(perm_idx_in, dtype=np.int64)
    cdef double[::1] coeffs = np.ascontiguousarray(coeffs_in, dtype=np.float64)
    cdef Py_ssize_t P = perm_idx.shape[0], D = perm_idx.shape[1], k, i
    out_arr = np.zeros((D, D))
    cdef double[:, ::1] out = out_arr
    cdef double c
    with nogil:
        for k in range(P):
            c = coeffs[k]
            if c == 0.0:
                continue
            for i in range(D):
                out[perm_idx[k, i], i] += c
    return out_arr
