"""Pure-numpy versions of the compiled kernels.

Both functions mirror the signatures in ``_kernels.pyx`` exactly; the
backend module picks one implementation at import time.
"""
from __future__ import annotations

import numpy as np

TINY = 1e-300


def _objective(q, logp, idx, nlab, w, t):
    val = 0.0
    for s in range(idx.shape[0]):
        if w[s] == 0.0:
            continue
        m = np.bincount(idx[s], weights=q, minlength=nlab[s])
        m = m[m > 0]
        val -= w[s] * float(np.dot(m, np.log(m)))
    if t > 0.0:
        on = q > 0
        val -= t * float(np.dot(q[on], np.log(q[on]) - logp[on]))
    return val


def _gradient(q, logp, idx, nlab, w, t):
    g = np.zeros_like(q)
    for s in range(idx.shape[0]):
        if w[s] == 0.0:
            continue
        m = np.bincount(idx[s], weights=q, minlength=nlab[s])
        g -= w[s] * (np.log(np.maximum(m[idx[s]], TINY)) + 1.0)
    if t > 0.0:
        g -= t * (np.log(np.maximum(q, TINY)) - logp + 1.0)
    return g


def entropy_newton(q0, logp, idx, nlab, w, t, tol=1e-12, maxiter=200, reg=1e-13):
    """Maximize sum_s w_s H(q_s) - t D(q||p) over the simplex (natural logs).

    Scaled Newton: the direction q*d solves the KKT system of the quadratic
    model in the scaled variable d under the constraint q.d = 0; steps keep
    every coordinate positive (fraction to boundary 0.99) and pass an Armijo
    test unless the predicted gain is already below rounding noise.
    Returns (q, iterations, converged).
    """
    q = np.array(q0, dtype=float)
    q /= q.sum()
    idx = np.asarray(idx, dtype=np.intp)
    m = len(q)
    S = idx.shape[0]
    same = [idx[s][:, None] == idx[s][None, :] for s in range(S)]
    F = _objective(q, logp, idx, nlab, w, t)
    for it in range(maxiter):
        g = _gradient(q, logp, idx, nlab, w, t)
        gbar = float(np.dot(q, g))
        if np.max(q * np.abs(g - gbar)) < tol:
            return q, it, True
        H = np.zeros((m, m))
        for s in range(S):
            if w[s] == 0.0:
                continue
            marg = np.bincount(idx[s], weights=q, minlength=nlab[s])
            H -= w[s] * same[s] / np.maximum(marg[idx[s]], TINY)[:, None]
        Hs = q[:, None] * H * q[None, :]
        Hs[np.diag_indices(m)] -= (t + reg) * q
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = Hs
        K[:m, m] = q
        K[m, :m] = q
        rhs = np.concatenate([-q * (g - gbar), [0.0]])
        try:
            d = np.linalg.solve(K, rhs)[:m]
        except np.linalg.LinAlgError:
            return q, it, False
        slope = float(np.dot(q * (g - gbar), d))
        if not slope > 0.0:
            return q, it, bool(np.max(q * np.abs(g - gbar)) < 1e3 * tol)
        # additive step q + s q d, never closer than 1% of the way to the boundary
        step = min(1.0, 0.99 / max(-float(d.min()), 1e-300))
        noise = slope * step < 1e-14 * (1.0 + abs(F) + t)  # the t*D term rounds at ~t*eps
        while True:
            qn = q * (1.0 + step * d)
            qn /= qn.sum()
            Fn = _objective(qn, logp, idx, nlab, w, t)
            if noise or Fn >= F + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-20:
                return q, it, bool(np.max(q * np.abs(g - gbar)) < 1e3 * tol)
        q, F = qn, Fn
    g = _gradient(q, logp, idx, nlab, w, t)
    return q, maxiter, bool(np.max(q * np.abs(g - np.dot(q, g))) < tol)


def permutation_accumulate(perm_idx, coeffs):
    """Dense matrix sum_sigma coeffs[sigma] * Perm(sigma).

    ``perm_idx[k, i]`` is the image of basis index i under permutation k, so
    column i of Perm(sigma_k) has a single 1 in row perm_idx[k, i].
    """
    perm_idx = np.asarray(perm_idx, dtype=np.intp)
    D = perm_idx.shape[1]
    out = np.zeros((D, D))
    cols = np.arange(D)
    for k in range(perm_idx.shape[0]):
        if coeffs[k] != 0.0:
            out[perm_idx[k], cols] += coeffs[k]
    return out
