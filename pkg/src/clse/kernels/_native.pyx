# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial-loop kernel.

Same contract as kernels._python.run_trial_kernel, with the per-step
covariance update, Cholesky solves and DCD iterations written out in C.
Matrix dimensions are small (L <= 64), so everything uses stack-friendly
dense buffers allocated once per trial.
"""

import numpy as np

from .. import filters as _filters

cimport numpy as cnp
from libc.math cimport fabs, sqrt, copysign, NAN

cnp.import_array()


cdef int _chol(double* a, int n) noexcept nogil:
    """In-place lower Cholesky of the n x n row-major matrix a.

    Returns 0 on success, 1 if a pivot is not positive. Only the lower
    triangle of the result is referenced afterwards.
    """
    cdef int i, j, k
    cdef double s
    for j in range(n):
        s = a[j * n + j]
        for k in range(j):
            s -= a[j * n + k] * a[j * n + k]
        if s <= 0.0:
            return 1
        a[j * n + j] = sqrt(s)
        for i in range(j + 1, n):
            s = a[i * n + j]
            for k in range(j):
                s -= a[i * n + k] * a[j * n + k]
            a[i * n + j] = s / a[j * n + j]
    return 0


cdef void _chol_solve(double* l, double* b, int n) noexcept nogil:
    """Solve (L L') x = b in place given the lower Cholesky factor l."""
    cdef int i, k
    cdef double s
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= l[i * n + k] * b[k]
        b[i] = s / l[i * n + i]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= l[k * n + i] * b[k]
        b[i] = s / l[i * n + i]


def run_trial_kernel(int algo_id, double[:, ::1] X, double[::1] y,
                     scenario, double[::1] g, double delta, dcd):
    """Compiled counterpart of kernels._python.run_trial_kernel."""
    cdef int n_iters = X.shape[0]
    cdef int L = X.shape[1]
    cdef double lam = scenario.lam
    cdef double mu = scenario.mu

    C_arr = np.ascontiguousarray(scenario.C, dtype=np.float64)
    cdef double[:, ::1] C = C_arr
    cdef int K = C.shape[1]
    f_arr = np.ascontiguousarray(scenario.f, dtype=np.float64)
    cdef double[::1] f = f_arr

    # Constant augmented-system pieces.
    muCCt_arr = mu * (C_arr @ C_arr.T)
    cdef double[:, ::1] muCCt = np.ascontiguousarray(muCCt_arr)
    muCf_arr = mu * (C_arr @ f_arr)
    cdef double[::1] muCf = np.ascontiguousarray(muCf_arr)

    cdef double dcd_H = 0.0
    cdef int dcd_M = 0, dcd_Nu = 0
    if algo_id == 2:
        dcd_H = dcd.H
        dcd_M = dcd.M
        dcd_Nu = dcd.Nu

    # State and work buffers.
    phi = delta * np.eye(L)
    cdef double[:, ::1] phi_v = phi
    p = np.zeros(L)
    cdef double[::1] p_v = p

    algorithm = {0: _filters.CLS, 1: _filters.RCLS, 2: _filters.DCD_RCLS}[algo_id]
    w0 = _filters.state_init(scenario, delta, algorithm).w
    w = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[::1] w_v = w

    d2 = np.empty(n_iters)
    m2 = np.empty(n_iters)
    updates = np.zeros(n_iters, dtype=np.int64)
    cdef double[::1] d2_v = d2
    cdef double[::1] m2_v = m2
    cdef long long[::1] upd_v = updates

    work = np.empty(L * L)
    cdef double[::1] work_v = work            # factor buffer
    work2 = np.empty(L * max(K, 1))
    cdef double[::1] work2_v = work2          # Phi^-1 C columns (CLS)
    skk = np.empty(K * K)
    cdef double[::1] skk_v = skk
    tvec = np.empty(K)
    cdef double[::1] t_v = tvec
    uvec = np.empty(L)
    cdef double[::1] u_v = uvec
    rho = np.empty(L)
    cdef double[::1] rho_v = rho

    cdef int i, a, b, k, fail, nupd, level
    cdef double xa, acc, alpha, step

    with nogil:
        for i in range(n_iters):
            # phi <- lam*phi + x x', p <- lam*p + y x
            for a in range(L):
                xa = X[i, a]
                p_v[a] = lam * p_v[a] + y[i] * xa
                for b in range(L):
                    phi_v[a, b] = lam * phi_v[a, b] + xa * X[i, b]

            fail = 0
            if algo_id == 0:
                fail = _cls_step(&phi_v[0, 0], &p_v[0], &C[0, 0], &f[0],
                                 L, K, &work_v[0], &work2_v[0], &skk_v[0],
                                 &t_v[0], &u_v[0], &w_v[0])
            elif algo_id == 1:
                for a in range(L):
                    for b in range(L):
                        work_v[a * L + b] = phi_v[a, b] + muCCt[a, b]
                fail = _chol(&work_v[0], L)
                if fail == 0:
                    for a in range(L):
                        w_v[a] = p_v[a] + muCf[a]
                    _chol_solve(&work_v[0], &w_v[0], L)
            else:
                # DCD on (phi + mu C C') s = p + mu C f, warm start at w.
                for a in range(L):
                    for b in range(L):
                        work_v[a * L + b] = phi_v[a, b] + muCCt[a, b]
                for a in range(L):
                    acc = p_v[a] + muCf[a]
                    for b in range(L):
                        acc -= work_v[a * L + b] * w_v[b]
                    rho_v[a] = acc
                alpha = dcd_H / 2.0
                level = 1
                nupd = 0
                while nupd < dcd_Nu:
                    k = 0
                    for a in range(1, L):
                        if fabs(rho_v[a]) > fabs(rho_v[k]):
                            k = a
                    if fabs(rho_v[k]) > (alpha / 2.0) * work_v[k * L + k]:
                        step = copysign(alpha, rho_v[k])
                        w_v[k] += step
                        for a in range(L):
                            rho_v[a] -= step * work_v[a * L + k]
                        nupd += 1
                    else:
                        if level >= dcd_M:
                            break
                        alpha /= 2.0
                        level += 1
                upd_v[i] = nupd

            if fail:
                d2_v[i] = NAN
                m2_v[i] = NAN
                continue

            acc = 0.0
            for a in range(L):
                xa = w_v[a] - g[a]
                acc += xa * xa
            d2_v[i] = acc
            acc = 0.0
            for b in range(K):
                xa = -f[b]
                for a in range(L):
                    xa += C[a, b] * w_v[a]
                acc += xa * xa
            m2_v[i] = acc

    return d2, m2, updates, w


cdef int _cls_step(double* phi, double* p, double* C, double* f,
                   int L, int K, double* work, double* V,
                   double* skk, double* t, double* u, double* w) noexcept nogil:
    """One CLS step: w = Phi^-1 p + Phi^-1 C (C' Phi^-1 C)^-1 (f - C' Phi^-1 p)."""
    cdef int a, b, c
    cdef double s
    for a in range(L):
        for b in range(L):
            work[a * L + b] = phi[a * L + b]
    if _chol(work, L):
        return 1
    for a in range(L):
        u[a] = p[a]
    _chol_solve(work, u, L)
    # V = Phi^-1 C, column by column (V stored column-major: V[b*L + a]).
    for b in range(K):
        for a in range(L):
            V[b * L + a] = C[a * K + b]
        _chol_solve(work, V + b * L, L)
    # skk = C' V (K x K, symmetric), t = f - C' u
    for a in range(K):
        for b in range(K):
            s = 0.0
            for c in range(L):
                s += C[c * K + a] * V[b * L + c]
            skk[a * K + b] = s
        s = f[a]
        for c in range(L):
            s -= C[c * K + a] * u[c]
        t[a] = s
    # symmetrize before factoring; rounding can leave skk slightly asymmetric
    for a in range(K):
        for b in range(a + 1, K):
            s = 0.5 * (skk[a * K + b] + skk[b * K + a])
            skk[a * K + b] = s
            skk[b * K + a] = s
    if _chol(skk, K):
        return 1
    _chol_solve(skk, t, K)
    for a in range(L):
        s = u[a]
        for b in range(K):
            s += V[b * L + a] * t[b]
        w[a] = s
    return 0
