# cython: language_level=3
"""Compiled iterative kernels; see ``_pykernels`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, INFINITY

cnp.import_array()


cdef double _residual(double[:, ::1] plan, double[::1] a, double[::1] b) noexcept nogil:
    cdef Py_ssize_t i, j, k = plan.shape[0], m = plan.shape[1]
    cdef double s, r = 0.0
    for i in range(k):
        s = 0.0
        for j in range(m):
            s += plan[i, j]
        if fabs(s - a[i]) > r:
            r = fabs(s - a[i])
    for j in range(m):
        s = 0.0
        for i in range(k):
            s += plan[i, j]
        if fabs(s - b[j]) > r:
            r = fabs(s - b[j])
    return r


def sinkhorn_scaling(double[:, ::1] kern, double[::1] a, double[::1] b,
                     double tol, long max_iter):
    cdef Py_ssize_t i, j, k = kern.shape[0], m = kern.shape[1]
    cdef long it = 0
    cdef double s, residual = INFINITY
    out = np.array(kern, dtype=np.float64, copy=True)
    cdef double[:, ::1] plan = out
    cdef double[::1] u = np.ones(k)
    cdef double[::1] v = np.ones(m)
    with nogil:
        while it < max_iter:
            it += 1
            for i in range(k):
                s = 0.0
                for j in range(m):
                    s += kern[i, j] * v[j]
                u[i] = a[i] / s
            for j in range(m):
                s = 0.0
                for i in range(k):
                    s += kern[i, j] * u[i]
                v[j] = b[j] / s
            for i in range(k):
                for j in range(m):
                    plan[i, j] = u[i] * kern[i, j] * v[j]
            residual = _residual(plan, a, b)
            if residual <= tol:
                break
    return out, it, residual


cdef void _log_update(double[:, ::1] cost, double[::1] pot, double[::1] other,
                      double[::1] log_w, double lam, bint rows) noexcept nogil:
    # rows: pot_i = lam*(log_w_i - LSE_j (other_j - C_ij)/lam), else over columns
    cdef Py_ssize_t i, j, n, p
    cdef double mx, s, x
    if rows:
        n = cost.shape[0]
        p = cost.shape[1]
    else:
        n = cost.shape[1]
        p = cost.shape[0]
    for i in range(n):
        mx = -INFINITY
        for j in range(p):
            x = (other[j] - (cost[i, j] if rows else cost[j, i])) / lam
            if x > mx:
                mx = x
        s = 0.0
        for j in range(p):
            x = (other[j] - (cost[i, j] if rows else cost[j, i])) / lam
            s += exp(x - mx)
        pot[i] = lam * (log_w[i] - (mx + log(s)))


cdef void _log_plan(double[:, ::1] cost, double[::1] f, double[::1] g, double lam,
                    double[:, ::1] plan) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(cost.shape[0]):
        for j in range(cost.shape[1]):
            plan[i, j] = exp((f[i] + g[j] - cost[i, j]) / lam)


def sinkhorn_log(double[:, ::1] cost, double[::1] a, double[::1] b, double lam,
                 double tol, long max_iter, f0, g0):
    cdef Py_ssize_t i, k = cost.shape[0], m = cost.shape[1]
    cdef long it = 0
    f_arr = np.array(f0, dtype=np.float64, copy=True)
    g_arr = np.array(g0, dtype=np.float64, copy=True)
    out = np.empty((k, m))
    cdef double[::1] f = f_arr
    cdef double[::1] g = g_arr
    cdef double[:, ::1] plan = out
    cdef double[::1] log_a = np.log(np.asarray(a))
    cdef double[::1] log_b = np.log(np.asarray(b))
    cdef double residual
    with nogil:
        _log_plan(cost, f, g, lam, plan)
        residual = _residual(plan, a, b)
        while it < max_iter and residual > tol:
            it += 1
            _log_update(cost, f, g, log_a, lam, True)
            _log_update(cost, g, f, log_b, lam, False)
            _log_plan(cost, f, g, lam, plan)
            residual = _residual(plan, a, b)
    return f_arr, g_arr, out, it, residual


def ipot(double[:, ::1] gibbs, double[::1] mu, double[::1] nu,
         long n_outer, long n_inner, double stop_tol):
    cdef Py_ssize_t i, j, k = gibbs.shape[0], m = gibbs.shape[1]
    cdef long t, l, used = n_outer
    cdef bint stopped = False
    cdef double s, change, x
    out = np.full((k, m), 1.0 / (k * m))
    cdef double[:, ::1] plan = out
    cdef double[:, ::1] q = np.empty((k, m))
    cdef double[::1] sigma = np.full(m, 1.0 / m)
    cdef double[::1] delta = np.ones(k)
    with nogil:
        for t in range(1, n_outer + 1):
            for i in range(k):
                for j in range(m):
                    q[i, j] = gibbs[i, j] * plan[i, j]
            for l in range(n_inner):
                for i in range(k):
                    s = 0.0
                    for j in range(m):
                        s += q[i, j] * sigma[j]
                    delta[i] = mu[i] / s
                for j in range(m):
                    s = 0.0
                    for i in range(k):
                        s += q[i, j] * delta[i]
                    sigma[j] = nu[j] / s
            change = 0.0
            for i in range(k):
                for j in range(m):
                    x = delta[i] * q[i, j] * sigma[j]
                    if fabs(x - plan[i, j]) > change:
                        change = fabs(x - plan[i, j])
                    plan[i, j] = x
            if change < stop_tol:
                used = t
                stopped = True
                break
    return out, used, stopped


def lcs_length(const long long[::1] x, const long long[::1] y):
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i, j
    if n == 0 or m == 0:
        return 0
    cdef long long[::1] prev = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] cur = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] tmp
    with nogil:
        for i in range(n):
            cur[0] = 0
            for j in range(1, m + 1):
                if x[i] == y[j - 1]:
                    cur[j] = prev[j - 1] + 1
                elif cur[j - 1] > prev[j]:
                    cur[j] = cur[j - 1]
                else:
                    cur[j] = prev[j]
            tmp = prev
            prev = cur
            cur = tmp
    return int(prev[m])
