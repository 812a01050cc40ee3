"""Numpy implementations of the iterative kernels.

These mirror ``_ckernels.pyx`` signature for signature and are used when the
compiled extension is unavailable. Inputs are assumed validated and
C-contiguous float64 (int64 for ``lcs_length``).
"""

from __future__ import annotations

import numpy as np


def _residual(plan, a, b):
    return max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max())


def sinkhorn_scaling(kern, a, b, tol, max_iter):
    """Exponential-domain Sinkhorn on a Gibbs kernel.

    Returns ``(plan, iterations, residual)``.
    """
    u = np.ones(kern.shape[0])
    v = np.ones(kern.shape[1])
    plan = kern
    residual = np.inf
    it = 0
    while it < max_iter:
        it += 1
        u = a / (kern @ v)
        v = b / (kern.T @ u)
        plan = u[:, None] * kern * v[None, :]
        residual = _residual(plan, a, b)
        if residual <= tol:
            break
    return plan, it, float(residual)


def _lse_rows(x):
    m = x.max(axis=1)
    return m + np.log(np.exp(x - m[:, None]).sum(axis=1))


def sinkhorn_log(cost, a, b, lam, tol, max_iter, f, g):
    """Log-domain Sinkhorn warm-started from dual potentials ``f``, ``g``.

    Returns ``(f, g, plan, iterations, residual)``.
    """
    f = f.copy()
    g = g.copy()
    log_a = np.log(a)
    log_b = np.log(b)
    plan = np.exp((f[:, None] + g[None, :] - cost) / lam)
    residual = _residual(plan, a, b)
    rows = _lse_rows((g[None, :] - cost) / lam)
    it = 0
    while it < max_iter and residual > tol:
        it += 1
        f = lam * (log_a - rows)
        g = lam * (log_b - _lse_rows(((f[:, None] - cost) / lam).T))
        # columns are exact after the g update; the row log-sums feed the next f update
        rows = _lse_rows((g[None, :] - cost) / lam)
        residual = np.abs(np.exp(f / lam + rows) - a).max()
    if it:
        plan = np.exp((f[:, None] + g[None, :] - cost) / lam)
        residual = _residual(plan, a, b)
    return f, g, plan, it, float(residual)


def ipot(gibbs, mu, nu, n_outer, n_inner, stop_tol):
    """Proximal-point iteration with plan-change early stopping.

    Returns ``(plan, iterations, stopped_early)``.
    """
    k, m = gibbs.shape
    plan = np.full((k, m), 1.0 / (k * m))
    sigma = np.full(m, 1.0 / m)
    delta = np.ones(k)
    for t in range(1, n_outer + 1):
        q = gibbs * plan
        for _ in range(n_inner):
            delta = mu / (q @ sigma)
            sigma = nu / (q.T @ delta)
        new = delta[:, None] * q * sigma[None, :]
        change = np.abs(new - plan).max()
        plan = new
        if change < stop_tol:
            return plan, t, True
    return plan, n_outer, False


def lcs_length(x, y):
    """Length of the longest common subsequence of two int sequences."""
    if len(x) == 0 or len(y) == 0:
        return 0
    prev = [0] * (len(y) + 1)
    for xi in x:
        cur = [0] * (len(y) + 1)
        for j, yj in enumerate(y, start=1):
            if xi == yj:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = cur[j - 1] if cur[j - 1] > prev[j] else prev[j]
        prev = cur
    return prev[-1]
