"""Optimal transport between embedding sets.

Three solvers share one result type:

* :func:`sinkhorn_entropic` -- entropic OT, ``min <C,T> + lam * sum T log T``;
  exponential-domain scaling for ``lam >= 0.05``, log-domain with an
  epsilon-halving warm start below that.
* :func:`ipot_transport` / :func:`ipot_align_distance` -- proximal-point
  iteration on the Gibbs kernel ``exp(-C/beta)`` (multiplicative ``delta``/``sigma``
  scaling of ``Q = G * T``), finished by rounding onto the marginals.
* :func:`lp_oracle` -- the exact linear program, for verification at desk scale.

Every reported ``distance`` is the unregularized cost ``<C, T>`` of the returned
plan, so numbers from all three are directly comparable.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import errors, kernels

logger = logging.getLogger(__name__)

WEIGHT_ATOL = 1e-9
NORM_EPS = 1e-12
LOG_DOMAIN_BELOW = 0.05
LP_MAX_CELLS = 400


def _frozen(x: np.ndarray) -> np.ndarray:
    x.flags.writeable = False
    return x


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Ordered vectors of one dimension with probability weights (uniform by default)."""

    vectors: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=np.float64)
        if vecs.ndim == 1:
            vecs = vecs[None, :]
        if vecs.ndim != 2 or vecs.shape[0] == 0 or vecs.shape[1] == 0:
            raise errors.EmptyInput(
                f"embedding set needs a nonempty (count, dim) array, got shape {vecs.shape}"
            )
        if not np.isfinite(vecs).all():
            raise errors.NonFinite("embedding set contains NaN/inf")
        if self.weights is None:
            w = np.full(vecs.shape[0], 1.0 / vecs.shape[0])
        else:
            w = check_weights(self.weights, vecs.shape[0], "weights")
        object.__setattr__(self, "vectors", _frozen(vecs))
        object.__setattr__(self, "weights", _frozen(w))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


def check_weights(w, n: int, name: str = "weights") -> np.ndarray:
    w = np.array(w, dtype=np.float64).ravel()
    if w.shape[0] != n:
        raise errors.ShapeMismatch(f"{name} has length {w.shape[0]}, expected {n}")
    if not np.isfinite(w).all() or (w < 0).any():
        raise errors.InvalidWeights(f"{name} must be finite and nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_ATOL:
        raise errors.InvalidWeights(f"{name} sum to {w.sum()!r}, expected 1")
    return w


@dataclass(frozen=True, eq=False)
class CostMatrix:
    entries: np.ndarray
    metric_tag: str = "custom"

    def __post_init__(self):
        c = np.array(self.entries, dtype=np.float64)
        if c.ndim != 2 or 0 in c.shape:
            raise errors.ShapeMismatch(f"cost must be a nonempty 2-D matrix, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise errors.NonFinite("cost matrix contains NaN/inf")
        object.__setattr__(self, "entries", _frozen(c))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class TransportPlan:
    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    iterations_used: int
    converged: bool
    residual: float = 0.0

    def marginal_residual(self) -> float:
        return max(
            float(np.abs(self.matrix.sum(axis=1) - self.row_marginal).max()),
            float(np.abs(self.matrix.sum(axis=0) - self.col_marginal).max()),
        )


@dataclass(frozen=True, eq=False)
class OtSolution:
    plan: TransportPlan
    distance: float
    method: str = ""
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverConfig:
    """Per-pair OT settings used by the alignment stage."""

    solver: str = "ipot"
    beta: float = 0.5
    outer_iters: int = 200
    inner_iters: int = 1
    lam: float = 0.1
    tol: float = 1e-8
    max_iter: int = 2000

    def __post_init__(self):
        if self.solver not in ("ipot", "sinkhorn"):
            raise errors.InvalidPolicy(f"unknown OT solver {self.solver!r}")

    def solve(self, a: EmbeddingSet, b: EmbeddingSet) -> OtSolution:
        if self.solver == "ipot":
            return ipot_align_distance(a, b, self.beta, self.outer_iters, self.inner_iters)
        cost = cosine_cost(a, b)
        return sinkhorn_entropic(cost, a.weights, b.weights, self.lam, self.tol, self.max_iter)


# ---------------------------------------------------------------------------
# cost
# ---------------------------------------------------------------------------


def _unit_rows(x: np.ndarray, side: str) -> np.ndarray:
    norms = np.sqrt(np.sum(x * x, axis=1))
    bad = np.flatnonzero(norms <= NORM_EPS)
    if bad.size:
        raise errors.ZeroNormVector(
            f"{side} vector {int(bad[0])} has norm {norms[bad[0]]:.3g}",
            side=side,
            index=int(bad[0]),
        )
    return x / norms[:, None]


def cosine_cost(a: EmbeddingSet, b: EmbeddingSet) -> CostMatrix:
    """``C[k, m] = 1 - cos(a_k, b_m)``, clipped to ``[0, 2]``.

    Evaluated as ``|u_k - v_m|^2 / 2`` on the unit vectors, which equals
    ``1 - cos`` and is exactly 0 for parallel vectors. The squared
    differences are reduced along the feature axis, so ``cosine_cost(a, b)``
    is bitwise the transpose of ``cosine_cost(b, a)``.
    """
    if a.dimension != b.dimension:
        raise errors.DimensionMismatch(
            f"embedding dimensions differ: {a.dimension} vs {b.dimension}"
        )
    ua = _unit_rows(a.vectors, "a")
    ub = _unit_rows(b.vectors, "b")
    diff = ua[:, None, :] - ub[None, :, :]
    return CostMatrix(np.clip(0.5 * np.sum(diff * diff, axis=2), 0.0, 2.0), "cosine")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _as_cost(cost) -> np.ndarray:
    if isinstance(cost, CostMatrix):
        return cost.entries
    return CostMatrix(cost).entries


def _marginals(c: np.ndarray, mu, nu) -> tuple[np.ndarray, np.ndarray]:
    k, m = c.shape
    mu = np.full(k, 1.0 / k) if mu is None else check_weights(mu, k, "mu")
    nu = np.full(m, 1.0 / m) if nu is None else check_weights(nu, m, "nu")
    return mu, nu


class _Support:
    """Drops zero-weight rows/columns before solving and restores them after."""

    def __init__(self, c, mu, nu):
        self.shape = c.shape
        self.rows = np.flatnonzero(mu > 0)
        self.cols = np.flatnonzero(nu > 0)
        self.cost = np.ascontiguousarray(c[np.ix_(self.rows, self.cols)])
        self.mu = np.ascontiguousarray(mu[self.rows])
        self.nu = np.ascontiguousarray(nu[self.cols])

    def expand(self, plan: np.ndarray) -> np.ndarray:
        full = np.zeros(self.shape)
        full[np.ix_(self.rows, self.cols)] = plan
        return full

    @property
    def forced(self) -> bool:
        # One source or one sink admits exactly one feasible plan.
        return self.cost.shape[0] == 1 or self.cost.shape[1] == 1


def _solution(c, mu, nu, plan, iterations, converged, residual, method, **info) -> OtSolution:
    plan = np.maximum(plan, 0.0)
    tp = TransportPlan(
        _frozen(plan), mu, nu, int(iterations), bool(converged), float(residual)
    )
    return OtSolution(tp, float(np.sum(c * plan)), method, info)


# ---------------------------------------------------------------------------
# Sinkhorn
# ---------------------------------------------------------------------------


def _lam_schedule(c: np.ndarray, lam: float) -> list[float]:
    spread = float(c.max() - c.min())
    steps = []
    eps = spread
    while eps > lam:
        steps.append(eps)
        eps /= 2.0
    steps.append(lam)
    return steps


def sinkhorn_entropic(
    cost,
    mu=None,
    nu=None,
    lam: float = 0.1,
    tol: float = 1e-8,
    max_iter: int = 2000,
    domain: str = "auto",
    polish: bool = True,
) -> OtSolution:
    """Entropic-regularized OT by Sinkhorn scaling.

    Parameters
    ----------
    cost : CostMatrix or array_like, shape (K, M)
    mu, nu : array_like, optional
        Marginals; uniform when omitted.
    lam : float
        Weight of the negative-entropy term ``sum T log T``.
    tol : float
        Stop when the max row/column marginal residual is ``<= tol``.
    max_iter : int
        Iteration cap (per warm-start stage in the log domain).
    domain : {"auto", "exp", "log"}
        ``auto`` picks ``exp`` for ``lam >= 0.05`` and ``log`` otherwise.
    polish : bool
        Log domain only: if scaling stalls above ``tol`` (degenerate
        problems converge very slowly at small ``lam``), finish with Newton
        steps on the dual.

    Returns
    -------
    OtSolution
        ``distance`` is ``<C, T>`` without the entropy term. The plan is
        passed through :func:`round_to_marginals`; ``converged`` and
        ``info['residual_before_rounding']`` describe the scaling itself.
    """
    c = _as_cost(cost)
    mu, nu = _marginals(c, mu, nu)
    if not lam > 0:
        raise errors.ValidationError(f"lambda must be positive, got {lam!r}")
    if max_iter < 1:
        raise errors.ValidationError("max_iter must be >= 1")
    if domain == "auto":
        domain = "exp" if lam >= LOG_DOMAIN_BELOW else "log"
    if domain not in ("exp", "log"):
        raise errors.InvalidPolicy(f"unknown Sinkhorn domain {domain!r}")

    sup = _Support(c, mu, nu)
    if sup.forced:
        plan = sup.expand(np.outer(sup.mu, sup.nu))
        return _solution(c, mu, nu, plan, 0, True, 0.0, "sinkhorn", domain=domain)

    newton_steps = 0
    if domain == "exp":
        kern = np.exp(-sup.cost / lam)
        if (kern == 0).any():
            raise errors.NumericUnderflow(
                f"exp(-C/lambda) underflows at lambda={lam}; use domain='log'"
            )
        plan, iters, residual = kernels.sinkhorn_scaling(kern, sup.mu, sup.nu, tol, max_iter)
        stages = [lam]
    else:
        f = np.zeros(sup.mu.shape[0])
        g = np.zeros(sup.nu.shape[0])
        iters = 0
        stages = _lam_schedule(sup.cost, lam)
        for eps in stages:
            f, g, plan, n, residual = kernels.sinkhorn_log(
                sup.cost, sup.mu, sup.nu, eps, tol, max_iter, f, g
            )
            iters += n
        if residual > tol and polish:
            f, g, plan, newton_steps, residual = _newton_polish(
                sup.cost, sup.mu, sup.nu, lam, f, g, tol
            )
    if not np.isfinite(plan).all():
        raise errors.NumericUnderflow("Sinkhorn scaling produced non-finite values")
    converged = residual <= tol
    if not converged:
        logger.debug("sinkhorn did not reach tol=%g (residual %.3g)", tol, residual)
    # Scaling leaves O(tol) marginal error; rounding makes the plan exactly
    # feasible while moving it by at most twice that error (L1).
    plan = round_to_marginals(plan, sup.mu, sup.nu)
    return _solution(
        c, mu, nu, sup.expand(plan), iters, converged, _residual(plan, sup.mu, sup.nu),
        "sinkhorn", domain=domain, stages=len(stages), newton_steps=newton_steps,
        residual_before_rounding=float(residual),
    )


def _newton_polish(c, a, b, lam, f, g, tol, max_steps=50):
    """Newton ascent on the entropic dual, gauge fixed by ``g[-1]``.

    The Jacobian of the marginal map is ``[[diag(r), P], [P^T, diag(s)]] / lam``;
    steps are backtracked until the max marginal residual decreases.
    """
    k, m = c.shape

    def state(f, g):
        p = np.exp((f[:, None] + g[None, :] - c) / lam)
        grad = np.concatenate([a - p.sum(axis=1), b - p.sum(axis=0)])
        return p, grad, float(np.abs(grad).max())

    p, grad, res = state(f, g)
    steps = 0
    while res > tol and steps < max_steps:
        steps += 1
        jac = np.zeros((k + m, k + m))
        jac[:k, :k] = np.diag(p.sum(axis=1))
        jac[k:, k:] = np.diag(p.sum(axis=0))
        jac[:k, k:] = p
        jac[k:, :k] = p.T
        jac /= lam
        step = np.zeros(k + m)
        step[:-1] = np.linalg.lstsq(jac[:-1, :-1], grad[:-1], rcond=None)[0]
        t = 1.0
        while t > 1e-10:
            f_new, g_new = f + t * step[:k], g + t * step[k:]
            p_new, grad_new, res_new = state(f_new, g_new)
            if res_new < res:
                break
            t /= 2.0
        else:
            break
        f, g, p, grad, res = f_new, g_new, p_new, grad_new, res_new
    return f, g, p, steps, res


def entropic_objective(cost, plan: np.ndarray, lam: float) -> float:
    """``<C, T> + lam * sum T log T`` with ``0 log 0 = 0``."""
    c = _as_cost(cost)
    p = np.asarray(plan, dtype=np.float64)
    pos = p > 0
    return float(np.sum(c * p) + lam * np.sum(p[pos] * np.log(p[pos])))


# ---------------------------------------------------------------------------
# proximal-point iteration
# ---------------------------------------------------------------------------


def ipot_transport(
    cost,
    mu=None,
    nu=None,
    beta: float = 0.5,
    outer_iters: int = 200,
    inner_iters: int = 1,
    stop_tol: float = 1e-10,
    marginal_tol: float = 1e-9,
) -> OtSolution:
    """Proximal-point OT on a cost matrix.

    Starts from the uniform plan and ``sigma = 1/M``; each outer step forms
    ``Q = exp(-C/beta) * T``, runs ``inner_iters`` rounds of
    ``delta = mu / (Q sigma)``, ``sigma = nu / (Q^T delta)`` and sets
    ``T = diag(delta) Q diag(sigma)``. Stops early once the plan moves by
    less than ``stop_tol`` (max-norm). With few inner rounds the last
    iterate can miss the row marginals slightly, so it is finished with
    :func:`round_to_marginals`; ``info['residual_before_rounding']`` keeps
    the raw residual.
    """
    c = _as_cost(cost)
    mu, nu = _marginals(c, mu, nu)
    if not beta > 0:
        raise errors.ValidationError(f"beta must be positive, got {beta!r}")
    if outer_iters < 1 or inner_iters < 1:
        raise errors.ValidationError("outer_iters and inner_iters must be >= 1")

    sup = _Support(c, mu, nu)
    if sup.forced:
        plan = sup.expand(np.outer(sup.mu, sup.nu))
        return _solution(c, mu, nu, plan, 0, True, 0.0, "ipot", stopped_early=True)

    with np.errstate(under="ignore"):
        gibbs = np.exp(-sup.cost / beta)
    tiny = np.finfo(np.float64).tiny
    if (gibbs < tiny).any():
        raise errors.NumericUnderflow(
            f"exp(-C/beta) underflows for beta={beta}: "
            f"max cost {sup.cost.max():.3g} gives kernel entries below {tiny:.3g}",
            beta=beta,
        )
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        plan, iters, stopped = kernels.ipot(
            gibbs, sup.mu, sup.nu, outer_iters, inner_iters, stop_tol
        )
    if not np.isfinite(plan).all():
        raise errors.NumericUnderflow(
            "proximal scaling produced non-finite values (a row or column vanished)",
            beta=beta,
        )
    pre_residual = _residual(plan, sup.mu, sup.nu)
    plan = round_to_marginals(plan, sup.mu, sup.nu)
    residual = _residual(plan, sup.mu, sup.nu)
    return _solution(
        c, mu, nu, sup.expand(plan), iters, residual <= marginal_tol, residual, "ipot",
        stopped_early=bool(stopped),
        residual_before_rounding=pre_residual,
    )


def round_to_marginals(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Move an approximate plan onto the transportation polytope in one pass.

    Rows, then columns, are scaled down where they exceed their marginal and
    the leftover mass is added back as a rank-one term. The L1 change is at
    most twice the L1 marginal violation of the input.
    """
    p = np.maximum(np.asarray(plan, dtype=np.float64), 0.0)
    rows = p.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(rows > a, a / rows, 1.0)
    p = p * x[:, None]
    cols = p.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(cols > b, b / cols, 1.0)
    p = p * y[None, :]
    err_r = np.maximum(a - p.sum(axis=1), 0.0)
    err_c = np.maximum(b - p.sum(axis=0), 0.0)
    total = err_c.sum()
    if total > 0:
        p = p + np.outer(err_r, err_c) / total
    return p


def _residual(plan, a, b) -> float:
    return float(max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max()))


def ipot_align_distance(
    a: EmbeddingSet,
    b: EmbeddingSet,
    beta: float = 0.5,
    outer_iters: int = 200,
    inner_iters: int = 1,
    **kwargs,
) -> OtSolution:
    """Alignment distance between two embedding sets under cosine cost."""
    return ipot_transport(
        cosine_cost(a, b), a.weights, b.weights, beta, outer_iters, inner_iters, **kwargs
    )


# ---------------------------------------------------------------------------
# exact LP
# ---------------------------------------------------------------------------


def lp_oracle(cost, mu=None, nu=None) -> OtSolution:
    """Exact OT value by the transportation LP (HiGHS dual simplex).

    Guarded to ``K * M <= 400``; meant for verification only.
    """
    from scipy.optimize import linprog

    c = _as_cost(cost)
    if c.size > LP_MAX_CELLS:
        raise errors.TooLarge(
            f"lp_oracle is limited to K*M <= {LP_MAX_CELLS}, got {c.shape[0]}x{c.shape[1]}"
        )
    mu, nu = _marginals(c, mu, nu)
    sup = _Support(c, mu, nu)
    k, m = sup.cost.shape
    a_eq = np.zeros((k + m, k * m))
    for i in range(k):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[k + j, j::m] = 1.0
    b_eq = np.concatenate([sup.mu, sup.nu])
    res = linprog(sup.cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise errors.RuntimeFailure(f"LP solver failed: {res.message}")
    plan = sup.expand(np.maximum(res.x.reshape(k, m), 0.0))
    residual = _residual(plan, mu, nu)
    return _solution(c, mu, nu, plan, int(res.nit), True, residual, "lp")


# ---------------------------------------------------------------------------
# candidate grids
# ---------------------------------------------------------------------------


def pairwise_alignment_matrix(
    keyframes: list[EmbeddingSet],
    sentences: list[EmbeddingSet],
    config: SolverConfig | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Distance between every keyframe set and every sentence set.

    Cells are independent, so ``workers > 1`` evaluates them on a thread pool
    (the compiled kernels release the GIL) with identical results.
    """
    config = config or SolverConfig()
    if not keyframes or not sentences:
        raise errors.EmptyInput(
            f"need at least one candidate per side, got {len(keyframes)} keyframe and "
            f"{len(sentences)} sentence sets"
        )

    def cell(ij):
        i, j = ij
        try:
            return config.solve(keyframes[i], sentences[j]).distance
        except errors.MMSummError as exc:
            raise errors.SolverError(f"cell ({i}, {j}): {exc}", i=i, j=j, cause=exc.code) from exc

    cells = [(i, j) for i in range(len(keyframes)) for j in range(len(sentences))]
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(cell, cells))
    else:
        values = [cell(ij) for ij in cells]
    return np.array(values, dtype=np.float64).reshape(len(keyframes), len(sentences))


def argmin_pair(distances: np.ndarray) -> tuple[int, int]:
    """Index of the smallest entry; ties go to the lexicographically first (i, j)."""
    d = np.asarray(distances)
    flat = int(np.argmin(d))
    return divmod(flat, d.shape[1])
