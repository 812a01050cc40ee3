"""Seeded solver-versus-LP agreement check (the ``oracle-check`` command)."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import rng
from .ot import EmbeddingSet, cosine_cost, ipot_align_distance, lp_oracle, sinkhorn_entropic


@dataclass(frozen=True)
class OracleSettings:
    trials: int = 100
    seed: int = 0
    max_size: int = 10
    dim: int = 8
    beta: float = 0.5
    outer_iters: int = 200
    inner_iters: int = 1
    lam: float = 0.01
    gap_tol: float = 5e-2
    residual_tol: float = 1e-6


def random_instances(trials: int, seed: int, max_size: int = 10, dim: int = 8):
    """Yield ``(a, b)`` pairs of unit-vector sets with 1..max_size rows each."""
    g = rng.stream(seed, "oracle-check")
    for _ in range(trials):
        k, m = (int(v) for v in g.integers(1, max_size + 1, size=2))
        x = g.normal(size=(k, dim))
        y = g.normal(size=(m, dim))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        yield EmbeddingSet(x), EmbeddingSet(y)


def run_oracle_check(s: OracleSettings) -> dict:
    rows = []
    t0 = time.perf_counter()
    for a, b in random_instances(s.trials, s.seed, s.max_size, s.dim):
        cost = cosine_cost(a, b)
        exact = lp_oracle(cost, a.weights, b.weights).distance
        ip = ipot_align_distance(a, b, s.beta, s.outer_iters, s.inner_iters)
        sk = sinkhorn_entropic(cost, a.weights, b.weights, s.lam)
        rows.append({
            "shape": [len(a), len(b)],
            "lp": exact,
            "ipot": ip.distance,
            "sinkhorn": sk.distance,
            "ipot_gap": abs(ip.distance - exact),
            "sinkhorn_gap": abs(sk.distance - exact),
            "ipot_residual": ip.plan.marginal_residual(),
            "sinkhorn_residual": sk.plan.marginal_residual(),
        })
    elapsed = time.perf_counter() - t0
    worst = {key: max((r[key] for r in rows), default=0.0)
             for key in ("ipot_gap", "sinkhorn_gap", "ipot_residual", "sinkhorn_residual")}
    passed = (worst["ipot_gap"] <= s.gap_tol and worst["sinkhorn_gap"] <= s.gap_tol
              and worst["ipot_residual"] <= s.residual_tol
              and worst["sinkhorn_residual"] <= s.residual_tol)
    return {"passed": passed, "worst": worst, "trials": rows, "elapsed": elapsed}
