"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on identical inputs with both backends; the table reports the
best-of-``repeat`` wall time and the speedup. Plans are compared so a fast but
wrong kernel shows up as a mismatch.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from mmsumm import kernels


def cases(rng):
    k, m = 10, 10
    cost = rng.uniform(0, 2, size=(k, m))
    a = rng.dirichlet(np.ones(k))
    b = rng.dirichlet(np.ones(m))
    z = (np.zeros(k), np.zeros(m))
    x = rng.integers(0, 50, size=400).astype(np.int64)
    y = rng.integers(0, 50, size=400).astype(np.int64)
    big = rng.uniform(0, 2, size=(60, 60))
    ua, ub = np.full(60, 1 / 60), np.full(60, 1 / 60)
    return {
        "sinkhorn_scaling 10x10 lam=0.1": ("sinkhorn_scaling", (np.exp(-cost / 0.1), a, b, 1e-10, 5000)),
        "sinkhorn_log 10x10 lam=0.01": ("sinkhorn_log", (cost, a, b, 0.01, 1e-9, 20000, *z)),
        "ipot 10x10 N=200": ("ipot", (np.exp(-cost / 0.5), a, b, 200, 1, 0.0)),
        "ipot 60x60 N=200": ("ipot", (np.exp(-big / 0.5), ua, ub, 200, 1, 0.0)),
        "lcs 400x400": ("lcs_length", (x, y)),
    }


def best_time(fn, args, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def first_array(out):
    if isinstance(out, tuple):
        for v in out:
            if isinstance(v, np.ndarray) and v.ndim == 2:
                return v
    return np.asarray(out, dtype=float)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels are not built; only the python backend is available")
    rows = []
    for name, (fn_name, fargs) in cases(np.random.default_rng(args.seed)).items():
        times, outs = {}, {}
        for be in backends:
            fn = getattr(kernels.backend_module(be), fn_name)
            times[be], outs[be] = best_time(fn, fargs, args.repeat)
        row = {"case": name, **{f"{be}_s": t for be, t in times.items()}}
        if len(backends) == 2:
            row["speedup"] = times["python"] / times["compiled"]
            row["max_abs_diff"] = float(np.abs(first_array(outs["python"]) - first_array(outs["compiled"])).max())
        rows.append(row)

    head = f"{'case':34s}" + "".join(f"{be + ' ms':>14s}" for be in backends)
    if len(backends) == 2:
        head += f"{'speedup':>10s}{'max diff':>12s}"
    print(head)
    for r in rows:
        line = f"{r['case']:34s}" + "".join(f"{1e3 * r[be + '_s']:14.3f}" for be in backends)
        if "speedup" in r:
            line += f"{r['speedup']:10.1f}{r['max_abs_diff']:12.1e}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
