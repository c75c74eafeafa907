"""Benchmark the numba IRLS/bootstrap kernels against the pure-numpy fallback.

The fallback is selected by re-running this script in a subprocess with
``PERTURBKIT_NO_NUMBA=1`` so both variants measure a fresh import.  Usage::

    python3 benchmarks/bench_irls.py [--rows 4000] [--clusters 200] [--b 400]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def make_problem(rows: int, clusters: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        np.ones(rows),
        rng.integers(0, 2, size=rows).astype(float),
        rng.integers(0, 2, size=rows).astype(float),
    ])
    X = np.column_stack([X, X[:, 1] * X[:, 2]])
    beta_true = np.array([0.4, -0.6, 0.2, -0.3])
    p = 1.0 / (1.0 + np.exp(-(X @ beta_true)))
    y = (rng.random(rows) < p).astype(float)
    row_cluster = rng.integers(0, clusters, size=rows)
    return X, y, row_cluster


def run_once(rows: int, clusters: int, B: int) -> dict:
    from perturbkit import kernels

    X, y, row_cluster = make_problem(rows, clusters)

    # warm-up includes any JIT compilation; timed separately
    t0 = time.perf_counter()
    kernels.fit_irls(X, y)
    warmup = time.perf_counter() - t0

    reps = 20
    t0 = time.perf_counter()
    for _ in range(reps):
        beta, se, *_ = kernels.fit_irls(X, y)
    fit_ms = (time.perf_counter() - t0) / reps * 1e3

    t0 = time.perf_counter()
    betas = kernels.bootstrap_refit(X, y, row_cluster, clusters, B, seed=1)
    boot_s = time.perf_counter() - t0

    return {
        "backend": "numba" if kernels.USE_NUMBA else "numpy",
        "rows": rows, "clusters": clusters, "B": B,
        "warmup_s": round(warmup, 4),
        "fit_ms": round(fit_ms, 4),
        "bootstrap_s": round(boot_s, 4),
        "beta": [round(float(b), 6) for b in beta],
        "boot_mean": [round(float(m), 6) for m in betas.mean(axis=0)],
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=4000)
    ap.add_argument("--clusters", type=int, default=200)
    ap.add_argument("--b", type=int, default=400)
    ap.add_argument("--emit-json", action="store_true",
                    help="print one JSON result for this process only")
    args = ap.parse_args()

    if args.emit_json:
        print(json.dumps(run_once(args.rows, args.clusters, args.b)))
        return 0

    results = []
    for env_flag in ("0", "1"):
        env = dict(os.environ, PERTURBKIT_NO_NUMBA=env_flag)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--rows", str(args.rows), "--clusters", str(args.clusters),
             "--b", str(args.b), "--emit-json"],
            env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))

    numba_r, numpy_r = results
    print(f"problem: rows={args.rows} clusters={args.clusters} B={args.b}")
    print(f"{'backend':<8} {'warmup_s':>9} {'fit_ms':>9} {'bootstrap_s':>12}")
    for r in results:
        print(f"{r['backend']:<8} {r['warmup_s']:>9.4f} "
              f"{r['fit_ms']:>9.4f} {r['bootstrap_s']:>12.4f}")
    if numpy_r["fit_ms"] > 0:
        print(f"speedup (steady-state fit): "
              f"{numpy_r['fit_ms'] / numba_r['fit_ms']:.1f}x")
    if numpy_r["bootstrap_s"] > 0:
        print(f"speedup (bootstrap):        "
              f"{numpy_r['bootstrap_s'] / numba_r['bootstrap_s']:.1f}x")
    same = np.allclose(numba_r["beta"], numpy_r["beta"], atol=1e-10)
    print(f"coefficients agree across backends: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
