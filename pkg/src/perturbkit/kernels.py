"""Numeric hot loops: logistic IRLS and bootstrap refits.

Kernels are compiled with numba's @njit by default; setting the
environment variable ``PERTURBKIT_NO_NUMBA=1`` selects a pure-numpy
fallback with identical semantics (see benchmarks/bench_irls.py for the
speed comparison).
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("PERTURBKIT_NO_NUMBA", "0") not in ("1", "true", "yes")

MAX_ITER = 100
GRAD_TOL = 1e-10
SEPARATION_BETA = 15.0


def _irls_impl(X, y, max_iter, tol):
    n, p = X.shape
    beta = np.zeros(p)
    converged = False
    iterations = 0
    for it in range(max_iter):
        iterations = it + 1
        eta = X @ beta
        # clip to keep exp() finite; separation is flagged on |beta| instead
        eta = np.minimum(np.maximum(eta, -30.0), 30.0)
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        w = np.maximum(w, 1e-12)
        grad = X.T @ (y - mu)
        gnorm = np.sqrt(np.sum(grad * grad))
        if gnorm < tol:
            converged = True
            break
        XtWX = (X.T * w) @ X
        # ridge jitter keeps the solve well-posed near separation
        for j in range(p):
            XtWX[j, j] += 1e-12
        beta = beta + np.linalg.solve(XtWX, grad)
    eta = np.minimum(np.maximum(X @ beta, -30.0), 30.0)
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = np.maximum(mu * (1.0 - mu), 1e-12)
    XtWX = (X.T * w) @ X
    for j in range(p):
        XtWX[j, j] += 1e-12
    cov = np.linalg.inv(XtWX)
    se = np.sqrt(np.diag(cov))
    return beta, se, iterations, converged


def _gather_rows_impl(X, y, clusters, cluster_starts, cluster_order, out_X, out_y):
    pos = 0
    for ci in range(cluster_order.shape[0]):
        c = cluster_order[ci]
        start = cluster_starts[c]
        end = cluster_starts[c + 1]
        for r in range(start, end):
            row = clusters[r]
            for j in range(X.shape[1]):
                out_X[pos, j] = X[row, j]
            out_y[pos] = y[row]
            pos += 1
    return pos


if USE_NUMBA:
    from numba import njit

    irls = njit(cache=True)(_irls_impl)
    _gather_rows = njit(cache=True)(_gather_rows_impl)
else:
    irls = _irls_impl
    _gather_rows = _gather_rows_impl


def fit_irls(X: np.ndarray, y: np.ndarray,
             max_iter: int = MAX_ITER, tol: float = GRAD_TOL):
    """IRLS logistic fit.  Returns (beta, se, iterations, converged, separated)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    beta, se, iterations, converged = irls(X, y, max_iter, tol)
    separated = bool(np.any(np.abs(beta) > SEPARATION_BETA)) or not converged
    return beta, se, iterations, converged, separated


def bootstrap_refit(X: np.ndarray, y: np.ndarray, row_cluster: np.ndarray,
                    n_clusters: int, B: int, seed: int,
                    max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> np.ndarray:
    """Cluster bootstrap: resample clusters with replacement, refit, return
    a (B, p) matrix of coefficient estimates.  Replicate b uses the RNG
    substream derived from (seed, b)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    order = np.argsort(row_cluster, kind="stable")
    sorted_clusters = row_cluster[order]
    starts = np.searchsorted(sorted_clusters, np.arange(n_clusters + 1))
    cluster_sizes = np.diff(starts)
    max_rows = int(cluster_sizes.max()) * n_clusters
    out_X = np.empty((max_rows, X.shape[1]))
    out_y = np.empty(max_rows)
    betas = np.empty((B, X.shape[1]))
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, b]))
        picked = rng.integers(0, n_clusters, size=n_clusters)
        n_used = _gather_rows(X, y, order.astype(np.int64),
                              starts.astype(np.int64),
                              picked.astype(np.int64), out_X, out_y)
        beta, _, _, _ = irls(out_X[:n_used], out_y[:n_used], max_iter, tol)
        betas[b] = beta
    return betas
