"""Brute-force references.

These deliberately take different numerical routes from the main code (LU
inversion instead of Cholesky plus downdates, analytic covariances instead of
sampled Gram matrices) so that agreement between the two means something.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError, RankDeficiencyError, ShapeError
from .graph_sim import WeightedDag


@dataclass
class PopulationModel:
    b_star: WeightedDag
    omega: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_dag(cls, b_star: WeightedDag, omega) -> "PopulationModel":
        omega = np.broadcast_to(np.asarray(omega, dtype=float), (b_star.dim,)).copy()
        return cls(b_star, omega, population_covariance(b_star, omega))


def dense_inverse(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"need a square matrix, got {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12 * max(np.abs(M).max(), 1.0)):
        raise NumericalError("matrix is not symmetric")
    if np.linalg.eigvalsh(M)[0] <= 0:
        raise NumericalError("matrix is not positive definite")
    return np.linalg.inv(M)


def population_covariance(b_star: WeightedDag, omega) -> np.ndarray:
    """Exact ``Cov(x) = A diag(omega) A^T`` with ``A = (I - B^T)^{-1}``."""
    d = b_star.dim
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (d,))
    if np.any(omega <= 0):
        raise ValueError("noise variances must be positive")
    p = b_star.topo_order
    Bp = b_star.weights[np.ix_(p, p)]
    # in topological indexing I - B^T is unit lower triangular
    A = solve_triangular(np.eye(d) - Bp.T, np.eye(d), lower=True, unit_diagonal=True)
    sig_p = (A * omega[p]) @ A.T
    sigma = np.empty((d, d))
    sigma[np.ix_(p, p)] = sig_p
    return sigma


def population_recover(model: PopulationModel, order=None) -> np.ndarray:
    """Per-variable OLS on predecessors, computed from the analytic covariance.

    ``order`` defaults to the model's own topological order; passing a wrong
    one shows what an ordering mistake does to the population solution.
    Returns weights in original indexing (``B[j, i]`` for ``j -> i``).
    """
    sigma = model.sigma
    d = sigma.shape[0]
    perm = model.b_star.topo_order if order is None else np.asarray(getattr(order, "perm", order), dtype=int)
    B = np.zeros((d, d))
    for k in range(1, d):
        pre, j = perm[:k], perm[k]
        S = sigma[np.ix_(pre, pre)]
        if np.linalg.matrix_rank(S) < k:
            raise RankDeficiencyError(f"predecessor covariance of variable {j} is singular", column=int(j))
        B[pre, j] = np.linalg.solve(S, sigma[pre, j])
    return B


def brute_shd(pred: np.ndarray, truth: np.ndarray) -> int:
    """Edit count from explicit edge sets: reversals once, then additions and deletions."""
    P = {(i, j) for i, j in zip(*np.nonzero(pred)) if i != j}
    T = {(i, j) for i, j in zip(*np.nonzero(truth)) if i != j}
    count = 0
    pairs = {frozenset(e) for e in P | T}
    for pair in pairs:
        i, j = sorted(pair)
        if ((i, j) in P, (j, i) in P) != ((i, j) in T, (j, i) in T):
            count += 1
    return count


def brute_order_divergence(perm, truth: np.ndarray) -> int:
    perm = list(perm)
    total = 0
    for a in range(len(perm)):
        for b in range(a):
            # perm[b] is placed before perm[a]; an edge perm[a] -> perm[b] is violated
            if truth[perm[a], perm[b]] != 0:
                total += 1
    return total


def run_battery(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Oracle checks used by ``triopt selftest``; returns (name, passed, detail)."""
    from . import stein_order, tri_opt
    from .graph_sim import gen_er_dag, sample_weights
    from .metrics import order_divergence

    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 21))
        Y = rng.normal(size=(n, n + 2))
        A = Y @ Y.T / n + 0.9 * np.eye(n)
        z = rng.normal(size=n)
        t = rng.uniform(0.05, 0.95)
        u = z * np.sqrt(t / (z @ np.linalg.solve(A, z)))
        state = stein_order.KernelState(stein_order.spd_inverse(A), list(range(n)))
        stein_order.sm_downdate(state, u)
        ref = dense_inverse(A - np.outer(u, u))
        worst = max(worst, np.linalg.norm(state.kinv - ref) / np.linalg.norm(ref))
    results.append(("sm_downdate == dense inverse", worst < 1e-9, f"max rel err {worst:.2e}"))

    worst = 0.0
    for k in range(20):
        d = int(rng.integers(2, 9))
        dag = sample_weights(gen_er_dag(d, 2, seed + k), 1.0, seed + 100 + k)
        omega = rng.uniform(0.5, 2.0, size=d)
        model = PopulationModel.from_dag(dag, omega)
        worst = max(worst, float(np.abs(population_recover(model) - dag.weights).max()))
    results.append(("population OLS recovers B*", worst < 1e-10, f"max abs err {worst:.2e}"))

    worst = 0.0
    for k in range(20):
        d = int(rng.integers(2, 9))
        dag = sample_weights(gen_er_dag(d, 2, seed + 200 + k), 1.0, seed + 300 + k)
        model = PopulationModel.from_dag(dag, rng.uniform(0.5, 2.0, size=d))
        p = dag.topo_order
        W = tri_opt.closed_form_solve(tri_opt.GramSummary.from_covariance(model.sigma[np.ix_(p, p)]))
        B = tri_opt.unpermute(W, stein_order.CausalOrder(p)).weights
        worst = max(worst, float(np.abs(B - dag.weights).max()))
    results.append(("closed form on exact Gram recovers B*", worst < 1e-10, f"max abs err {worst:.2e}"))

    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 12))
        X = rng.normal(size=(50, d))
        gs = tri_opt.gram(X)
        cfg = tri_opt.OptConfig(lam=float(rng.uniform(0, 0.1)), epsilon=float(rng.uniform(1e-3, 1e-1)))
        W = np.triu(rng.normal(size=(d, d)), 1)
        g = tri_opt.gradient(W, gs, cfg)
        h = 1e-5
        for i, j in zip(*np.nonzero(tri_opt.upper_mask(d))):
            E = np.zeros((d, d))
            E[i, j] = h
            fd = (tri_opt.objective(W + E, gs, cfg) - tri_opt.objective(W - E, gs, cfg)) / (2 * h)
            worst = max(worst, abs(fd - g[i, j]) / max(abs(g[i, j]), 1.0))
    results.append(("gradient == finite differences", worst < 1e-5, f"max rel err {worst:.2e}"))

    worst = 0
    for k in range(20):
        d = int(rng.integers(2, 7))
        A = gen_er_dag(d, 2, seed + 400 + k).weights
        perm = rng.permutation(d)
        worst = max(worst, abs(order_divergence(perm, A) - brute_order_divergence(perm, A)))
    results.append(("order divergence == pair scan", worst == 0, f"max diff {worst}"))
    return results
