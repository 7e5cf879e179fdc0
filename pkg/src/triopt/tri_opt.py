"""Structure learning under a fixed causal order.

Once the data columns are arranged ancestors-first, every admissible weight
matrix is strictly upper triangular, so the least-squares problem

    min_W  1/2 Tr(W^T G W) - Tr(G W) + 1/2 Tr(G) + lam * sum_{i<j} sqrt(W_ij^2 + eps^2)

with ``G = X^T X / n`` is convex and needs no acyclicity constraint.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConstraintViolationError, DivergenceError, RankDeficiencyError, ShapeError
from .graph_sim import DataMatrix, WeightedDag
from .stein_order import CausalOrder

log = logging.getLogger(__name__)


@dataclass
class OptConfig:
    lam: float = 0.001
    epsilon: float = 1e-4
    max_iter: int = 100
    w_threshold: float = 0.3
    tol: float = 1e-8
    # "newton" (column-wise damped Newton) or "pgd" (projected gradient)
    method: str = "newton"
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.method not in ("newton", "pgd"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class GramSummary:
    gram: np.ndarray
    trace_g: float

    @classmethod
    def from_covariance(cls, sigma: np.ndarray) -> "GramSummary":
        sigma = np.asarray(sigma, dtype=float)
        return cls(sigma, float(np.trace(sigma)))

    @property
    def d(self) -> int:
        return self.gram.shape[0]


@dataclass
class OptResult:
    W: np.ndarray
    objectives: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def upper_mask(d: int) -> np.ndarray:
    return np.triu(np.ones((d, d), dtype=bool), k=1)


def _values(X) -> np.ndarray:
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def permute_data(X, order: CausalOrder) -> DataMatrix:
    """Columns rearranged so that column ``k`` is variable ``order.perm[k]``."""
    values = _values(X)
    perm = order.perm if isinstance(order, CausalOrder) else np.asarray(order, dtype=int)
    if len(perm) != values.shape[1]:
        raise ShapeError(f"order has length {len(perm)} but data has {values.shape[1]} columns")
    centered = X.centered if isinstance(X, DataMatrix) else False
    return DataMatrix(values[:, perm], centered=centered)


def gram(X) -> GramSummary:
    values = _values(X)
    G = values.T @ values / values.shape[0]
    G = 0.5 * (G + G.T)
    return GramSummary(G, float(np.trace(G)))


def _check_mask(W: np.ndarray) -> None:
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeError(f"W must be square, got {W.shape}")
    if np.any(np.tril(W)):
        raise ConstraintViolationError("W has nonzero entries on or below the diagonal")


def _charbonnier(W: np.ndarray, eps: float) -> float:
    w = W[upper_mask(W.shape[0])]
    return float(np.sum(np.sqrt(w * w + eps * eps)))


def objective(W: np.ndarray, gs: GramSummary, cfg: OptConfig) -> float:
    W = np.asarray(W, dtype=float)
    _check_mask(W)
    G = gs.gram
    GW = G @ W
    quad = 0.5 * np.sum(W * GW) - np.trace(GW) + 0.5 * gs.trace_g
    return float(quad + cfg.lam * _charbonnier(W, cfg.epsilon))


def gradient(W: np.ndarray, gs: GramSummary, cfg: OptConfig) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    G = gs.gram
    grad = G @ W - G + cfg.lam * W / np.sqrt(W * W + cfg.epsilon**2)
    grad[~upper_mask(W.shape[0])] = 0.0
    return grad


# Column j of W only couples to the leading j x j block of G, so the objective
# splits into d independent smooth strictly convex problems (for lam > 0).

def _column_objective(w, Gjj, gj, lam, eps):
    return 0.5 * w @ Gjj @ w - gj @ w + lam * np.sum(np.sqrt(w * w + eps * eps))


def _newton(gs: GramSummary, cfg: OptConfig) -> OptResult:
    G = gs.gram
    d = gs.d
    W = np.zeros((d, d))
    lam, eps = cfg.lam, cfg.epsilon
    col_obj = np.zeros(d)
    for j in range(1, d):
        col_obj[j] = _column_objective(W[:j, j], G[:j, :j], G[:j, j], lam, eps)
    base = 0.5 * gs.trace_g
    history = [base + float(col_obj.sum())]
    active = np.ones(d, dtype=bool)
    active[0] = False
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        for j in np.flatnonzero(active):
            Gjj, gj, w = G[:j, :j], G[:j, j], W[:j, j]
            s = np.sqrt(w * w + eps * eps)
            g = Gjj @ w - gj + lam * w / s
            H = Gjj + np.diag(lam * eps * eps / s**3)
            try:
                step = -cho_solve(cho_factor(H, check_finite=False), g, check_finite=False)
            except (LinAlgError, ValueError):
                step = -np.linalg.lstsq(H, g, rcond=None)[0]
            slope = float(g @ step)
            if slope >= 0:
                step, slope = -g, -float(g @ g)
            f0 = col_obj[j]
            t = 1.0
            for _ in range(cfg.max_backtracks):
                cand = w + t * step
                f1 = _column_objective(cand, Gjj, gj, lam, eps)
                if f1 <= f0 + cfg.armijo_c * t * slope:
                    break
                t *= cfg.backtrack
            else:
                active[j] = False
                continue
            if not np.isfinite(f1):
                raise DivergenceError(f"non-finite objective at iteration {it}", iteration=it)
            W[:j, j] = cand
            col_obj[j] = f1
            if f0 - f1 <= cfg.tol * max(abs(f0), 1e-12):
                active[j] = False
        history.append(base + float(col_obj.sum()))
        prev, cur = history[-2], history[-1]
        if not np.isfinite(cur):
            raise DivergenceError(f"non-finite objective at iteration {it}", iteration=it)
        if not active.any() or prev - cur <= cfg.tol * max(abs(prev), 1e-12):
            converged = True
            break
    return OptResult(W, history, it, converged)


def _pgd(gs: GramSummary, cfg: OptConfig) -> OptResult:
    d = gs.d
    mask = upper_mask(d)
    W = np.zeros((d, d))
    f = objective(W, gs, cfg)
    history = [f]
    # 1 / Lipschitz bound of the smooth part as the first trial step
    L = float(np.linalg.eigvalsh(gs.gram)[-1]) + cfg.lam / cfg.epsilon
    t0 = 1.0 / max(L, 1e-12)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        g = gradient(W, gs, cfg)
        gg = float(np.sum(g * g))
        if gg == 0.0:
            converged = True
            break
        t = t0 * 4.0
        for _ in range(cfg.max_backtracks):
            cand = (W - t * g) * mask
            fc = objective(cand, gs, cfg)
            if fc <= f - cfg.armijo_c * t * gg:
                break
            t *= cfg.backtrack
        else:
            converged = True
            break
        if not np.isfinite(fc):
            raise DivergenceError(f"non-finite objective at iteration {it}", iteration=it)
        W, f_prev, f = cand, f, fc
        history.append(f)
        if f_prev - f <= cfg.tol * max(abs(f_prev), 1e-12):
            converged = True
            break
    return OptResult(W, history, it, converged)


def optimize_gram(gs: GramSummary, cfg: OptConfig | None = None) -> OptResult:
    cfg = cfg or OptConfig()
    if gs.d == 1:
        return OptResult(np.zeros((1, 1)), [0.5 * gs.trace_g], 0, True)
    res = _newton(gs, cfg) if cfg.method == "newton" else _pgd(gs, cfg)
    log.debug("optimize: %d iterations, objective %.6g", res.iterations, res.objectives[-1])
    return res


def optimize(Xpi: DataMatrix, cfg: OptConfig | None = None, full: bool = False):
    """Minimise the masked objective on ordered, centered data.

    Returns the strictly upper triangular estimate, or the whole ``OptResult``
    (objective trace, iteration count) when ``full`` is set.
    """
    if not isinstance(Xpi, DataMatrix) or not Xpi.centered:
        raise ValueError("optimize needs centered data; call stein_order.center first")
    if Xpi.d < 1:
        raise ShapeError("need at least one variable")
    res = optimize_gram(gram(Xpi), cfg)
    return res if full else res.W


def threshold(W: np.ndarray, w_threshold: float) -> np.ndarray:
    W = np.array(W, dtype=float)
    W[np.abs(W) < w_threshold] = 0.0
    return W


def unpermute(Wpi: np.ndarray, order: CausalOrder) -> WeightedDag:
    """Map an ordered estimate back to the original variable indices."""
    perm = order.perm if isinstance(order, CausalOrder) else np.asarray(order, dtype=int)
    d = len(perm)
    B = np.zeros((d, d))
    B[np.ix_(perm, perm)] = Wpi
    return WeightedDag(B, perm.copy())


def closed_form_solve(X) -> np.ndarray:
    """Unpenalised per-column least squares on ordered data (or a GramSummary).

    Column ``j`` holds the regression of variable ``j`` on variables ``0..j-1``.
    """
    gs = X if isinstance(X, GramSummary) else gram(X)
    G = gs.gram
    d = gs.d
    W = np.zeros((d, d))
    scale = float(np.max(np.diag(G))) if d else 0.0
    for j in range(1, d):
        try:
            c = cho_factor(G[:j, :j], check_finite=False)
        except LinAlgError:
            c = None
        if c is None or np.min(np.abs(np.diag(c[0]))) ** 2 <= 1e-12 * max(scale, 1e-300):
            raise RankDeficiencyError(f"predecessor Gram block of column {j} is singular", column=j)
        W[:j, j] = cho_solve(c, G[:j, j], check_finite=False)
    return W
