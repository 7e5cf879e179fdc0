"""Graph recovery metrics and causal-order perturbations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidFractionError, ShapeError
from .graph_sim import WeightedDag
from .stein_order import CausalOrder

PERTURB_KINDS = ("random_shuffle", "block_reversal", "adjacent_swap", "ancestor_swap", "hub_swap")


@dataclass
class BinaryGraph:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"adjacency must be square, got {a.shape}")
        self.adjacency = (a != 0).astype(np.int8)
        np.fill_diagonal(self.adjacency, 0)

    @property
    def dim(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]


@dataclass
class PerturbSpec:
    kind: str
    fraction: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURB_KINDS:
            raise ValueError(f"unknown perturbation {self.kind!r}; expected one of {PERTURB_KINDS}")
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidFractionError(f"fraction must lie in [0, 1], got {self.fraction}")

    def count(self, d: int) -> int:
        # tolerate float noise such as 0.07 * 100 = 7.000000000000001
        return int(math.ceil(round(self.fraction * d, 9)))


def _graph(g) -> BinaryGraph:
    if isinstance(g, BinaryGraph):
        return g
    if isinstance(g, WeightedDag):
        return BinaryGraph(g.weights)
    return BinaryGraph(np.asarray(g))


def binarize(dag) -> BinaryGraph:
    return _graph(dag)


def _same_dim(a: BinaryGraph, b: BinaryGraph) -> None:
    if a.dim != b.dim:
        raise ShapeError(f"graph sizes differ: {a.dim} vs {b.dim}")


def shd(pred, truth) -> dict:
    """Structural Hamming distance; a reversed edge counts as one operation.

    Every unordered pair whose edge state (none, i->j, j->i, both) differs
    between the graphs costs one. ``normalized`` divides by ``d (d - 1)``.
    """
    p, t = _graph(pred), _graph(truth)
    _same_dim(p, t)
    a, b = p.adjacency.astype(bool), t.adjacency.astype(bool)
    diff = (a != b) | (a.T != b.T)
    raw = int(np.count_nonzero(np.triu(diff, k=1)))
    d = p.dim
    return {"raw": raw, "normalized": raw / (d * (d - 1)) if d > 1 else 0.0}


def f1(pred, truth) -> float:
    """Directed-edge F1; two empty graphs score 1."""
    p, t = _graph(pred), _graph(truth)
    _same_dim(p, t)
    a, b = p.adjacency.astype(bool), t.adjacency.astype(bool)
    tp = int(np.count_nonzero(a & b))
    n_pred, n_true = int(a.sum()), int(b.sum())
    if n_pred == 0 and n_true == 0:
        return 1.0
    return 2.0 * tp / (n_pred + n_true)


def order_divergence(order, truth) -> int:
    """Number of true edges ``i -> j`` that the order places with ``j`` before ``i``."""
    perm = order.perm if isinstance(order, CausalOrder) else np.asarray(order, dtype=int)
    t = _graph(truth)
    if len(perm) != t.dim:
        raise ShapeError(f"order has length {len(perm)} but graph has {t.dim} nodes")
    pos = np.empty(len(perm), dtype=int)
    pos[perm] = np.arange(len(perm))
    src, dst = np.nonzero(t.adjacency)
    return int(np.count_nonzero(pos[src] > pos[dst]))


def perturb(order, truth, spec: PerturbSpec) -> CausalOrder:
    """Corrupt an order in one of five ways, each touching ``ceil(fraction * d)`` items.

    * ``random_shuffle``: pick that many positions without replacement and
      permute their contents uniformly.
    * ``block_reversal``: reverse a contiguous block of that length starting at a
      uniformly drawn position.
    * ``adjacent_swap``: that many swaps of positions ``(k, k + 1)``, ``k``
      drawn without replacement (with replacement once exhausted).
    * ``ancestor_swap``: pick that many true edges ``i -> j`` without
      replacement and swap the positions of ``i`` and ``j``, one after another.
    * ``hub_swap``: for that many nodes of largest total degree (ties to the
      smaller index), swap the node with a uniformly drawn other position.
    """
    perm = (order.perm if isinstance(order, CausalOrder) else np.asarray(order, dtype=int)).copy()
    t = _graph(truth)
    d = len(perm)
    if t.dim != d:
        raise ShapeError(f"order has length {d} but graph has {t.dim} nodes")
    m = min(spec.count(d), d)
    rng = np.random.default_rng(spec.seed)
    if m == 0 or d < 2:
        return CausalOrder(perm)

    if spec.kind == "random_shuffle":
        idx = rng.choice(d, size=m, replace=False)
        perm[idx] = perm[rng.permutation(idx)]
    elif spec.kind == "block_reversal":
        start = int(rng.integers(0, d - m + 1))
        perm[start : start + m] = perm[start : start + m][::-1].copy()
    elif spec.kind == "adjacent_swap":
        ks = rng.choice(d - 1, size=min(m, d - 1), replace=False).tolist()
        if m > d - 1:
            ks += rng.integers(0, d - 1, size=m - (d - 1)).tolist()
        for k in ks:
            perm[k], perm[k + 1] = perm[k + 1], perm[k]
    elif spec.kind == "ancestor_swap":
        edges = t.edges()
        if edges:
            pick = rng.choice(len(edges), size=min(m, len(edges)), replace=False)
            pos = np.empty(d, dtype=int)
            pos[perm] = np.arange(d)
            for e in pick:
                i, j = edges[e]
                pi, pj = pos[i], pos[j]
                perm[pi], perm[pj] = j, i
                pos[i], pos[j] = pj, pi
    else:  # hub_swap
        degree = t.adjacency.sum(axis=0) + t.adjacency.sum(axis=1)
        hubs = np.lexsort((np.arange(d), -degree))[:m]
        pos = np.empty(d, dtype=int)
        pos[perm] = np.arange(d)
        for h in hubs:
            ph = pos[h]
            other = int(rng.integers(0, d - 1))
            if other >= ph:
                other += 1
            v = perm[other]
            perm[ph], perm[other] = v, h
            pos[h], pos[v] = other, ph
    return CausalOrder(perm)


def evaluate(pred, truth, order=None) -> dict:
    s = shd(pred, truth)
    out = {"shd": s["raw"], "normalized_shd": s["normalized"], "f1": f1(pred, truth)}
    if order is not None:
        out["order_divergence"] = order_divergence(order, truth)
    return out
