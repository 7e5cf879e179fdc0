"""Ground-truth DAGs and linear SEM samples.

Storage convention used throughout the package: ``weights[j, i]`` is the
coefficient of the edge ``j -> i``, so a sample row obeys
``x = weights.T @ x + noise`` (equivalently ``X = X @ weights + E`` for the
n x d data matrix).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidSampleCountError,
    InvalidScaleError,
    ShapeError,
)

EULER_GAMMA = float(np.euler_gamma)
NOISE_FAMILIES = ("gaussian_ev", "gaussian", "gumbel", "exponential")


@dataclass
class WeightedDag:
    weights: np.ndarray
    topo_order: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.topo_order = np.asarray(self.topo_order, dtype=int)
        d = self.weights.shape[0]
        if self.weights.shape != (d, d):
            raise ShapeError(f"weights must be square, got {self.weights.shape}")
        if sorted(self.topo_order.tolist()) != list(range(d)):
            raise ShapeError("topo_order is not a permutation of 0..d-1")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.weights))

    def permuted(self) -> np.ndarray:
        """Weights re-indexed by ``topo_order``; strictly upper triangular."""
        p = self.topo_order
        return self.weights[np.ix_(p, p)]

    def is_consistent(self) -> bool:
        return not np.any(np.tril(self.permuted()))


@dataclass
class DataMatrix:
    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ShapeError(f"data must be 2-D, got shape {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass
class NoiseSpec:
    """Additive noise distribution.

    ``scale`` is the Gaussian standard deviation, the Gumbel scale or the
    exponential mean, either shared or one value per variable. ``gaussian_ev``
    requires a single shared value; ``gaussian`` allows heteroscedastic scales.
    """

    family: str = "gaussian_ev"
    scale: Union[float, Sequence[float]] = 1.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        s = np.asarray(self.scale, dtype=float)
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise InvalidScaleError(f"noise scale must be positive, got {self.scale!r}")
        if self.family == "gaussian_ev" and s.ndim > 0 and np.ptp(s) > 0:
            raise InvalidScaleError("gaussian_ev needs equal scales across variables")

    def scales(self, d: int) -> np.ndarray:
        s = np.asarray(self.scale, dtype=float)
        if s.ndim == 0:
            return np.full(d, float(s))
        if s.shape != (d,):
            raise ShapeError(f"need {d} noise scales, got {s.shape}")
        return s


def is_dag(adj: np.ndarray) -> bool:
    try:
        topological_order(adj)
    except ValueError:
        return False
    return True


def topological_order(adj: np.ndarray) -> np.ndarray:
    """Kahn's algorithm, emitted layer by layer, smallest index first within a layer.

    Raises ``ValueError`` if ``adj`` has a cycle.
    """
    a = np.asarray(adj) != 0
    d = a.shape[0]
    indeg = a.sum(axis=0).astype(int)
    layer = [i for i in range(d) if indeg[i] == 0]
    out = []
    while layer:
        out.extend(layer)
        nxt = []
        for i in layer:
            for j in np.flatnonzero(a[i]):
                indeg[j] -= 1
                if indeg[j] == 0:
                    nxt.append(int(j))
        layer = sorted(nxt)
    if len(out) != d:
        raise ValueError("graph contains a cycle")
    return np.array(out, dtype=int)


def er_edge_probability(d: int, degree: int) -> float:
    return min(1.0, 2.0 * degree * d / (d * d - d))


def gen_er_dag(d: int, degree: int, seed: int) -> WeightedDag:
    """Erdos-Renyi skeleton with expected ``degree * d`` edges.

    Nodes are put in a random order first, then every forward pair gets an
    edge independently with probability ``2 e / (d^2 - d)``, ``e = degree * d``.
    """
    if d < 2:
        raise InvalidDimensionError(f"ER graph needs d >= 2, got {d}")
    if degree < 1:
        raise InvalidDimensionError(f"degree must be >= 1, got {degree}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d)
    p = er_edge_probability(d, degree)
    upper = np.triu(rng.random((d, d)) < p, k=1)
    w = np.zeros((d, d))
    src, dst = np.nonzero(upper)
    w[perm[src], perm[dst]] = 1.0
    return WeightedDag(w, perm)


def gen_sf_dag(d: int, k: int, seed: int) -> WeightedDag:
    """Barabasi-Albert skeleton, edges oriented from earlier to later arrivals.

    Arrival ``t`` links to ``min(t, k)`` distinct earlier arrivals drawn with
    probability proportional to ``degree + 1``. Arrivals are then relabelled by
    a random permutation, which is kept as ``topo_order``.
    """
    if k < 1 or d <= k:
        raise InvalidDimensionError(f"SF graph needs d > k >= 1, got d={d}, k={k}")
    rng = np.random.default_rng(seed)
    deg = np.zeros(d)
    arrivals = np.zeros((d, d))
    for t in range(1, d):
        m = min(t, k)
        p = deg[:t] + 1.0
        targets = rng.choice(t, size=m, replace=False, p=p / p.sum())
        arrivals[targets, t] = 1.0
        deg[targets] += 1
        deg[t] += m
    perm = rng.permutation(d)
    w = np.zeros((d, d))
    src, dst = np.nonzero(arrivals)
    w[perm[src], perm[dst]] = 1.0
    return WeightedDag(w, perm)


def gen_dag(family: str, d: int, degree: int, seed: int) -> WeightedDag:
    family = family.upper()
    if family == "ER":
        return gen_er_dag(d, degree, seed)
    if family == "SF":
        return gen_sf_dag(d, degree, seed)
    raise ValueError(f"unknown graph family {family!r}")


def sample_weights(skeleton: WeightedDag, scale: float = 1.0, seed: int = 0) -> WeightedDag:
    """Replace unit entries by draws from ``scale * ([-2, -0.5] U [0.5, 2])``."""
    if not scale > 0:
        raise InvalidScaleError(f"weight scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    d = skeleton.dim
    mag = rng.uniform(0.5, 2.0, size=(d, d))
    sign = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    w = np.where(skeleton.weights != 0, scale * sign * mag, 0.0)
    return WeightedDag(w, skeleton.topo_order.copy())


def _noise(family: str, scale: float, n: int, rng: np.random.Generator) -> np.ndarray:
    if family in ("gaussian_ev", "gaussian"):
        return rng.normal(0.0, scale, size=n)
    if family == "gumbel":
        return rng.gumbel(0.0, scale, size=n) - EULER_GAMMA * scale
    # exponential
    return rng.exponential(scale, size=n) - scale


def sample_sem(dag: WeightedDag, n: int, noise: NoiseSpec | None = None, seed: int = 0) -> DataMatrix:
    """Draw ``n`` rows from the linear SEM ``x_i = sum_j B[j, i] x_j + e_i``.

    Noise is shifted to zero mean. Each variable's noise comes from its own
    child stream of ``SeedSequence(seed)``.
    """
    if n < 1:
        raise InvalidSampleCountError(f"need n >= 1 samples, got {n}")
    noise = noise or NoiseSpec()
    d = dag.dim
    scales = noise.scales(d)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(d)]
    B = dag.weights
    X = np.zeros((n, d))
    for i in dag.topo_order:
        parents = np.flatnonzero(B[:, i])
        X[:, i] = X[:, parents] @ B[parents, i] + _noise(noise.family, scales[i], n, streams[i])
    return DataMatrix(X, centered=False)


def simulate(
    family: str,
    d: int,
    degree: int,
    n: int,
    noise: NoiseSpec | None = None,
    weight_scale: float = 1.0,
    seed: int = 0,
) -> tuple[WeightedDag, DataMatrix]:
    """Skeleton, weights and data from one integer seed."""
    s_graph, s_weight, s_data = np.random.SeedSequence(seed).generate_state(3)
    skel = gen_dag(family, d, degree, int(s_graph))
    dag = sample_weights(skel, weight_scale, int(s_weight))
    return dag, sample_sem(dag, n, noise, int(s_data))
