"""Causal ordering by linear-kernel Stein score matching.

With the linear kernel ``K = X X^T`` the Stein score estimate has the closed
form ``G = -(K + eta I)^{-1} (n X)``. The column means of ``-(G * G)`` act as
a Hessian-diagonal proxy whose maximiser is a leaf. Leaves are peeled off one
at a time; removing column ``u`` turns ``K + eta I`` into ``K - u u^T + eta I``,
so the inverse can be maintained with a Sherman-Morrison downdate instead of
being refactorised every round.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import cho_solve, lapack

from .errors import EmptySelectionError, InsufficientSamplesError, NumericalError, ShapeError
from .graph_sim import DataMatrix

log = logging.getLogger(__name__)

DEFAULT_ETA = 0.9
DEFAULT_TAU = 100
DEFAULT_ZETA = 1e-7


@dataclass
class CausalOrder:
    """``perm[k]`` is the variable at position ``k``; ancestors come first."""

    perm: np.ndarray

    def __post_init__(self):
        self.perm = np.asarray(self.perm, dtype=int)
        if self.perm.ndim != 1 or sorted(self.perm.tolist()) != list(range(len(self.perm))):
            raise ShapeError(f"not a permutation: {self.perm.tolist()}")

    def __len__(self):
        return len(self.perm)

    def positions(self) -> np.ndarray:
        """Inverse permutation: ``positions()[i]`` is where variable ``i`` sits."""
        pos = np.empty_like(self.perm)
        pos[self.perm] = np.arange(len(self.perm))
        return pos

    def tolist(self) -> list[int]:
        return self.perm.tolist()


@dataclass
class KernelState:
    kinv: np.ndarray
    active: list
    eta: float = DEFAULT_ETA
    downdates_since_reinvert: int = 0
    reinvert_period: int = DEFAULT_TAU
    alpha_floor: float = DEFAULT_ZETA

    @property
    def n(self) -> int:
        return self.kinv.shape[0]


class DowndateResult(NamedTuple):
    alpha: float
    # None when the downdate was applied, otherwise why the caller must rebuild
    reinvert: Optional[str]


def _as_data(X) -> DataMatrix:
    return X if isinstance(X, DataMatrix) else DataMatrix(np.asarray(X, dtype=float))


def center(X) -> DataMatrix:
    X = _as_data(X)
    if X.n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples to center, got {X.n}")
    return DataMatrix(X.values - X.values.mean(axis=0), centered=True)


def _cholesky(K: np.ndarray) -> np.ndarray:
    """Upper Cholesky factor of ``K``; raises NumericalError on breakdown."""
    c, info = lapack.dpotrf(K, lower=0, clean=1)
    if info > 0:
        diag = np.diag(c)[: info - 1]
        smallest = float(diag.min()) if diag.size else float("nan")
        raise NumericalError(
            f"kernel is not positive definite: leading minor {info} failed "
            f"(smallest accepted pivot {smallest:.3e})",
            pivot=int(info),
            smallest_pivot=smallest,
        )
    if info < 0:
        raise NumericalError(f"dpotrf argument {-info} invalid")
    return c


def _regularized_kernel(X: np.ndarray, eta: float) -> np.ndarray:
    K = X @ X.T
    K.flat[:: K.shape[0] + 1] += eta
    return K


def spd_inverse(A: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its Cholesky factor."""
    c = _cholesky(A)
    inv, info = lapack.dpotri(c, lower=0)
    if info != 0:
        raise NumericalError(f"dpotri failed with info={info}")
    upper = np.triu(inv)
    return upper + np.triu(upper, 1).T


def build_kernel(X, eta: float = DEFAULT_ETA, active=None, tau: int = DEFAULT_TAU, zeta: float = DEFAULT_ZETA) -> KernelState:
    """Factor ``X X^T + eta I`` and store its inverse with fresh counters."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    kinv = spd_inverse(_regularized_kernel(values, eta))
    if active is None:
        active = list(range(values.shape[1]))
    return KernelState(kinv, list(active), eta, 0, tau, zeta)


def stein_score(state: KernelState, X) -> np.ndarray:
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if values.shape[0] != state.n or values.shape[1] != len(state.active):
        raise ShapeError(
            f"data shape {values.shape} does not match kernel state "
            f"(n={state.n}, active={len(state.active)})"
        )
    return -values.shape[0] * (state.kinv @ values)


def hessian_diag(G: np.ndarray) -> np.ndarray:
    return -(G * G)


def select_leaf(H: np.ndarray, active) -> int:
    """Position (into ``active``) of the column with the largest mean of ``H``."""
    if len(active) == 0 or H.shape[1] == 0:
        raise EmptySelectionError("no active columns to select a leaf from")
    if H.shape[1] != len(active):
        raise ShapeError(f"H has {H.shape[1]} columns but {len(active)} are active")
    # np.argmax returns the first maximum, i.e. the smallest position on ties
    return int(np.argmax(H.mean(axis=0)))


def sm_downdate(
    state: KernelState,
    u: np.ndarray,
    position: Optional[int] = None,
    X: Optional[np.ndarray] = None,
) -> DowndateResult:
    """Replace ``state.kinv`` by ``(K - u u^T + eta I)^{-1}`` in O(n^2).

    Nothing is changed when ``|alpha| < alpha_floor`` or the periodic budget is
    used up; the result then names the reason and the caller is expected to call
    ``build_kernel`` on the reduced data. ``position``, if given, is dropped from
    ``state.active`` on success.

    If ``X`` (the data *before* removing ``u``) is passed, ``v = kinv u`` gets
    one step of iterative refinement against ``X X^T + eta I``. That costs
    O(n d + n^2) and stops inverse errors from being amplified through ``1/alpha``
    on high-variance columns.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (state.n,):
        raise ShapeError(f"u must have shape ({state.n},), got {u.shape}")
    v = state.kinv @ u
    if X is not None:
        r = u - (X @ (X.T @ v) + state.eta * v)
        v += state.kinv @ r
    alpha = float(1.0 - u @ v)
    if abs(alpha) < state.alpha_floor:
        return DowndateResult(alpha, "alpha")
    if state.downdates_since_reinvert >= state.reinvert_period:
        return DowndateResult(alpha, "periodic")
    # rank-1 term written as s * w w^T keeps kinv bitwise symmetric
    w = v / np.sqrt(abs(alpha))
    if alpha > 0:
        state.kinv += np.outer(w, w)
    else:
        state.kinv -= np.outer(w, w)
    state.downdates_since_reinvert += 1
    if position is not None:
        state.active.pop(position)
    return DowndateResult(alpha, None)


def order_with_diagnostics(
    X,
    eta: float = DEFAULT_ETA,
    zeta: float = DEFAULT_ZETA,
    tau: int = DEFAULT_TAU,
    use_downdate: bool = True,
    refine: bool = True,
) -> tuple[CausalOrder, list[dict]]:
    """Run the leaf-peeling loop and return the order plus one record per round.

    Each record holds the removed variable, the downdate denominator (``None``
    when no downdate was attempted) and the event: ``downdate``, ``alpha`` or
    ``periodic`` (fallback rebuilds), ``rebuild`` (no-downdate variant) or
    ``final`` (last round, the kernel is not needed afterwards).
    """
    X = _as_data(X)
    if X.n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {X.n}")
    if X.d < 1:
        raise ShapeError("need at least one variable")
    Xc = X if X.centered else center(X)
    n, d = Xc.n, Xc.d
    Xa = Xc.values.copy()
    active = list(range(d))
    removed = []
    rounds = []
    state = build_kernel(Xa, eta, active, tau, zeta) if use_downdate and d > 1 else None

    for k in range(d - 1):
        if use_downdate:
            G = stein_score(state, Xa)
        else:
            # fresh kernel and factorisation every round
            c = _cholesky(_regularized_kernel(Xa, eta))
            G = -n * cho_solve((c, False), Xa)
        pos = select_leaf(hessian_diag(G), active)
        leaf = active[pos]
        removed.append(leaf)
        u = Xa[:, pos].copy()
        X_before = Xa
        Xa = np.delete(Xa, pos, axis=1)
        active.pop(pos)
        rec = {"round": k, "leaf": int(leaf), "position": pos, "alpha": None}
        if k == d - 2:
            rec["event"] = "final"
        elif not use_downdate:
            rec["event"] = "rebuild"
        else:
            res = sm_downdate(state, u, X=X_before if refine else None)
            rec["alpha"] = res.alpha
            if res.reinvert is None:
                state.active = list(active)
                rec["event"] = "downdate"
            else:
                log.debug("round %d: rebuilding kernel inverse (%s, alpha=%.3e)", k, res.reinvert, res.alpha)
                state = build_kernel(Xa, eta, active, tau, zeta)
                rec["event"] = res.reinvert
        rounds.append(rec)

    perm = active + removed[::-1]
    return CausalOrder(np.array(perm, dtype=int)), rounds


def order(
    X,
    eta: float = DEFAULT_ETA,
    zeta: float = DEFAULT_ZETA,
    tau: int = DEFAULT_TAU,
    use_downdate: bool = True,
    refine: bool = True,
) -> CausalOrder:
    return order_with_diagnostics(X, eta, zeta, tau, use_downdate, refine)[0]
