import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triopt.errors import EmptySelectionError, InsufficientSamplesError, NumericalError, ShapeError
from triopt.graph_sim import DataMatrix, NoiseSpec, WeightedDag, sample_sem, simulate
from triopt.metrics import order_divergence
from triopt.oracle import dense_inverse
from triopt.stein_order import (
    CausalOrder,
    KernelState,
    _cholesky,
    build_kernel,
    center,
    hessian_diag,
    order,
    order_with_diagnostics,
    select_leaf,
    sm_downdate,
    spd_inverse,
    stein_score,
)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# center

def test_center_constant_column():
    X = np.column_stack([np.full(10, 3.7), np.arange(10.0)])
    Xc = center(X)
    assert Xc.centered
    assert np.all(Xc.values[:, 0] == 0)


def test_center_idempotent(rng):
    Xc = center(rng.normal(size=(100, 4)))
    assert np.abs(center(Xc).values - Xc.values).max() < 1e-12
    assert np.abs(Xc.values.mean(0)).max() < 1e-12


def test_center_needs_two_rows():
    with pytest.raises(InsufficientSamplesError):
        center(np.ones((1, 3)))


# build_kernel

def test_kernel_of_zero_data():
    st_ = build_kernel(np.zeros((7, 3)), eta=0.9)
    assert np.allclose(st_.kinv, np.eye(7) / 0.9, atol=1e-15)
    assert st_.downdates_since_reinvert == 0 and st_.active == [0, 1, 2]


def test_kernel_residual(rng):
    X = center(rng.normal(size=(50, 10))).values
    st_ = build_kernel(X, eta=0.9)
    K = X @ X.T + 0.9 * np.eye(50)
    assert np.linalg.norm(st_.kinv @ K - np.eye(50)) < 1e-8
    assert np.array_equal(st_.kinv, st_.kinv.T)


def test_cholesky_failure_reports_pivot():
    K = np.diag([2.0, 1.0, -1.0, 4.0])
    with pytest.raises(NumericalError) as e:
        _cholesky(K)
    assert e.value.pivot == 3
    assert e.value.smallest_pivot == pytest.approx(1.0)


def test_build_kernel_rejects_nonpositive_eta():
    with pytest.raises(ValueError):
        build_kernel(np.zeros((3, 2)), eta=0.0)


# stein_score and hessian

def test_score_of_zero_data():
    st_ = build_kernel(np.zeros((5, 2)))
    assert not stein_score(st_, np.zeros((5, 2))).any()


def test_score_matches_gaussian_score():
    x = np.random.default_rng(0).normal(size=(5000, 1))
    Xc = center(x).values
    G = stein_score(build_kernel(Xc, 0.9), Xc)
    assert np.mean(np.abs(G - (-Xc))) < 0.15


def test_score_scaling_matches_closed_form(rng):
    X = center(rng.normal(size=(40, 3))).values
    for c in (0.5, 3.0):
        Y = c * X
        G = stein_score(build_kernel(Y, 0.9), Y)
        direct = -40 * np.linalg.solve(Y @ Y.T + 0.9 * np.eye(40), Y)
        assert np.allclose(G, direct, rtol=1e-9, atol=1e-9)


def test_score_shape_mismatch():
    st_ = build_kernel(np.zeros((5, 2)))
    with pytest.raises(ShapeError):
        stein_score(st_, np.zeros((5, 3)))
    with pytest.raises(ShapeError):
        stein_score(st_, np.zeros((4, 2)))


def test_hessian_diag():
    assert not hessian_diag(np.zeros((2, 2))).any()
    assert hessian_diag(np.array([[2.0]]))[0, 0] == -4.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
def test_hessian_nonpositive(vals):
    assert np.all(hessian_diag(np.array(vals).reshape(1, -1)) <= 0)


# select_leaf

def test_select_leaf_single():
    assert select_leaf(np.zeros((4, 1)), [7]) == 0


def test_select_leaf_argmax_and_ties():
    H = np.array([[-3.0, -1.0, -2.0]])
    assert select_leaf(H, [0, 1, 2]) == 1
    assert select_leaf(np.array([[-1.0, -1.0, -2.0]]), [0, 1, 2]) == 0


def test_select_leaf_empty():
    with pytest.raises(EmptySelectionError):
        select_leaf(np.zeros((3, 0)), [])


def test_chain_leaf_selected_first():
    B = np.zeros((3, 3))
    B[0, 1], B[1, 2] = 1.0, 1.0
    hits = 0
    for seed in range(10):
        Xc = center(sample_sem(WeightedDag(B, [0, 1, 2]), 5000, NoiseSpec("gaussian_ev"), seed)).values
        G = stein_score(build_kernel(Xc), Xc)
        hits += select_leaf(hessian_diag(G), [0, 1, 2]) == 2
    assert hits >= 9


# sm_downdate

def _spd(rng, n):
    Y = rng.normal(size=(n, n + 3))
    return Y @ Y.T / n + 0.9 * np.eye(n)


def test_downdate_zero_vector(rng):
    A = _spd(rng, 6)
    st_ = KernelState(spd_inverse(A), [0])
    before = st_.kinv.copy()
    res = sm_downdate(st_, np.zeros(6))
    assert res.alpha == 1.0 and res.reinvert is None
    assert np.array_equal(st_.kinv, before)


def test_downdate_matches_dense_inverse(rng):
    for _ in range(20):
        A = _spd(rng, 6)
        u = 0.1 * rng.normal(size=6)
        st_ = KernelState(spd_inverse(A), [0, 1])
        sm_downdate(st_, u, position=0)
        assert _rel(st_.kinv, dense_inverse(A - np.outer(u, u))) < 1e-9
        assert st_.active == [1]
        assert st_.downdates_since_reinvert == 1
        assert np.array_equal(st_.kinv, st_.kinv.T)


def test_downdate_alpha_fallback():
    A = np.eye(3)
    u = np.array([1.0, 0.0, 0.0])  # alpha = 1 - 1 = 0
    st_ = KernelState(np.eye(3), [0, 1])
    res = sm_downdate(st_, u, position=0)
    assert res.reinvert == "alpha"
    assert st_.active == [0, 1] and np.array_equal(st_.kinv, A)


def test_downdate_periodic_fallback(rng):
    A = _spd(rng, 4)
    st_ = KernelState(spd_inverse(A), [0, 1, 2], reinvert_period=2)
    for _ in range(2):
        assert sm_downdate(st_, 0.05 * rng.normal(size=4)).reinvert is None
    assert sm_downdate(st_, 0.05 * rng.normal(size=4)).reinvert == "periodic"


def test_downdate_refinement_matches_dense(rng):
    X = center(rng.normal(size=(30, 5)) * [1, 1, 1, 1, 30]).values
    st_ = build_kernel(X, 0.9)
    sm_downdate(st_, X[:, 4].copy(), position=4, X=X)
    ref = dense_inverse(X[:, :4] @ X[:, :4].T + 0.9 * np.eye(30))
    assert _rel(st_.kinv, ref) < 1e-9


# order

def test_order_single_variable():
    assert order(np.random.default_rng(0).normal(size=(10, 1))).tolist() == [0]


def test_order_chain_increasing_variances():
    B = np.zeros((3, 3))
    B[0, 1], B[1, 2] = 0.8, 0.8
    dag = WeightedDag(B, [0, 1, 2])
    X = sample_sem(dag, 2000, NoiseSpec("gaussian", [1.0, 1.2, 1.4]), seed=1)
    assert order_divergence(order(X), B) == 0


def test_order_diagnostics_records(rng):
    dag, X = simulate("ER", 8, 2, 300, seed=2)
    perm, rounds = order_with_diagnostics(X, tau=3)
    assert len(rounds) == 7
    assert rounds[-1]["event"] == "final"
    assert {r["event"] for r in rounds[:-1]} <= {"downdate", "periodic", "alpha"}
    assert any(r["event"] == "periodic" for r in rounds)
    # reversed removal sequence: last removed leaf is at the end
    assert perm.perm[-1] == rounds[0]["leaf"]
    _, nosm = order_with_diagnostics(X, use_downdate=False)
    assert {r["event"] for r in nosm[:-1]} == {"rebuild"}


@pytest.mark.parametrize("family,degree", [("ER", 1), ("ER", 2), ("ER", 4), ("SF", 2)])
def test_sm_and_nosm_agree_at_desk_scale(family, degree):
    for seed in range(3):
        _, X = simulate(family, 20, degree, 2000, seed=seed)
        assert order(X, use_downdate=True).tolist() == order(X, use_downdate=False).tolist()


def test_downdate_drift_bounded_against_rebuild():
    # no fallback (tau large); compare maintained inverse with a fresh one every 10 rounds
    _, X = simulate("ER", 40, 2, 500, seed=5)
    Xa = center(X).values.copy()
    state = build_kernel(Xa, 0.9, tau=10**6)
    for k in range(30):
        G = stein_score(state, Xa)
        pos = select_leaf(hessian_diag(G), state.active)
        u = Xa[:, pos].copy()
        before = Xa
        Xa = np.delete(Xa, pos, axis=1)
        assert sm_downdate(state, u, position=pos, X=before).reinvert is None
        assert np.linalg.norm(state.kinv - state.kinv.T) <= 1e-8 * np.linalg.norm(state.kinv)
        if k % 10 == 9:
            fresh = build_kernel(Xa, 0.9).kinv
            assert _rel(state.kinv, fresh) < 1e-5


def test_rebuild_residual_bound():
    _, X = simulate("ER", 10, 1, 200, seed=1)
    Xc = center(X).values
    st_ = build_kernel(Xc, 0.9)
    K = Xc @ Xc.T + 0.9 * np.eye(200)
    assert np.linalg.norm(st_.kinv @ K - np.eye(200)) / np.sqrt(200) < 1e-6


def test_hessian_means_match_independent_formula():
    _, X = simulate("ER", 5, 2, 80, seed=7)
    Xa = center(X).values
    for drop in range(5):
        Xr = np.delete(Xa, drop, axis=1)
        G = stein_score(build_kernel(Xr, 0.9), Xr)
        means = hessian_diag(G).mean(0)
        ref = []
        for j in range(Xr.shape[1]):
            g = -80 * dense_inverse(Xr @ Xr.T + 0.9 * np.eye(80)) @ Xr[:, j]
            ref.append(-np.mean(g**2))
        assert np.allclose(means, ref, rtol=1e-9)


@given(
    n=st.integers(2, 30),
    d=st.integers(1, 8),
    seed=st.integers(0, 10**6),
    sm=st.booleans(),
)
def test_order_is_a_permutation(n, d, seed, sm):
    X = np.random.default_rng(seed).normal(size=(n, d))
    perm = order(X, use_downdate=sm).tolist()
    assert sorted(perm) == list(range(d))


def test_causal_order_validates():
    with pytest.raises(ShapeError):
        CausalOrder([0, 0, 1])
    o = CausalOrder([2, 0, 1])
    assert o.positions().tolist() == [1, 2, 0]
