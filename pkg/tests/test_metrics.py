import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triopt.errors import InvalidFractionError, ShapeError
from triopt.graph_sim import gen_er_dag, sample_weights, simulate, topological_order
from triopt.metrics import (
    PERTURB_KINDS,
    BinaryGraph,
    PerturbSpec,
    binarize,
    evaluate,
    f1,
    order_divergence,
    perturb,
    shd,
)
from triopt.oracle import brute_order_divergence, brute_shd
from triopt.stein_order import CausalOrder
from triopt.tri_opt import threshold


def _random_graph(r, d, p=0.2):
    a = (r.random((d, d)) < p).astype(int)
    np.fill_diagonal(a, 0)
    return a


def _chain(d):
    a = np.zeros((d, d))
    for i in range(d - 1):
        a[i, i + 1] = 1
    return a


def test_binary_graph_zero_diagonal():
    g = BinaryGraph(np.ones((3, 3)))
    assert not np.diag(g.adjacency).any()
    with pytest.raises(ShapeError):
        BinaryGraph(np.ones((2, 3)))


def test_binarize():
    assert not binarize(np.zeros((3, 3))).adjacency.any()
    assert binarize(np.array([[0, -1.3], [0, 0]])).adjacency[0, 1] == 1
    W = np.array([[0, 0.5, 0.29], [0, 0, -0.3], [0, 0, 0]])
    assert binarize(threshold(W, 0.3)).edges() == [(0, 1), (1, 2)]


def test_shd_examples():
    a = _chain(4)
    assert shd(a, a) == {"raw": 0, "normalized": 0.0}
    b = a.copy()
    b[1, 2], b[2, 1] = 0, 1
    assert shd(b, a)["raw"] == 1
    c = a.copy()
    c[0, 3] = 1
    assert shd(c, a) == {"raw": 1, "normalized": 1 / 12}
    with pytest.raises(ShapeError):
        shd(np.zeros((2, 2)), np.zeros((3, 3)))


def test_shd_matches_brute_force(rng):
    for _ in range(20):
        a, b = _random_graph(rng, 50, 0.05), _random_graph(rng, 50, 0.05)
        assert shd(a, b)["raw"] == brute_shd(a, b)


@given(seed=st.integers(0, 2**31), d=st.integers(2, 12))
def test_shd_is_symmetric(seed, d):
    r = np.random.default_rng(seed)
    a, b = _random_graph(r, d, 0.3), _random_graph(r, d, 0.3)
    assert shd(a, b) == shd(b, a)
    assert shd(a, a)["raw"] == 0


def test_f1_examples():
    a = _chain(5)
    assert f1(a, a) == 1.0
    assert f1(np.zeros((5, 5)), a) == 0.0
    assert f1(np.zeros((5, 5)), np.zeros((5, 5))) == 1.0
    half = np.zeros((5, 5))
    half[0, 1], half[1, 2] = 1, 1
    assert f1(half, a) == pytest.approx(2 / 3)
    # reversed edge is not a true positive
    assert f1(a.T, a) == 0.0


@given(seed=st.integers(0, 2**31), d=st.integers(2, 10))
def test_f1_bounds(seed, d):
    r = np.random.default_rng(seed)
    a, b = _random_graph(r, d, 0.3), _random_graph(r, d, 0.3)
    v = f1(a, b)
    assert 0.0 <= v <= 1.0
    if a.any() or b.any():
        assert (v == 1.0) == np.array_equal(a, b)


def test_order_divergence_examples():
    dag = gen_er_dag(10, 2, 0)
    assert order_divergence(CausalOrder(dag.topo_order), dag.weights) == 0
    assert order_divergence(list(range(6))[::-1], _chain(6)) == 5


def test_order_divergence_brute(rng):
    for k in range(30):
        A = gen_er_dag(6, 2, k).weights
        perm = rng.permutation(6)
        assert order_divergence(perm, A) == brute_order_divergence(perm, A)


def test_perturb_spec_validation_and_count():
    with pytest.raises(InvalidFractionError):
        PerturbSpec("random_shuffle", 1.5)
    with pytest.raises(InvalidFractionError):
        PerturbSpec("random_shuffle", -0.1)
    with pytest.raises(ValueError):
        PerturbSpec("nope", 0.1)
    assert PerturbSpec("adjacent_swap", 0.07).count(100) == 7
    assert PerturbSpec("adjacent_swap", 0.2).count(100) == 20
    assert PerturbSpec("adjacent_swap", 0.01).count(50) == 1


@pytest.mark.parametrize("kind", PERTURB_KINDS)
def test_zero_fraction_is_identity(kind):
    dag = gen_er_dag(20, 2, 1)
    o = CausalOrder(dag.topo_order)
    assert perturb(o, dag.weights, PerturbSpec(kind, 0.0, 3)).tolist() == o.tolist()


def test_full_block_reversal():
    o = CausalOrder(np.arange(8))
    assert perturb(o, _chain(8), PerturbSpec("block_reversal", 1.0, 0)).tolist() == list(range(8))[::-1]


def test_block_reversal_is_contiguous():
    o = CausalOrder(np.arange(20))
    p = np.array(perturb(o, _chain(20), PerturbSpec("block_reversal", 0.25, 4)).tolist())
    moved = np.flatnonzero(p != np.arange(20))
    lo, hi = moved.min(), moved.max()
    assert np.array_equal(p[lo : hi + 1], np.arange(lo, hi + 1)[::-1])
    assert hi - lo + 1 in (4, 5)


def test_ancestor_swap_inverts_true_edges():
    dag = gen_er_dag(30, 1, 2)
    o = CausalOrder(topological_order(dag.weights))
    p = perturb(o, dag.weights, PerturbSpec("ancestor_swap", 0.1, 0))
    assert order_divergence(p, dag.weights) > 0


def test_hub_swap_moves_the_hub():
    a = np.zeros((10, 10))
    a[3, :] = 1
    a[3, 3] = 0
    a[:3, 3] = 0
    o = CausalOrder(np.arange(10))
    p = perturb(o, a, PerturbSpec("hub_swap", 0.1, 0))
    assert p.positions()[3] != 3
    assert sum(x != y for x, y in zip(p.tolist(), range(10))) == 2


@given(
    kind=st.sampled_from(PERTURB_KINDS),
    frac=st.floats(0.0, 1.0),
    d=st.integers(2, 40),
    seed=st.integers(0, 2**31),
)
def test_perturb_returns_permutation(kind, frac, d, seed):
    dag = sample_weights(gen_er_dag(d, 2, seed), 1.0, seed)
    out = perturb(CausalOrder(dag.topo_order), dag.weights, PerturbSpec(kind, frac, seed))
    assert sorted(out.tolist()) == list(range(d))


@given(frac=st.floats(0.0, 0.5), d=st.integers(3, 40), seed=st.integers(0, 2**31))
def test_adjacent_swap_divergence_bound(frac, d, seed):
    dag = gen_er_dag(d, 2, seed)
    spec = PerturbSpec("adjacent_swap", frac, seed)
    base = CausalOrder(dag.topo_order)
    out = perturb(base, dag.weights, spec)
    assert order_divergence(out, dag.weights) - order_divergence(base, dag.weights) <= spec.count(d)


def test_adjacent_swap_20pct_keeps_recovery():
    # single draws occasionally flip one true edge; the reference value is a mean over draws
    from triopt.experiments import learn
    from triopt.stein_order import center
    from triopt.tri_opt import OptConfig

    dag, X = simulate("ER", 100, 1, 5000, seed=0)
    Xc = center(X)
    base = CausalOrder(topological_order(dag.weights))
    scores = []
    for s in range(10):
        o = perturb(base, dag.weights, PerturbSpec("adjacent_swap", 0.2, s))
        scores.append(f1(learn(Xc, o, OptConfig())[0], dag.weights))
    assert np.mean(scores) == pytest.approx(1.0, abs=0.01)


def test_evaluate_keys():
    a = _chain(4)
    out = evaluate(a, a, list(range(4)))
    assert out == {"shd": 0, "normalized_shd": 0.0, "f1": 1.0, "order_divergence": 0}
    assert "order_divergence" not in evaluate(a, a)
