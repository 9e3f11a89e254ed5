import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagrca.errors import ContractError, NumericError
from dagrca.graph import WeightedDag, has_cycle, topological_order
from dagrca.ranking import (RankedCauses, pagerank, prepare_graph, rank_causes,
                            transition_matrix)


def labels(m):
    return tuple(f"s{i // 2}/m{i}" for i in range(m))


def direct_pagerank(P, alpha):
    """Closed form: dangling rows replaced by uniform, then a linear solve."""
    n = P.shape[0]
    Q = P.copy()
    Q[Q.sum(axis=1) == 0] = 1.0 / n
    return (1 - alpha) / n * np.linalg.solve(np.eye(n) - alpha * Q.T, np.ones(n))


def random_transition(rng, m, density=0.4):
    W = rng.uniform(0.1, 3.0, (m, m)) * (rng.random((m, m)) < density)
    np.fill_diagonal(W, 0)
    return transition_matrix(WeightedDag(W, labels(m)))


def test_prepare_graph_reverses_and_takes_abs():
    g = WeightedDag(np.array([[0, -2.0], [0, 0]]), ("s/a", "s/b"))
    p = prepare_graph(g)
    np.testing.assert_array_equal(p.adjacency, [[0, 0], [2.0, 0]])
    np.testing.assert_array_equal(prepare_graph(p).adjacency, np.abs(g.adjacency))
    empty = WeightedDag(np.zeros((3, 3)), labels(3))
    assert not prepare_graph(empty).adjacency.any()


def test_transition_matrix_examples():
    W = np.array([[0, 2.0, 2.0], [1.0, 0, 3.0], [0, 0, 0]])
    P = transition_matrix(WeightedDag(W, labels(3)))
    np.testing.assert_allclose(P, [[0, 0.5, 0.5], [0.25, 0, 0.75], [0, 0, 0]])
    with pytest.raises(ContractError, match="prepare_graph"):
        transition_matrix(WeightedDag(-W, labels(3)))


def test_pagerank_edgeless_is_uniform():
    for n in (1, 2, 7):
        np.testing.assert_allclose(pagerank(np.zeros((n, n))), np.full(n, 1 / n))


def test_pagerank_two_nodes_sink_above_source():
    P = np.array([[0.0, 1.0], [0.0, 0.0]])  # a -> b after reversal
    v = pagerank(P, 0.85)
    np.testing.assert_allclose(v, direct_pagerank(P, 0.85), atol=1e-12)
    assert v[1] > v[0]


def test_pagerank_matches_linear_solve(rng):
    for _ in range(50):
        m = int(rng.integers(2, 11))
        P = random_transition(rng, m)
        v = pagerank(P)
        np.testing.assert_allclose(v, direct_pagerank(P, 0.85), atol=1e-8, rtol=0)
        assert abs(v.sum() - 1) < 1e-9
        assert np.all(v >= 0.15 / m - 1e-12)


def test_pagerank_contract_errors():
    with pytest.raises(ContractError):
        pagerank(np.array([[0.5, 0.2], [0, 0]]))
    with pytest.raises(ContractError):
        pagerank(np.zeros((2, 2)), alpha=1.0)
    P = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NumericError, match="converge"):
        pagerank(P, tol=1e-300, max_iter=5)


def test_chain_root_ranks_first():
    W = np.array([[0, 1.0, 0], [0, 0, 1.0], [0, 0, 0]])
    r = rank_causes(WeightedDag(W, ("s/a", "s/b", "s/c")))
    assert r.labels() == ["s/a", "s/b", "s/c"]
    assert abs(r.scores().sum() - 1) < 1e-9


def test_isolated_nodes_rank_in_label_order():
    r = rank_causes(WeightedDag(np.zeros((4, 4)), ("z/d", "a/b", "m/x", "a/a")))
    assert r.labels() == ["a/a", "a/b", "m/x", "z/d"]
    np.testing.assert_allclose(r.scores(), 0.25)


def test_threshold_drops_weak_edges():
    W = np.array([[0, 0.1], [0, 0]])
    r = rank_causes(WeightedDag(W, ("s/b", "s/a")), tau=0.3)
    assert r.labels() == ["s/a", "s/b"]


def test_scaling_weights_keeps_order(rng):
    W = rng.uniform(0.5, 2, (6, 6)) * np.triu(rng.random((6, 6)) < 0.5, 1)
    g = WeightedDag(W, labels(6))
    assert rank_causes(g).labels() == rank_causes(g.with_adjacency(10 * W)).labels()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relabeling_permutes_scores(seed):
    rng = np.random.default_rng(seed)
    m = 6
    W = rng.uniform(0.5, 2, (m, m)) * np.triu(rng.random((m, m)) < 0.5, 1)
    perm = rng.permutation(m)
    ids = labels(m)
    base = dict(rank_causes(WeightedDag(W, ids)).entries)
    moved = dict(rank_causes(WeightedDag(W[np.ix_(perm, perm)], [ids[i] for i in perm])).entries)
    for k in ids:
        assert abs(base[k] - moved[k]) < 1e-12


def test_records_and_service_aggregation():
    r = RankedCauses((("b/x", 0.5), ("a/y", 0.3), ("b/z", 0.2)))
    assert r.to_records()[0] == {"rank": 1, "metric": "b/x", "service": "b", "score": 0.5}
    assert r.by_service().labels() == ["b/x", "a/y"]
    assert r.rank_of("a/y") == 2


def test_graph_helpers():
    support = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], bool)
    assert not has_cycle(support)
    assert topological_order(support) == [0, 1, 2]
    support[2, 0] = True
    assert has_cycle(support)
    with pytest.raises(ContractError):
        WeightedDag(np.zeros((2, 2)), ("s/a", "s/a"))
