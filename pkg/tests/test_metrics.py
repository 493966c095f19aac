import json
import math
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brandgraph.errors import DegenerateGraph, EmptyGraph, InvalidDamping
from brandgraph.graph import NodeId, WeightedGraph, build_engagement_graph
from brandgraph.metrics import (
    ScoreMap,
    average_path_length,
    density,
    eigenvector_centrality,
    pagerank,
    topology_summary,
    weighted_degree,
)

from conftest import complete_graph, dataset, graph, path_graph, random_graph, star_graph, u
from oracles import apl_bfs, dense_directed, dense_undirected, eigvec_iterate, eigvec_spectral, pagerank_solve


def _vec(scores: ScoreMap, g) -> np.ndarray:
    return np.array([scores[n] for n in g.nodes])


# ---------------------------------------------------------------- density


def test_density_examples():
    assert density(complete_graph(4)) == 1.0
    assert density(graph(5, [])) == 0.0
    directed = graph(3, [(0, 1), (1, 0), (1, 2)], directed=True)
    assert density(directed) == 3 / 6
    with pytest.raises(DegenerateGraph):
        density(graph(1, []))


# ---------------------------------------------------------------- paths


def test_apl_examples():
    assert average_path_length(path_graph(4)) == pytest.approx(5 / 3, abs=0)
    assert average_path_length(star_graph(3)) == 1.5
    assert average_path_length(complete_graph(5)) == 1.0
    assert average_path_length(graph(1, [])) is None
    assert average_path_length(graph(3, [])) is None


def test_apl_largest_component_only():
    g = graph(7, [(0, 1), (2, 3), (3, 4), (4, 5)])  # P2 + P4 + isolated node
    assert average_path_length(g) == pytest.approx(5 / 3, abs=1e-15)


def test_apl_directed_follows_arcs():
    g = graph(3, [(0, 1), (1, 2)], directed=True)
    assert average_path_length(g) == (1 + 2 + 1) / 3
    assert average_path_length(g, undirected=True) == pytest.approx(4 / 3)


def test_apl_matches_oracle_random():
    rng = random.Random(11)
    for trial in range(120):
        n = rng.randint(2, 50)
        g = random_graph(rng, n, rng.choice([0.03, 0.08, 0.2]), directed=trial % 3 == 0, weighted=False)
        for und in (False, True):
            got = average_path_length(g, undirected=und)
            want = apl_bfs(g, undirected=und)
            assert (got is None and want is None) or got == want


def test_apl_many_batches():
    # more than one 512-source batch
    rng = random.Random(2)
    g = random_graph(rng, 700, 0.004, weighted=False)
    assert average_path_length(g) == apl_bfs(g)


def test_apl_networkx_cross_check():
    g = nx.connected_watts_strogatz_graph(60, 4, 0.2, seed=3)
    ours = graph(60, list(g.edges()))
    assert average_path_length(ours) == pytest.approx(nx.average_shortest_path_length(g), abs=1e-12)


# ---------------------------------------------------------------- degrees


def test_weighted_degree():
    a, p1, p2, p3, lone = u("a"), NodeId("post", "1"), NodeId("post", "2"), NodeId("post", "3"), u("z")
    g = WeightedGraph([a, p1, p2, p3, lone], [(a, p1, 2.0), (a, p2, 3.0), (a, p3, 1.0)], directed=True)
    assert weighted_degree(g, "out")[a] == 6.0
    assert weighted_degree(g, "in")[p2] == 3.0
    assert weighted_degree(g, "total")[a] == 6.0
    assert weighted_degree(g, "out")[lone] == 0.0
    ug = graph(3, [(0, 1, 2.0), (1, 2, 1.5)])
    assert weighted_degree(ug, "in").scores == weighted_degree(ug, "out").scores
    with pytest.raises(ValueError):
        weighted_degree(g, "sideways")


def test_degree_linearity():
    rng = random.Random(4)
    n = 12
    e1 = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
    rest = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j, 1.0) not in e1]
    e2 = [(i, j, 2.0) for i, j in rest if rng.random() < 0.3]
    d1, d2, d12 = (weighted_degree(graph(n, e)) for e in (e1, e2, e1 + e2))
    for node in d12.scores:
        assert d12[node] == d1[node] + d2[node]


def test_owner_ranks_first_by_out_degree():
    ds = dataset(
        [("p1", "photo", ""), ("p2", "photo", "")],
        [("owner", True), ("fan", False)],
        [("owner", "p1", "comment_reply", 9), ("fan", "p1", "like", 1), ("fan", "p2", "comment", 2)],
    )
    g = build_engagement_graph(ds)
    top, _ = weighted_degree(g, "out").ranked("user")[0]
    assert top == u("owner")


# ---------------------------------------------------------------- eigenvector


def test_eigenvector_examples():
    two = eigenvector_centrality(graph(2, [(0, 1)]))
    assert list(two.scores.values()) == [1.0, 1.0]
    star = eigenvector_centrality(star_graph(3))
    values = list(star.scores.values())
    assert values[0] == 1.0
    assert values[1:] == pytest.approx([1 / math.sqrt(3)] * 3, abs=1e-8)
    assert star.eigenvalue == pytest.approx(math.sqrt(3), abs=1e-8)
    assert star.converged


def test_eigenvector_edgeless_and_empty():
    assert set(eigenvector_centrality(graph(3, [])).scores.values()) == {1.0}
    with pytest.raises(EmptyGraph):
        eigenvector_centrality(graph(0, []))


def test_eigenvector_directed_bipartite_uses_undirected_view():
    ds = dataset([("p", "photo", ""), ("q", "photo", "")], [("a", False), ("b", False)],
                 [("a", "p", "like", 1), ("b", "p", "like", 1), ("b", "q", "like", 1)])
    sc = eigenvector_centrality(build_engagement_graph(ds))
    assert all(v > 0 for v in sc.scores.values())
    assert max(sc.scores.values()) == 1.0


def test_eigenvector_residual_and_normalisation():
    rng = random.Random(8)
    for _ in range(50):
        g = random_graph(rng, rng.randint(2, 40), 0.3)
        sc = eigenvector_centrality(g, tol=1e-9)
        if not sc.converged:
            continue
        v = _vec(sc, g)
        a = dense_undirected(g)
        assert v.max() == 1.0 and v.min() >= 0.0
        if a.any():
            assert np.abs(a @ v - sc.eigenvalue * v).max() / sc.eigenvalue <= 10 * 1e-9


def test_eigenvector_scale_invariance():
    rng = random.Random(12)
    g = random_graph(rng, 25, 0.25)
    scaled = WeightedGraph(g.nodes, [(a, b, 7.5 * w) for a, b, w in g.edges()], directed=False)
    s1, s2 = eigenvector_centrality(g), eigenvector_centrality(scaled)
    assert np.allclose(_vec(s1, g), _vec(s2, scaled), atol=1e-8)
    assert [n for n, _ in s1.ranked()] == [n for n, _ in s2.ranked()]


def test_eigenvector_reports_non_convergence():
    sc = eigenvector_centrality(path_graph(30), tol=1e-15, max_iter=5)
    assert not sc.converged and sc.iterations == 5


def test_eigenvector_matches_oracles_small():
    rng = random.Random(21)
    for _ in range(60):
        g = random_graph(rng, rng.randint(1, 8), 0.5)
        a = dense_undirected(g)
        got = _vec(eigenvector_centrality(g, tol=1e-12, max_iter=100_000), g)
        assert np.abs(got - eigvec_spectral(a)).max() < 1e-6
        assert np.abs(got - eigvec_iterate(a)).max() < 1e-6


# ---------------------------------------------------------------- pagerank


def test_pagerank_examples():
    cycle = graph(5, [(i, (i + 1) % 5) for i in range(5)], directed=True)
    assert np.allclose(list(pagerank(cycle).scores.values()), 0.2, atol=1e-12)
    two = pagerank(graph(2, [(0, 1)], directed=True))
    d = 0.85
    # closed form: a = (1 - d)/2 + d*b/2, b = 1 - a  =>  a = 1/(2 + d)
    assert two.scores[NodeId("user", "000")] == pytest.approx(1 / (2 + d), abs=1e-9)
    assert two.scores[NodeId("user", "001")] == pytest.approx((1 + d) / (2 + d), abs=1e-9)


def test_pagerank_errors():
    with pytest.raises(InvalidDamping):
        pagerank(path_graph(3), damping=1.0)
    with pytest.raises(InvalidDamping):
        pagerank(path_graph(3), damping=0.0)
    with pytest.raises(EmptyGraph):
        pagerank(graph(0, []))


def test_pagerank_uniform_on_complete_graph():
    assert np.allclose(list(pagerank(complete_graph(6)).scores.values()), 1 / 6, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.floats(0.0, 1.0), st.booleans(), st.integers(0, 10_000))
def test_pagerank_is_a_distribution(n, p_edge, directed, seed):
    g = random_graph(random.Random(seed), n, p_edge, directed=directed)
    values = np.array(list(pagerank(g).scores.values()))
    assert (values >= 0).all()
    assert abs(values.sum() - 1.0) <= 1e-9


def test_pagerank_matches_linear_solve():
    rng = random.Random(5)
    for _ in range(60):
        g = random_graph(rng, rng.randint(1, 8), 0.4, directed=rng.random() < 0.6)
        got = _vec(pagerank(g, tol=1e-13, max_iter=100_000), g)
        assert np.abs(got - pagerank_solve(dense_directed(g))).max() < 1e-6


def test_score_map_ordering_and_csv(tmp_path):
    g = graph(4, [(0, 1), (0, 2), (0, 3)])
    deg = weighted_degree(g)
    assert [n.id for n, _ in deg.ranked()] == ["000", "001", "002", "003"]
    deg.write_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_bytes().split(b"\r\n")[:2] == [b"node_id,kind,score", b"000,user,3.0"]


# ---------------------------------------------------------------- summary


def test_topology_summary():
    k4 = topology_summary(complete_graph(4))
    assert (k4.density, k4.avg_path_length, k4.n_components) == (1.0, 1.0, 1)
    two = topology_summary(graph(4, [(0, 1), (2, 3)]))
    assert (two.n_components, two.largest_component_fraction) == (2, 0.5)
    assert json.loads(two.to_json())["n_components"] == 2
    with pytest.raises(EmptyGraph):
        topology_summary(graph(0, []))
