import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopsets.errors import MalformedHeader, NegativeWeight, SelfLoop, VertexOutOfRange
from hopsets.graph import (
    WeightedGraph,
    bounded_bf,
    distance_matrix,
    exact_distances,
    gen_graph,
    parse_graph,
    truncated_dijkstra,
)
from oracles import floyd_warshall, walk_dp, weight_matrix


def test_parse_roundtrip():
    g = parse_graph("3 2\n0 1 2.5\n1 2 4\n")
    assert g.n == 3 and g.m == 2
    assert parse_graph(g.to_text()).edges == g.edges


def test_parallel_edges_keep_min():
    g = WeightedGraph(2, [(0, 1, 5.0), (1, 0, 3.0)])
    assert g.edges == ((0, 1, 3.0),)


@pytest.mark.parametrize("text,err", [
    ("", MalformedHeader),
    ("2 1\n0 5 1\n", VertexOutOfRange),
    ("2 1\n0 1 -1\n", NegativeWeight),
    ("2 1\n1 1 1\n", SelfLoop),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_graph(text)


def test_generators_are_deterministic():
    a = gen_graph("gnp", 60, 3, p=0.1)
    b = gen_graph("gnp", 60, 3, p=0.1)
    assert a.to_text() == b.to_text()
    assert gen_graph("grid", 16).m == 24
    assert gen_graph("path", 4).m == 3
    assert gen_graph("tree", 30, 1).m == 29


def test_integer_weights():
    g = gen_graph("gnp", 40, 1, p=0.2, integer_weights=True)
    assert all(float(w).is_integer() for _, _, w in g.edges)


def test_triangle_hop_limit():
    g = WeightedGraph(3, [(0, 1, 5), (1, 2, 5), (0, 2, 100)])
    assert bounded_bf(g, [0], 1).dist[2] == 100
    t = bounded_bf(g, [0], 2)
    assert t.dist[2] == 10 and t.path(2) == [0, 1, 2]


def test_dijkstra_matches_floyd_warshall():
    g = gen_graph("gnp", 40, 5, p=0.15)
    fw = floyd_warshall(g)
    assert np.allclose(distance_matrix(g, range(g.n)), fw, rtol=1e-12, atol=0)
    dv = exact_distances(g, [3, 7])
    assert np.allclose(dv.dist, np.minimum(fw[3], fw[7]))


def test_truncated_dijkstra_is_strict():
    g = gen_graph("path", 6, unweighted=True)
    assert truncated_dijkstra(g, 0, 3) == {0: 0.0, 1: 1.0, 2: 2.0}


graphs = st.builds(
    lambda kind, n, seed: gen_graph(kind, n, seed, p=0.4) if kind == "gnp" else gen_graph(kind, n, seed),
    st.sampled_from(["gnp", "path", "tree"]), st.integers(1, 10), st.integers(0, 10**6))


@settings(max_examples=60, deadline=None)
@given(graphs, st.integers(0, 10))
def test_bounded_bf_matches_walk_dp(g, beta):
    w = weight_matrix(g.n, g.edges)
    t = bounded_bf(g, [0], beta)
    assert np.array_equal(np.array(t.dist), walk_dp(w, [0], beta))
    for v in range(g.n):
        if math.isfinite(t.dist[v]) and v != 0:
            p = t.path(v)
            assert len(p) - 1 <= beta
            assert math.isclose(sum(g.weight(a, b) for a, b in zip(p, p[1:])), t.dist[v])


@settings(max_examples=40, deadline=None)
@given(graphs, st.integers(0, 9))
def test_more_hops_never_hurt(g, beta):
    a = np.array(bounded_bf(g, [0], beta).dist)
    b = np.array(bounded_bf(g, [0], beta + 1).dist)
    exact = distance_matrix(g, [0])[0]
    assert np.all(b <= a) and np.all(a >= exact)
    assert np.array_equal(np.array(bounded_bf(g, [0], max(g.n - 1, 0)).dist), exact)
