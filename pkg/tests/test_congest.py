import math

import numpy as np
import pytest

from hopsets.congest import (
    CliqueExplorer,
    bf_small_memory,
    level_by_level,
    run_clique_hopset,
    run_congest_hopset,
    run_path_reporting,
    sample_vprime,
)
from hopsets.errors import BudgetExceeded, InvalidParams
from hopsets.graph import WeightedGraph, bounded_bf, distance_matrix, gen_graph
from hopsets.hopset import HopsetParams
from hopsets.verify import verify_hopset
from oracles import materialize_virtual, walk_dp, weight_matrix

IMPROVED = HopsetParams(2, "improved", eps=0.4)


def small(seed, n=48, p=0.12):
    return gen_graph("gnp", n, seed, p=p, largest_cc=True, integer_weights=True)


def test_single_edge_graph():
    g = WeightedGraph(2, [(0, 1, 4.0)])
    h, trace = run_clique_hopset(g, IMPROVED, seed=0)
    assert verify_hopset(g, h, 0.4, h.beta, "all").ok
    assert trace.rounds >= 0


def test_eps_precondition():
    g = small(0)
    with pytest.raises(InvalidParams):
        run_clique_hopset(g, HopsetParams(2, "improved", eps=0.9))
    with pytest.raises(InvalidParams):
        run_clique_hopset(g, IMPROVED, t_stride=0)


@pytest.mark.parametrize("seed", range(3))
def test_clique_output_verifies(seed):
    g = small(seed, 96, 0.06)
    h, trace = run_clique_hopset(g, IMPROVED, seed=seed)
    assert verify_hopset(g, h, 0.4, h.beta, "all").ok
    assert trace.rounds >= sum(r.rounds for r in trace.per_level)


def test_edge_records_are_strict_and_real():
    g = small(4, 80, 0.08)
    res = level_by_level(g, IMPROVED, seed=4)
    d = distance_matrix(g, range(g.n))
    assert res.records
    for rec in res.records:
        assert rec.weight >= d[rec.owner, rec.target] * (1 - 1e-12)
        if not rec.pivot:
            assert rec.weight < rec.threshold
    # H_{i-1} is contained in H_i: owners never repeat across levels of one scale
    last = res.scales[-1]
    owners = {}
    for rec in res.records:
        if rec.scale == last:
            owners.setdefault(rec.owner, set()).add(rec.level)
    assert all(len(v) == 1 for v in owners.values())
    final = {(u, v): w for u, v, w in res.hopset.edges}
    for rec in res.records:
        if rec.scale == last:
            assert final[(rec.owner, rec.target)] == rec.weight


def test_stride_mode_verifies():
    g = small(5, 96, 0.06)
    h, trace = run_clique_hopset(g, IMPROVED, t_stride=2, seed=5)
    assert h.meta["scales"][-1] == math.ceil(math.log2(g.n))
    assert verify_hopset(g, h, 0.4, h.beta, "all").ok


@pytest.mark.parametrize("seed", range(3))
def test_faithful_matches_costed(seed):
    g = small(seed, 64, 0.1)
    a, ta = run_clique_hopset(g, IMPROVED, seed=seed, fidelity="costed")
    b, tb = run_clique_hopset(g, IMPROVED, seed=seed, fidelity="faithful")
    assert a.edges == b.edges
    assert ta.rounds == tb.rounds and tb.messages > 0


def test_trace_is_deterministic():
    g = small(7)
    _, a = run_clique_hopset(g, IMPROVED, seed=7)
    _, b = run_clique_hopset(g, IMPROVED, seed=7)
    assert a.to_dict() == b.to_dict()
    d = a.to_dict()
    assert {"mode", "rounds", "per_level", "peak_memory_words"} <= set(d)
    assert {"l", "i", "rounds", "max_congestion"} <= set(d["per_level"][0])


def test_congest_degenerates_to_clique():
    g = small(3)
    hc, _ = run_clique_hopset(g, IMPROVED, seed=2)
    h1, _ = run_congest_hopset(g, IMPROVED, vprime=range(g.n), hop_bound=1, seed=2)
    assert hc.edges == h1.edges
    # with B >= n the virtual graph is the metric closure of g
    closure = materialize_virtual(g, range(g.n), g.n)
    hc2, _ = run_clique_hopset(closure, IMPROVED, seed=2)
    h2, _ = run_congest_hopset(g, IMPROVED, vprime=range(g.n), hop_bound=g.n, seed=2)
    assert hc2.edges == h2.edges


@pytest.mark.parametrize("seed", range(3))
def test_congest_hopset_valid_for_virtual_graph(seed):
    g = small(seed, 64, 0.08)
    vp = sample_vprime(g.n, 0.4, seed)
    gp = materialize_virtual(g, vp, 4)
    h, trace = run_congest_hopset(g, IMPROVED, vprime=vp, hop_bound=4, seed=seed)
    pairs = [(u, v) for u in vp for v in vp if u != v]
    assert verify_hopset(gp, h, 0.4, h.beta, pairs).ok
    assert trace.mode == "congest"


@pytest.mark.parametrize("seed", range(4))
def test_bf_small_memory_matches_materialized(seed):
    g = small(seed, 60, 0.08)
    vp = sample_vprime(g.n, 0.3, seed)
    B = 3
    rng = np.random.default_rng(seed)
    hop = [(int(u), int(v), float(rng.integers(1, 300))) for u, v in rng.choice(vp, (len(vp), 2)) if u != v]
    gp = materialize_virtual(g, vp, B)
    src = [vp[0]]
    for beta in (1, 2, 5):
        got, trace = bf_small_memory(g, vp, B, hop, src, beta, seed=seed)
        want = walk_dp(weight_matrix(g.n, list(gp.edges) + hop), src, beta)
        assert np.array_equal(got[vp], want[vp])
        assert trace.peak_memory_words <= trace.budget["memory_bound"]


def test_bf_small_memory_equals_host_bf():
    g = small(1)
    got, _ = bf_small_memory(g, range(g.n), g.n, [], [0], 3)
    # V' = V and B >= n: one virtual step is a full host shortest-path pass
    assert np.array_equal(got, distance_matrix(g, [0])[0])
    got1, _ = bf_small_memory(g, range(g.n), 1, [], [0], 3)
    assert np.array_equal(got1, np.array(bounded_bf(g, [0], 3).dist))


def test_bf_small_memory_budget_error():
    g = small(1)
    with pytest.raises(BudgetExceeded):
        bf_small_memory(g, range(g.n), 2, [], [0], 3, memory_factor=0.01)


def _check_path_reporting(g, pr):
    weights = {(u, v): w for u, v, w in pr.hopset.edges}
    assert set(pr.paths) == set(weights)
    on_path = {}
    for (u, v), walk in pr.paths.items():
        assert walk[0] == u and walk[-1] == v
        total = sum(g.weight(a, b) for a, b in zip(walk, walk[1:]))
        assert total == pytest.approx(weights[(u, v)], rel=1e-12)
        for x in walk:
            on_path.setdefault(x, set()).add((u, v))
    for x, entries in pr.registry.items():
        assert {e.edge for e in entries} == on_path[x]
        for e in entries:
            assert e.to_owner + e.to_target == pytest.approx(weights[e.edge], rel=1e-12)
    assert set(pr.registry) == set(on_path)


@pytest.mark.parametrize("seed", range(2))
def test_path_reporting(seed):
    g = small(seed, 100, 0.05)
    vp = sample_vprime(g.n, g.n ** -0.5, seed)
    pr, trace = run_path_reporting(g, IMPROVED, vprime=vp, hop_bound=8, seed=seed)
    _check_path_reporting(g, pr)
    gp = materialize_virtual(g, vp, 8)
    pairs = [(u, v) for u in vp for v in vp if u != v]
    assert verify_hopset(gp, pr.hopset, 0.4, pr.hopset.beta, pairs).ok
    assert trace.budget["registry_max"] == pr.max_registry


def test_clique_explorer_limits():
    g = gen_graph("path", 6, unweighted=True)
    ex = CliqueExplorer(g)
    st = ex.explore([], [0], 10, labelled=False, limit=np.array([[9, 9, 1.5, 9, 9, 9]]))
    # vertex 2 hears the message but does not relay it
    assert st.dist[0, 2] == 2 and np.isinf(st.dist[0, 3])
