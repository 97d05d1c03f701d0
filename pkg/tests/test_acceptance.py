"""Acceptance criteria 1-11. Each test records one PASS/FAIL line (printed in the summary)."""
import math
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from conftest import record
from hopsets.cli import main
from hopsets.congest import run_clique_hopset, run_path_reporting, sample_vprime
from hopsets.graph import bounded_bf, distance_matrix, gen_graph
from hopsets.hopset import HopsetParams, build_hopset
from hopsets.routing import build_routing_scheme, route
from hopsets.treeroute import Tree, build_tree_routing, route_in_tree
from hopsets.verify import verify_hopset
from oracles import materialize_virtual, random_tree, walk_dp, weight_matrix

TOL = 1e-9


# ---------------------------------------------------------------- 1


def small_sweep():
    out = []
    for seed in range(40):
        for n in (3, 5, 8, 12):
            out.append(gen_graph("gnp", n, seed, p=(0.25, 0.45, 0.7)[seed % 3]))
        if seed < 12:
            out.append(gen_graph("tree", seed + 1, seed))
            out.append(gen_graph("path", seed + 1, seed))
        if seed < 8:
            out.append(gen_graph("grid", 12, seed, rows=3 + seed % 2, cols=4 if seed % 2 == 0 else 3))
            out.append(gen_graph("gnp", 12, seed, p=0.3, integer_weights=True, wmin=0, wmax=3))
    return out


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    graphs = small_sweep()
    mismatches = 0
    for g in graphs:
        w = weight_matrix(g.n, g.edges)
        source_sets = [[s] for s in range(g.n)] + [list(range(0, g.n, 2))]
        for beta in range(12):
            for src in source_sets:
                if not np.array_equal(np.array(bounded_bf(g, src, beta).dist), walk_dp(w, src, beta)):
                    mismatches += 1
    dt = time.perf_counter() - t0
    ok = len(graphs) >= 200 and mismatches == 0 and dt < 60
    record(1, ok, f"{len(graphs)} graphs, beta 0..11, {mismatches} mismatches, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2, 3


@lru_cache(maxsize=None)
def big_instance(seed):
    return gen_graph("gnp", 1024, seed, p=0.01, wmin=1, wmax=100)


@pytest.mark.parametrize("k", [2, 3])
def test_criterion_02_basic_stretch(k):
    t0 = time.perf_counter()
    params = HopsetParams(k, "basic", eps=0.5)
    beta = params.sequential_beta()
    assert beta == round((24 * k / 0.5) ** (k - 1))
    viol, hist, pairs = 0, {}, 0
    for seed in range(10):
        g = big_instance(seed)
        h = build_hopset(g, params, seed)
        rep = verify_hopset(g, h, 0.5, beta, "sample", seed=seed, count=200)
        viol += len(rep.violations)
        pairs += rep.pairs
        for b, c in rep.histogram().items():
            hist[int(b)] = hist.get(int(b), 0) + c
    dt = time.perf_counter() - t0
    ok = viol == 0 and dt < 300
    hs = ", ".join(f"{b}:{hist[b]}" for b in sorted(hist))
    prev = _merge(2, ok, f"k={k}: beta={beta}, {pairs} pairs, {viol} violations, min-beta histogram {{{hs}}}, {dt:.0f}s")
    assert ok, prev


@pytest.mark.parametrize("k", [2, 3])
def test_criterion_03_improved_size(k):
    params = HopsetParams(k, "improved", eps=0.5)
    sizes = [build_hopset(big_instance(seed), params, seed).size for seed in range(10)]
    bound = 3 * 1024 ** (1 + 1 / (2**k - 1))
    mean = float(np.mean(sizes))
    ok = mean <= 2 * bound
    _merge(3, ok, f"k={k}: mean |H| {mean:.0f} vs 3n^(1+nu) = {bound:.0f} (x2 slack), per seed {sizes}")
    assert ok


_parts: dict[int, list[tuple[bool, str]]] = {}


def _merge(c, ok, detail):
    _parts.setdefault(c, []).append((ok, detail))
    parts = _parts[c]
    record(c, all(p for p, _ in parts), "; ".join(d for _, d in parts))
    return detail


# ---------------------------------------------------------------- 4, 5


def test_criterion_04_distributed_validity():
    t0 = time.perf_counter()
    params = HopsetParams(2, "efficient", rho=0.5, eps=0.4, strict_rho=False)
    consts, viol, betas = [], 0, set()
    for seed in range(5):
        g = gen_graph("gnp", 256, seed, p=0.05)
        h, trace = run_clique_hopset(g, params, 0.4, seed=seed)
        kp, step = h.meta["k_prime"], h.meta["eps_step"]
        assert h.beta == math.ceil((45 * kp / step) ** kp - 1e-9)
        betas.add(h.beta)
        viol += len(verify_hopset(g, h, 0.4, h.beta, "all", with_min_beta=False).violations)
        consts.append(trace.budget["measured_constant"])
    dt = time.perf_counter() - t0
    ok = viol == 0 and max(consts) <= 20 and dt < 600
    record(4, ok, f"5 seeds, beta={sorted(betas)}, {viol} violations, rounds/budget max {max(consts):.3f} "
                  f"(limit 20), {dt:.0f}s")
    assert ok


def test_criterion_05_fidelity_agreement():
    cases = [HopsetParams(2, "improved", eps=0.4), HopsetParams(3, "basic", eps=0.4),
             HopsetParams(2, "efficient", rho=0.5, eps=0.4, strict_rho=False)]
    same, total = 0, 0
    for seed in range(4):
        g = gen_graph("gnp", 128, seed, p=0.05)
        for params in cases:
            a, _ = run_clique_hopset(g, params, seed=seed, fidelity="costed")
            b, _ = run_clique_hopset(g, params, seed=seed, fidelity="faithful")
            total += 1
            same += a.edges == b.edges
    ok = same == total
    record(5, ok, f"{same}/{total} identical hopsets at n=128")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion_06_path_reporting():
    bad_verify = bad_sum = bad_reg = 0
    info = []
    params = HopsetParams(2, "improved", eps=0.4)
    for seed, (n, B) in enumerate([(256, 16), (200, 8), (256, 256)]):
        g = gen_graph("gnp", n, seed, p=0.03, largest_cc=True)
        vp = sample_vprime(g.n, g.n ** -0.5, seed)
        pr, trace = run_path_reporting(g, params, vprime=vp, hop_bound=B, seed=seed)
        gp = materialize_virtual(g, vp, B)
        pairs = [(u, v) for u in vp for v in vp if u != v]
        bad_verify += len(verify_hopset(gp, pr.hopset, 0.4, pr.hopset.beta, pairs).violations)
        weights = {(u, v): w for u, v, w in pr.hopset.edges}
        on_path = {}
        for e, walk in pr.paths.items():
            s = sum(g.weight(a, b) for a, b in zip(walk, walk[1:]))
            bad_sum += not (walk[0] == e[0] and walk[-1] == e[1] and math.isclose(s, weights[e], rel_tol=1e-12))
            for j, x in enumerate(walk):
                on_path.setdefault(x, {}).setdefault(e, j)
        for x, edges in on_path.items():
            entries = {r.edge: r for r in pr.registry.get(x, [])}
            bad_reg += set(entries) != set(edges)
            for e, j in edges.items():
                r = entries.get(e)
                walk = pr.paths[e]
                if r is None or not math.isclose(r.to_owner + r.to_target, weights[e], rel_tol=1e-12):
                    bad_reg += 1
                elif r.prev != (walk[j - 1] if j else None):
                    bad_reg += 1
        bad_reg += len(set(pr.registry) - set(on_path))
        info.append(f"n={g.n} |V'|={len(vp)} B={B} |H|={pr.hopset.size} registry max {pr.max_registry} "
                    f"(C={trace.budget['registry_constant']:.2f})")
    ok = bad_verify == bad_sum == bad_reg == 0
    record(6, ok, f"verify {bad_verify}, path sums {bad_sum}, registry {bad_reg} failures; " + "; ".join(info))
    assert ok


# ---------------------------------------------------------------- 7, 8, 10


ROUTING_CASES = [(k, n, seed) for k in (2, 4) for n in (256, 512) for seed in (0, 1)]


@lru_cache(maxsize=None)
def routing_case(k, n, seed):
    g = gen_graph("gnp", n, seed, p=4 / n, largest_cc=True)
    scheme, trace = build_routing_scheme(g, k, seed=seed)
    d = distance_matrix(g, range(g.n))
    return g, scheme, trace, d


def test_criterion_07_cluster_sandwich():
    t0 = time.perf_counter()
    bad, roots = 0, 0
    for case in ROUTING_CASES:
        g, scheme, _, d = routing_case(*case)
        k, eps = scheme.k, scheme.eps
        assert eps == 1 / (48 * k**4)
        for r, t in scheme.trees.items():
            if t.level < k // 2:
                continue
            roots += 1
            nxt = list(scheme.hierarchy.members(t.level + 1))
            dn = d[:, nxt].min(axis=1) if nxt else np.full(g.n, np.inf)
            members = np.zeros(g.n, dtype=bool)
            members[list(t.parent)] = True
            inner = d[r] < dn / (1 + 6 * eps) * (1 - TOL)
            outer = d[r] < dn * (1 + TOL)
            bad += int((inner & ~members).sum() + (members & ~outer).sum())
    dt = time.perf_counter() - t0
    ok = bad == 0
    record(7, ok, f"{len(ROUTING_CASES)} instances (k in 2,4; n<=512), {roots} high-level roots, "
                  f"{bad} sandwich violations, {dt:.0f}s")
    assert ok


def test_criterion_08_routing_stretch():
    t0 = time.perf_counter()
    worst = {2: 1.0, 4: 1.0}
    invalid = over = routes = 0
    for case in ROUTING_CASES:
        g, scheme, _, d = routing_case(*case)
        k = scheme.k
        adj = [dict(a) for a in g.adjacency]
        for s in range(g.n):
            for t in range(g.n):
                if not np.isfinite(d[s, t]):
                    continue
                r = route(scheme, s, t, exact=float(d[s, t]))
                routes += 1
                p = r.path
                length = 0.0
                valid = p[0] == s and p[-1] == t
                for a, b in zip(p, p[1:]):
                    w = adj[a].get(b)
                    if w is None:
                        valid = False
                        break
                    length += w
                invalid += not (valid and math.isclose(length, r.length, rel_tol=1e-12))
                worst[k] = max(worst[k], r.stretch)
                over += r.stretch > (4 * k - 5 + 0.5) * (1 + TOL)
    dt = time.perf_counter() - t0
    ok = invalid == 0 and over == 0 and dt < 600
    record(8, ok, f"{routes} routes, max stretch k=2: {worst[2]:.3f} (<= 3.5), k=4: {worst[4]:.3f} (<= 11.5), "
                  f"{invalid} invalid paths, {dt:.0f}s")
    assert ok


def test_criterion_10_clusters_per_vertex():
    worst = 0.0
    ok = True
    parts = []
    for case in ROUTING_CASES:
        g, scheme, _, _ = routing_case(*case)
        rep = scheme.size_report()
        ok &= rep["max_clusters_per_vertex"] <= rep["cluster_bound"]
        worst = max(worst, rep["max_clusters_per_vertex"] / rep["cluster_bound"])
        parts.append(f"k={case[0]} n={g.n}: {rep['max_clusters_per_vertex']}/{rep['cluster_bound']:.0f}")
    record(10, ok, f"max ratio to 4n^(1/k)log2 n = {worst:.3f}; " + ", ".join(parts))
    assert ok


# ---------------------------------------------------------------- 9


def tree_sizes():
    rng = np.random.default_rng(9)
    return [1000, 1000] + [int(x) for x in rng.integers(2, 301, 98)]


def test_criterion_09_tree_routing():
    t0 = time.perf_counter()
    wrong = label_over = table_bad = 0
    peak_c = 0.0
    sizes = tree_sizes()
    for j, n in enumerate(sizes):
        rng = np.random.default_rng(1000 + j)
        parent = random_tree(n, rng)
        weight = {v: float(rng.integers(1, 50)) for v, p in parent.items() if p is not None}
        root = next(v for v, p in parent.items() if p is None)
        tree = Tree(root, parent, weight)
        kids = [v for v in parent if parent[v] is not None]
        mat = csr_matrix(([weight[v] for v in kids], (kids, [parent[v] for v in kids])), shape=(n, n))
        dist = shortest_path(mat, directed=False)
        edge_w = {}
        for v in kids:
            edge_w[(v, parent[v])] = edge_w[(parent[v], v)] = weight[v]
        rt = build_tree_routing(tree, "root", simulate=True, seed=j)
        ex = build_tree_routing(tree, "exact")
        lg = math.ceil(math.log2(n))
        label_over += sum(len(lab.edges) > lg for lab in rt.labels.values())
        table_bad += sum(t.id_words != 2 or t.words != 4 for t in rt.tables.values())
        peak_c = max(peak_c, rt.sim["peak_memory_words"] / max(1, lg))
        for ts, mode in ((rt, "root"), (ex, "exact")):
            for x in range(n):
                for y in range(n):
                    p = route_in_tree(ts, x, ts.labels[y])
                    if p[0] != x or p[-1] != y:
                        wrong += 1
                        continue
                    length = 0.0
                    for a, b in zip(p, p[1:]):
                        length += edge_w.get((a, b), math.nan)
                    if x == y:
                        want = 0.0
                    elif mode == "root":
                        want = dist[x, root] + dist[root, y]
                    else:
                        want = dist[x, y]
                    wrong += not math.isclose(length, want, rel_tol=1e-9, abs_tol=1e-9)
    dt = time.perf_counter() - t0
    ok = wrong == 0 and label_over == 0 and table_bad == 0 and peak_c <= 8
    record(9, ok, f"{len(sizes)} trees (n<=1000), {wrong} wrong routes, {label_over} long labels, "
                  f"{table_bad} bad tables, peak memory {peak_c:.2f}*log2 n (c<=8), {dt:.0f}s")
    assert ok


# ---------------------------------------------------------------- 11


def test_criterion_11_determinism(tmp_path):
    def pipeline(d):
        d.mkdir()
        g, h = str(d / "g.txt"), str(d / "h.txt")
        cmds = [
            ["gen", "--kind", "gnp", "--n", "120", "--p", "0.06", "--seed", "3", "--largest-cc", "-o", g],
            ["hopset", g, "--k", "2", "--variant", "improved", "--seed", "3", "-o", h,
             "--report", str(d / "hopset.json")],
            ["verify", g, "--hopset", h, "--eps", "0.5", "--beta", "96", "-o", str(d / "verify.json")],
            ["hopset", g, "--method", "clique", "--k", "2", "--variant", "improved", "--eps", "0.4",
             "--seed", "3", "-o", str(d / "hc.txt")],
            ["simulate", g, "--model", "clique", "--fidelity", "faithful", "--variant", "improved",
             "--seed", "3", "-o", str(d / "sim.json")],
            ["simulate", g, "--model", "congest", "--vprime-prob", "0.3", "--hop-bound", "6",
             "--variant", "improved", "--seed", "3", "-o", str(d / "congest.json")],
            ["simulate", g, "--model", "path-reporting", "--vprime-prob", "0.2", "--hop-bound", "6",
             "--variant", "improved", "--seed", "3", "-o", str(d / "paths.json")],
            ["route", g, "--k", "2", "--seed", "3", "--count", "40", "-o", str(d / "routes.txt"),
             "--report", str(d / "route.json"), "--scheme-out", str(d / "scheme.json")],
            ["bench", "--n", "150", "--p", "0.05", "--seeds", "2", "-o", str(d / "bench.json")],
        ]
        codes = [main(c) for c in cmds]
        return codes, {f.name: f.read_bytes() for f in sorted(d.iterdir())}

    c1, a = pipeline(tmp_path / "one")
    c2, b = pipeline(tmp_path / "two")
    # configs echo file paths; compare with the run directory masked
    norm = {k: v.replace(b"/one/", b"/X/") for k, v in a.items()}
    norm2 = {k: v.replace(b"/two/", b"/X/") for k, v in b.items()}
    diff = sorted(k for k in norm if norm[k] != norm2.get(k))
    ok = c1 == c2 and all(c == 0 for c in c1) and not diff
    record(11, ok, f"{len(a)} artifacts from 9 commands, exit codes {c1}, differing: {diff or 'none'}")
    assert ok
