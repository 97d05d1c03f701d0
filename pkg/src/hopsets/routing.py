"""Compact routing: cluster trees over a sampled hierarchy, routed through their roots.

Levels below k/2 get exact clusters by hop-limited exploration. Higher levels
work over the virtual graph on V' = A_{k/2}, whose edges are B-hop host
distances. A path-reporting hopset on that graph lets explorations finish in
few virtual steps, and its stored paths turn virtual trees into host trees.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .congest import VirtualExplorer, run_path_reporting
from .errors import InvalidParams, Unreachable
from .graph import INFINITE, NO_VERTEX, WeightedGraph, components, distance_matrix, exact_distances, multi_bf
from .hopset import HopsetParams
from .treeroute import Tree, TreeLabel, TreeRoutingScheme, build_tree_routing, route_in_tree

MODES = ("sequential", "simulated")


@dataclass(frozen=True)
class RoutingHierarchy:
    n: int
    k: int
    levels: tuple[tuple[int, ...], ...]  # A_0 .. A_{k-1}; A_k is empty
    level_of: tuple[int, ...]
    hop_bound: int

    @property
    def vprime(self) -> tuple[int, ...]:
        return self.levels[self.k // 2]

    def members(self, i: int) -> tuple[int, ...]:
        return self.levels[i] if 0 <= i < self.k else ()

    def owners(self, i: int) -> tuple[int, ...]:
        return tuple(v for v in self.members(i) if self.level_of[v] == i)


def default_hop_bound(n: int, c: float = 4.0) -> int:
    return max(1, math.ceil(c * math.sqrt(n) * math.log(max(n, 2))))


def default_eps(k: int) -> float:
    return 1.0 / (48 * k**4)


def sample_routing_hierarchy(n: int, k: int, seed: int, hop_bound: int | None = None) -> RoutingHierarchy:
    """Each level keeps a vertex of the previous one with probability n^(-1/k).

    A level that comes out empty keeps the previous level's smallest draw, so
    A_{k-1} is never empty and the top clusters span the graph.
    """
    if k < 2 or k % 2:
        raise InvalidParams("k must be an even integer >= 2")
    if n < 1:
        raise InvalidParams("n must be >= 1")
    p = n ** (-1.0 / k)
    cur = np.arange(n)
    levels = [tuple(range(n))]
    for i in range(1, k):
        u = rng.uniform_array(seed, "route-level", cur, i)
        nxt = cur[u < p]
        if len(nxt) == 0:
            nxt = cur[[int(np.argmin(u))]]
        cur = nxt
        levels.append(tuple(int(v) for v in cur))
    level_of = [0] * n
    for i, a in enumerate(levels):
        for v in a:
            level_of[v] = i
    B = default_hop_bound(n) if hop_bound is None else hop_bound
    return RoutingHierarchy(n, k, tuple(levels), tuple(level_of), B)


@dataclass
class ClusterTree:
    root: int
    level: int
    parent: dict[int, int | None]
    estimate: dict[int, float]  # b_root(u), equal to the tree distance

    @property
    def members(self) -> set[int]:
        return set(self.parent)

    def tree(self, g: WeightedGraph) -> Tree:
        weight = {u: g.weight(u, p) for u, p in self.parent.items() if p is not None}
        return Tree(self.root, self.parent, weight)


def _tree_from_candidates(root: int, level: int, cand: dict[int, tuple[float, int | None]],
                          g: WeightedGraph) -> ClusterTree:
    """Fix parents, then recompute estimates down the tree so they are exact tree distances."""
    parent = {u: p for u, (_, p) in cand.items()}
    parent[root] = None
    order = sorted(parent, key=lambda u: (cand[u][0] if u != root else -1.0, u))
    est = {root: 0.0}
    for u in order:
        if u == root:
            continue
        p = parent[u]
        if p not in est:
            raise AssertionError(f"parent {p} of {u} in cluster {root} is not closer to the root")
        est[u] = est[p] + g.weight(p, u)
    return ClusterTree(root, level, parent, est)


def exact_pivots(g: WeightedGraph, rh: RoutingHierarchy, levels) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per level: (pivot id array, distance array); NO_VERTEX / inf for an empty level."""
    out = {}
    for i in levels:
        a = rh.members(i)
        if not a:
            out[i] = (np.full(g.n, NO_VERTEX, dtype=np.int64), np.full(g.n, INFINITE))
            continue
        dv = exact_distances(g, a)
        piv = np.array([NO_VERTEX if o is None else o for o in dv.origin], dtype=np.int64)
        out[i] = (piv, np.array(dv.dist))
    return out


def build_clusters_exact(g: WeightedGraph, rh: RoutingHierarchy, levels, pivots, depth=None) -> list[ClusterTree]:
    """C(v) = {u : d(v,u) < d(u, A_{i+1})} by explorations that relay only inside the cluster."""
    trees = []
    for i in levels:
        owners = rh.owners(i)
        if not owners:
            continue
        limit = pivots[i + 1][1] if i + 1 < rh.k else np.full(g.n, INFINITE)
        hops = depth if depth is not None else math.ceil(4 * g.n ** ((i + 1) / rh.k) * math.log(max(g.n, 2)))
        init = np.full((len(owners), g.n), INFINITE)
        init[np.arange(len(owners)), owners] = 0.0
        run = multi_bf(g.arrays, init, hops, limit=limit)
        for r, v in enumerate(owners):
            inside = np.flatnonzero(run.dist[r] < limit)
            cand = {int(u): (float(run.dist[r, u]), int(run.parent[r, u])) for u in inside if u != v}
            trees.append(_tree_from_candidates(v, i, cand, g))
    return trees


def approx_pivots(g: WeightedGraph, rh: RoutingHierarchy, explorer: VirtualExplorer, hop_edges, beta: int,
                  levels) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """beta virtual steps rooted at A_i, then one B-hop host wave carrying the nearest root."""
    out = {}
    for i in levels:
        a = rh.members(i)
        if not a:
            out[i] = (np.full(g.n, NO_VERTEX, dtype=np.int64), np.full(g.n, INFINITE))
            continue
        st = explorer.explore(hop_edges, a, beta, labelled=True)
        wave = multi_bf(g.arrays, st.dist, rh.hop_bound, label=st.label)
        out[i] = (wave.label[0], wave.dist[0])
    return out


def approx_clusters(g: WeightedGraph, rh: RoutingHierarchy, explorer: VirtualExplorer, hop_edges, beta: int,
                    eps: float, levels, pivots) -> list[ClusterTree]:
    """Limited virtual explorations, unfolded onto host paths, then a final host wave."""
    trees = []
    in_vp = explorer.in_vp
    for i in levels:
        owners = rh.owners(i)
        if not owners:
            continue
        dhat = pivots[i + 1][1] if i + 1 < rh.k else np.full(g.n, INFINITE)
        host_lim = dhat / (1 + eps)
        lim = np.where(in_vp, dhat / (1 + eps) ** 2, host_lim)
        st = explorer.explore(hop_edges, owners, beta, labelled=False, limit=lim)
        init = np.full((len(owners), g.n), INFINITE)
        cands = []
        for r, v in enumerate(owners):
            cand: dict[int, tuple[float, int | None]] = {v: (0.0, None)}
            for u in np.flatnonzero(in_vp & (st.dist[r] < lim)).tolist():
                walk = st.walk(r, u)
                b = 0.0
                for j in range(1, len(walk)):
                    b += g.weight(walk[j - 1], walk[j])
                    x = walk[j]
                    if x not in cand or (b, walk[j - 1]) < cand[x]:
                        cand[x] = (b, walk[j - 1])
            for x, (b, _) in cand.items():
                init[r, x] = b
            cands.append(cand)
        wave = multi_bf(g.arrays, init, rh.hop_bound, limit=host_lim)
        for r, v in enumerate(owners):
            cand = cands[r]
            for x in np.flatnonzero(wave.dist[r] < init[r]).tolist():
                if x in cand or wave.dist[r, x] < host_lim[x]:
                    cand[x] = (float(wave.dist[r, x]), int(wave.parent[r, x]))
            del cand[v]
            trees.append(_tree_from_candidates(v, i, cand, g))
    return trees


# ---------------------------------------------------------------- scheme


@dataclass(frozen=True)
class LevelLabel:
    level: int
    pivot: int
    tree_label: TreeLabel | None  # None when the vertex is outside its pivot's cluster


@dataclass
class RoutingScheme:
    g: WeightedGraph
    k: int
    eps: float
    mode: str
    hierarchy: RoutingHierarchy
    pivots: dict[int, tuple[np.ndarray, np.ndarray]]
    trees: dict[int, ClusterTree]
    tree_schemes: dict[int, TreeRoutingScheme]
    membership: dict[int, tuple[int, ...]]  # vertex -> roots of trees containing it
    labels: dict[int, tuple[LevelLabel, ...]]
    meta: dict = field(default_factory=dict)

    def contains(self, root: int, v: int) -> bool:
        return root in self.trees and v in self.trees[root].parent

    def table_words(self, v: int) -> int:
        """Pivot id + estimate per level, and root id + tree table per membership."""
        return 2 * self.k + sum(1 + self.tree_schemes[r].tables[v].words for r in self.membership[v])

    def label_words(self, v: int) -> int:
        return sum(1 + (lab.tree_label.words if lab.tree_label else 0) for lab in self.labels[v])

    def size_report(self) -> dict:
        n, k = self.g.n, self.k
        lg = math.log2(max(n, 2))
        tw = max(self.table_words(v) for v in range(n))
        lw = max(self.label_words(v) for v in range(n))
        cl = max(len(self.membership[v]) for v in range(n))
        return {
            "max_table_words": tw,
            "table_constant": tw / (n ** (1 / k) * lg),
            "max_label_words": lw,
            "label_constant": lw / (k * lg),
            "max_clusters_per_vertex": cl,
            "cluster_bound": 4 * n ** (1 / k) * lg,
        }

    def to_json(self) -> str:
        recs = []
        for v in range(self.g.n):
            recs.append({
                "vertex": v,
                "pivots": [[int(self.pivots[i][0][v]) if self.pivots[i][0][v] != NO_VERTEX else None,
                            _num(self.pivots[i][1][v])] for i in range(self.k)],
                "trees": {str(r): _table(self.tree_schemes[r].tables[v]) for r in self.membership[v]},
                "label": [{"level": lab.level, "pivot": lab.pivot,
                           "tree_label": None if lab.tree_label is None else
                           [[u, c] for u, c, _ in lab.tree_label.edges]} for lab in self.labels[v]],
            })
        return json.dumps({"k": self.k, "eps": self.eps, "mode": self.mode, "vertices": recs},
                          sort_keys=True, separators=(",", ":"))


def _num(x: float):
    return None if not np.isfinite(x) else float(x)


def _table(t) -> dict:
    return {"parent": t.parent, "parent_port": t.parent_port, "heavy": t.heavy,
            "heavy_port": t.heavy_port, "size": t.size}


def build_routing_scheme(g: WeightedGraph, k: int, eps: float | None = None, seed: int = 0,
                         mode: str = "simulated", *, hop_bound: int | None = None):
    """Returns (scheme, trace dict or None)."""
    if mode not in MODES:
        raise InvalidParams(f"mode must be one of {MODES}")
    if g.n < 1:
        raise InvalidParams("empty graph")
    if len(set(components(g).tolist())) != 1:
        raise InvalidParams("routing needs a connected graph")
    if any(w <= 0 for _, _, w in g.edges):
        raise InvalidParams("routing needs positive edge weights")
    eps = default_eps(k) if eps is None else eps
    rh = sample_routing_hierarchy(g.n, k, seed, hop_bound)
    half = k // 2
    trace = None
    if mode == "sequential":
        pivots = exact_pivots(g, rh, range(k))
        trees = build_clusters_exact(g, rh, range(k), pivots, depth=g.n)
    else:
        pivots = exact_pivots(g, rh, range(half + 1))
        trees = build_clusters_exact(g, rh, range(half), pivots)
        kh = max(1, round(math.log2(k)))
        params = HopsetParams(kh, "improved", eps=eps)
        pr, htrace = run_path_reporting(g, params, eps, vprime=rh.vprime, hop_bound=rh.hop_bound, seed=seed)
        ex = VirtualExplorer(g, rh.vprime, rh.hop_bound, seed, keep_paths=True)
        for (u, v), walk in pr.paths.items():
            ex.register_path(u, v, walk)
        hop_edges = list(pr.hopset.edges)
        beta = pr.hopset.beta
        pivots.update(approx_pivots(g, rh, ex, hop_edges, beta, range(half + 1, k)))
        trees += approx_clusters(g, rh, ex, hop_edges, beta, eps, range(half, k), pivots)
        trace = {"hopset": htrace.to_dict(), "hopset_size": pr.hopset.size, "hopset_beta": beta,
                 "registry_max": pr.max_registry, "hopset_k": kh}
    by_root = {t.root: t for t in trees}
    tree_schemes = {r: build_tree_routing(t.tree(g), "root", host=g) for r, t in by_root.items()}
    membership: dict[int, list[int]] = {v: [] for v in range(g.n)}
    for r in sorted(by_root):
        for v in by_root[r].parent:
            membership[v].append(r)
    labels = {}
    for v in range(g.n):
        labs = []
        for i in range(k):
            z = int(pivots[i][0][v])
            ts = tree_schemes.get(z)
            labs.append(LevelLabel(i, z, ts.labels[v] if ts is not None and v in ts else None))
        labels[v] = tuple(labs)
    scheme = RoutingScheme(g, k, eps, mode, rh, pivots, by_root, tree_schemes,
                           {v: tuple(rs) for v, rs in membership.items()}, labels,
                           {"seed": seed, "hop_bound": rh.hop_bound,
                            "level_sizes": [len(a) for a in rh.levels]})
    if trace is not None:
        mem = max(2 * k + 3 * len(membership[v]) for v in range(g.n))
        trace["peak_memory_words"] = max(trace["hopset"]["peak_memory_words"], mem)
        trace.update(scheme.size_report())
    return scheme, trace


@dataclass(frozen=True)
class RouteResult:
    source: int
    target: int
    path: tuple[int, ...]
    length: float
    exact: float
    level: int
    root: int

    @property
    def stretch(self) -> float:
        return 1.0 if self.exact == 0 else self.length / self.exact

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    def line(self) -> str:
        nums = " ".join(repr(float(x)) for x in (self.stretch, self.length, self.exact))
        return f"{self.source} {self.target} {nums} {self.hops} " + " ".join(map(str, self.path))


def choose_tree(scheme: RoutingScheme, s: int, t: int) -> tuple[int, int]:
    """Level ascent alternating endpoints: level i tries the pivot of one endpoint.

    Stops at the first pivot whose tree holds both endpoints. The top level
    always succeeds because A_k is empty and top clusters span the graph.
    """
    x, y = s, t
    for i in range(scheme.k):
        w = int(scheme.pivots[i][0][x])
        if w != NO_VERTEX and scheme.contains(w, x) and scheme.contains(w, y):
            return i, w
        x, y = y, x
    raise Unreachable(f"no cluster tree holds both {s} and {t}")


def choose_tree_by_label(scheme: RoutingScheme, s: int, t: int) -> tuple[int, int]:
    """Label-only rule: the lowest level whose target pivot tree also holds s."""
    for lab in scheme.labels[t]:
        if lab.tree_label is not None and s in scheme.tree_schemes[lab.pivot]:
            return lab.level, lab.pivot
    raise Unreachable(f"no label entry of {t} lets {s} reach it")


def route(scheme: RoutingScheme, s: int, t: int, *, exact: float | None = None, rule: str = "ascent") -> RouteResult:
    g = scheme.g
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise InvalidParams("vertex out of range")
    if exact is None:
        exact = float(distance_matrix(g, [s])[0, t])
    if not np.isfinite(exact):
        raise Unreachable(f"{s} and {t} are not connected")
    if s == t:
        return RouteResult(s, t, (s,), 0.0, 0.0, 0, s)
    level, w = (choose_tree if rule == "ascent" else choose_tree_by_label)(scheme, s, t)
    ts = scheme.tree_schemes[w]
    path = route_in_tree(ts, s, ts.labels[t])
    length = 0.0
    for a, b in zip(path, path[1:]):
        length += g.weight(a, b)
    return RouteResult(s, t, tuple(path), length, exact, level, w)
