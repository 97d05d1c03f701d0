"""Tree routing with constant-size tables and heavy-path labels.

Every vertex stores its parent and its heavy child (the child with the largest
subtree, ties to the smaller id). The label of y lists the non-heavy edges on
the root-to-y path, so it has at most log2 of the tree size entries.

Two modes. "root" routes x -> root -> y. "exact" also stores DFS entry/exit
times and turns downward at the lowest common ancestor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import rng
from .errors import InvalidParams, MalformedTree, TargetNotInTree
from .graph import WeightedGraph

MODES = ("root", "exact")


@dataclass(frozen=True)
class Tree:
    """A rooted tree over global vertex ids; weight[v] is the edge to parent[v]."""

    root: int
    parent: Mapping[int, int | None]
    weight: Mapping[int, float] = field(default_factory=dict)

    @staticmethod
    def from_graph(g: WeightedGraph, root: int = 0) -> "Tree":
        """BFS orientation of a forest component; g must be acyclic there."""
        parent: dict[int, int | None] = {root: None}
        weight: dict[int, float] = {}
        stack = [root]
        while stack:
            u = stack.pop()
            for v, w in g.adjacency[u]:
                if v == parent[u]:
                    continue
                if v in parent:
                    raise MalformedTree(f"cycle through edge ({u},{v})")
                parent[v], weight[v] = u, w
                stack.append(v)
        return Tree(root, parent, weight)


@dataclass(frozen=True)
class TableEntry:
    parent: int | None
    parent_port: int | None
    heavy: int | None
    heavy_port: int | None
    size: int
    dfs: tuple[int, int] | None = None  # entry, exit (exact mode)

    @property
    def id_words(self) -> int:
        return 2

    @property
    def words(self) -> int:
        return 4 + (2 if self.dfs else 0)


@dataclass(frozen=True)
class TreeLabel:
    target: int
    edges: tuple[tuple[int, int, int | None], ...]  # (u, child, port at u), root to target
    dfs_entry: int | None = None

    @property
    def words(self) -> int:
        return 1 + 3 * len(self.edges) + (1 if self.dfs_entry is not None else 0)


@dataclass
class TreeRoutingScheme:
    root: int
    mode: str
    tables: dict[int, TableEntry]
    labels: dict[int, TreeLabel]
    weight: Mapping[int, float]
    sim: dict | None = None

    def __contains__(self, v: int) -> bool:
        return v in self.tables

    @property
    def size(self) -> int:
        return len(self.tables)

    def depth_distance(self, v: int) -> float:
        """d_T(root, v)."""
        d = 0.0
        while v != self.root:
            d += self.weight.get(v, 1.0)
            v = self.tables[v].parent
        return d

    def path_length(self, path: list[int]) -> float:
        total = 0.0
        for a, b in zip(path, path[1:]):
            if self.tables[a].parent == b:
                total += self.weight.get(a, 1.0)
            elif self.tables[b].parent == a:
                total += self.weight.get(b, 1.0)
            else:
                raise MalformedTree(f"({a},{b}) is not a tree edge")
        return total


def _children(tree: Tree) -> dict[int, list[int]]:
    if tree.root not in tree.parent or tree.parent[tree.root] is not None:
        raise MalformedTree("root must map to no parent")
    kids: dict[int, list[int]] = {v: [] for v in tree.parent}
    for v, p in tree.parent.items():
        if v == tree.root:
            continue
        if p is None or p not in kids:
            raise MalformedTree(f"parent of {v} is not in the tree")
        kids[p].append(v)
    for k in kids.values():
        k.sort()
    return kids


def _preorder(tree: Tree, kids: dict[int, list[int]]) -> list[int]:
    order, stack = [], [tree.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(reversed(kids[u]))
    if len(order) != len(tree.parent):
        raise MalformedTree("parent pointers do not form a single tree")
    return order


def _port(host: WeightedGraph | None, u: int, v: int) -> int | None:
    return host.port(u, v) if host is not None else None


def build_tree_routing(tree: Tree, mode: str = "root", *, host: WeightedGraph | None = None,
                       simulate: bool = False, q: float | None = None, seed: int = 0) -> TreeRoutingScheme:
    if mode not in MODES:
        raise InvalidParams(f"mode must be one of {MODES}")
    kids = _children(tree)
    order = _preorder(tree, kids)
    size = {v: 1 for v in order}
    for v in reversed(order):
        p = tree.parent[v]
        if p is not None:
            size[p] += size[v]
    heavy = {u: (min(kids[u], key=lambda c: (-size[c], c)) if kids[u] else None) for u in order}
    dfs: dict[int, tuple[int, int]] = {}
    if mode == "exact":
        clock = 0
        stack = [(tree.root, False)]
        entry = {}
        while stack:
            u, done = stack.pop()
            if done:
                dfs[u] = (entry[u], clock)
                clock += 1
                continue
            entry[u] = clock
            clock += 1
            stack.append((u, True))
            stack.extend((c, False) for c in reversed(kids[u]))
    labels: dict[int, TreeLabel] = {}
    path_edges: dict[int, tuple] = {tree.root: ()}
    for v in order:
        p = tree.parent[v]
        if p is not None:
            e = path_edges[p]
            path_edges[v] = e if heavy[p] == v else e + ((p, v, _port(host, p, v)),)
        labels[v] = TreeLabel(v, path_edges[v], dfs[v][0] if dfs else None)
    tables = {
        v: TableEntry(tree.parent[v], _port(host, v, tree.parent[v]) if tree.parent[v] is not None else None,
                      heavy[v], _port(host, v, heavy[v]) if heavy[v] is not None else None,
                      size[v], dfs.get(v))
        for v in order
    }
    ts = TreeRoutingScheme(tree.root, mode, tables, labels, dict(tree.weight))
    if simulate:
        ts.sim = simulate_root_tree_construction(tree, q=q, seed=seed)
        _check_sim(ts)
    return ts


def route_in_tree(ts: TreeRoutingScheme, x: int, label: TreeLabel) -> list[int]:
    """Vertex sequence from x to label.target; [x] when they coincide."""
    y = label.target
    if x not in ts or y not in ts:
        raise TargetNotInTree(f"{x} or {y} is not in the tree rooted at {ts.root}")
    turns = {u: c for u, c, _ in label.edges}
    path = [x]
    z = x
    if x == y:
        return path
    if ts.mode == "exact":
        while not (ts.tables[z].dfs[0] <= label.dfs_entry <= ts.tables[z].dfs[1]):
            z = ts.tables[z].parent
            path.append(z)
    else:
        while z != ts.root:
            z = ts.tables[z].parent
            path.append(z)
    steps = 0
    while z != y:
        z = turns.get(z, ts.tables[z].heavy)
        if z is None or steps > ts.size:
            raise TargetNotInTree(f"label of {y} does not lead to it from {ts.root}")
        path.append(z)
        steps += 1
    return path


# ---------------------------------------------------------------- small-memory construction


def simulate_root_tree_construction(tree: Tree, *, q: float | None = None, seed: int = 0) -> dict:
    """Distributed construction of sizes and labels with O(log n) words per vertex.

    U = root plus a q-sample of tree vertices; T_w is the part of the tree whose
    nearest U-ancestor is w. Sizes and labels are first computed inside each T_w,
    then completed over the virtual tree T' on U by pointer jumping: in round i
    every x in U broadcasts (s_x, a_i(x)), ancestors hearing from their 2^i-
    descendants add the sizes, and a_{i+1}(x) = a_i(a_i(x)).
    """
    kids = _children(tree)
    order = _preorder(tree, kids)
    n = len(order)
    q = 1 / math.sqrt(n) if q is None else q
    draws = rng.uniform_array(seed, "tree-u", np.array(order))
    in_u = {v: bool(d < q) for v, d in zip(order, draws)}
    in_u[tree.root] = True
    owner: dict[int, int] = {}
    height: dict[int, int] = {}
    for v in order:
        p = tree.parent[v]
        owner[v] = v if in_u[v] else owner[p]
        height[v] = 0 if in_u[v] else height[p] + 1
    U = [v for v in order if in_u[v]]
    vparent = {w: (owner[tree.parent[w]] if tree.parent[w] is not None else None) for w in U}
    lg = max(1, math.ceil(math.log2(max(n, 2))))
    mem = {v: 0 for v in order}

    def note(v, words):
        mem[v] = max(mem[v], words)

    # local sizes inside T_w (convergecast)
    local = {v: 1 for v in order}
    for v in reversed(order):
        p = tree.parent[v]
        if p is not None and owner[p] == owner[v] and not in_u[v]:
            local[p] += local[v]
        note(v, 4)
    # pointer jumping on T' for subtree sizes
    s = {x: local[x] for x in U}
    anc = {x: [vparent[x]] for x in U}
    for i in range(lg + 1):
        snap_s, snap_a = dict(s), {x: anc[x][-1] for x in U}
        for w in U:
            a = snap_a[w]
            if a is not None:
                s[a] += snap_s[w]
        for x in U:
            a = snap_a[x]
            anc[x].append(snap_a[a] if a is not None else None)
        for x in U:
            note(x, 2 + len(anc[x]))
    # second convergecast: U sizes feed their T-parents
    size = {v: 1 for v in order}
    for v in reversed(order):
        if in_u[v]:
            size[v] = s[v]
        else:
            size[v] = 1 + sum(size[c] for c in kids[v])
    # U vertices must agree with the recomputed sums
    for v in U:
        if size[v] != 1 + sum(size[c] for c in kids[v]):
            raise AssertionError(f"pointer-jumping size of {v} is inconsistent")
    heavy = {u: (min(kids[u], key=lambda c: (-size[c], c)) if kids[u] else None) for u in order}
    # partial labels from each T' parent x down to its T' children
    partial: dict[int, tuple] = {}
    for v in order:
        p = tree.parent[v]
        if p is None:
            partial[v] = ()
            continue
        base = () if in_u[p] else partial[p]
        partial[v] = base if heavy[p] == v else base + ((p, v),)
        note(v, 6 + 2 * len(partial[v]))
    # pointer jumping for full labels of U vertices
    full = {x: partial[x] for x in U}
    for i in range(lg + 1):
        snap = dict(full)
        for x in U:
            a = anc[x][i]
            if a is not None:
                full[x] = snap[a] + full[x]
        for x in U:
            note(x, 2 + len(anc[x]) + 2 * len(full[x]))
    labels = {}
    for v in order:
        labels[v] = full[owner[v]] + (partial[v] if not in_u[v] else ())
        note(v, 4 + 2 * len(labels[v]))
    hmax = max(height.values())
    rounds = 2 * (hmax + 1) * 3 + 2 * (lg + 1) * (len(U) + hmax + 1)
    return {
        "q": q,
        "virtual_vertices": len(U),
        "max_component_height": hmax,
        "rounds": rounds,
        "peak_memory_words": max(mem.values()),
        "memory_bound_words": 8 * lg,
        "size": size,
        "heavy": heavy,
        "labels": labels,
    }


def _check_sim(ts: TreeRoutingScheme) -> None:
    sim = ts.sim
    for v, t in ts.tables.items():
        if sim["size"][v] != t.size or sim["heavy"][v] != t.heavy:
            raise AssertionError(f"simulated construction disagrees at {v}")
        if sim["labels"][v] != tuple((u, c) for u, c, _ in ts.labels[v].edges):
            raise AssertionError(f"simulated label of {v} disagrees")
    if sim["peak_memory_words"] > sim["memory_bound_words"]:
        raise AssertionError(f"peak memory {sim['peak_memory_words']} exceeds {sim['memory_bound_words']}")
