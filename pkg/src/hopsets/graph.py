"""Weighted undirected graphs, exact and hop-bounded distances, generators."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .errors import (
    EmptySourceSet,
    InvalidParams,
    MalformedHeader,
    NegativeWeight,
    SelfLoop,
    VertexOutOfRange,
)

INFINITE = math.inf
NO_VERTEX = np.iinfo(np.int64).max  # "no label / no parent" inside numpy tables


def _collapse(n: int, edges: Iterable[tuple[int, int, float]]) -> dict[tuple[int, int], float]:
    best: dict[tuple[int, int], float] = {}
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRange(f"edge ({u},{v}) outside [0,{n})")
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        if not w >= 0 or math.isnan(w):
            raise NegativeWeight(f"edge ({u},{v}) has weight {w}")
        key = (u, v) if u < v else (v, u)
        old = best.get(key)
        if old is None or w < old:
            best[key] = w
    return best


class WeightedGraph:
    """Immutable undirected graph; parallel edges keep the minimum weight."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]] = ()):
        if n < 0:
            raise InvalidParams("vertex count must be nonnegative")
        self._n = int(n)
        best = _collapse(self._n, edges)
        self._edges = tuple((u, v, best[(u, v)]) for (u, v) in sorted(best))

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Edges as (u, v, w) with u < v, sorted."""
        return self._edges

    @property
    def m(self) -> int:
        return len(self._edges)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WeightedGraph) and self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self._n}, m={self.m})"

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Per vertex, (neighbor, weight) pairs sorted by neighbor id.

        The index of a neighbor in this tuple is its port number.
        """
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self._n)]
        for u, v, w in self._edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def weight_map(self) -> dict[tuple[int, int], float]:
        out = {}
        for u, v, w in self._edges:
            out[(u, v)] = w
            out[(v, u)] = w
        return out

    def weight(self, u: int, v: int) -> float:
        return self.weight_map[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.weight_map

    def port(self, u: int, v: int) -> int:
        for i, (x, _) in enumerate(self.adjacency[u]):
            if x == v:
                return i
        raise KeyError((u, v))

    @cached_property
    def arrays(self) -> "EdgeArrays":
        return EdgeArrays.build(self._n, self._edges)

    @property
    def is_unweighted(self) -> bool:
        return all(w == 1.0 for _, _, w in self._edges)

    def union(self, extra: Iterable[tuple[int, int, float]]) -> "WeightedGraph":
        return WeightedGraph(self._n, list(self._edges) + list(extra))

    def to_text(self) -> str:
        lines = [f"{self._n} {self.m}"]
        lines += [f"{u} {v} {w!r}" for u, v, w in self._edges]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EdgeArrays:
    """Directed copy of an edge list grouped by destination, for numpy relaxation."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    w: np.ndarray
    offsets: np.ndarray  # start of each destination group
    group_dst: np.ndarray  # destination vertex of each group
    group_of_edge: np.ndarray

    @staticmethod
    def build(n: int, edges: Iterable[tuple[int, int, float]]) -> "EdgeArrays":
        e = list(edges)
        if e:
            a = np.array([(u, v) for u, v, _ in e], dtype=np.int64)
            ws = np.array([w for _, _, w in e], dtype=np.float64)
            src = np.concatenate([a[:, 0], a[:, 1]])
            dst = np.concatenate([a[:, 1], a[:, 0]])
            w = np.concatenate([ws, ws])
        else:
            src = dst = np.zeros(0, dtype=np.int64)
            w = np.zeros(0, dtype=np.float64)
        order = np.lexsort((src, dst))
        src, dst, w = src[order], dst[order], w[order]
        if len(dst):
            starts = np.flatnonzero(np.r_[True, dst[1:] != dst[:-1]])
        else:
            starts = np.zeros(0, dtype=np.int64)
        group_dst = dst[starts] if len(dst) else np.zeros(0, dtype=np.int64)
        group_of_edge = np.repeat(np.arange(len(starts)), np.diff(np.r_[starts, len(dst)]))
        return EdgeArrays(n, src, dst, w, starts, group_dst, group_of_edge)

    @staticmethod
    def merge(n: int, *edge_lists: Iterable[tuple[int, int, float]]) -> "EdgeArrays":
        """Union of several undirected edge lists, parallel edges kept at min weight."""
        return EdgeArrays.build(n, WeightedGraph(n, [e for el in edge_lists for e in el]).edges)


# ---------------------------------------------------------------- parsing


def parse_graph(text: str | bytes) -> WeightedGraph:
    if isinstance(text, bytes):
        text = text.decode()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MalformedHeader("empty input")
    head = lines[0].split()
    try:
        if len(head) != 2:
            raise ValueError
        n, m = int(head[0]), int(head[1])
        if n < 0 or m < 0:
            raise ValueError
    except ValueError:
        raise MalformedHeader(f"bad header line {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != m:
        raise MalformedHeader(f"header announces {m} edges, found {len(body)}")
    edges = []
    for ln in body:
        parts = ln.split()
        if len(parts) != 3:
            raise MalformedHeader(f"bad edge line {ln!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MalformedHeader(f"bad edge line {ln!r}") from None
        edges.append((u, v, w))
    return WeightedGraph(n, edges)


# ---------------------------------------------------------------- generators


def _weights(seed: int, count: int, wmin: float, wmax: float, unweighted: bool) -> np.ndarray:
    if unweighted:
        return np.ones(count)
    u = rng.uniform_array(seed, "weight", np.arange(count))
    return wmin + (wmax - wmin) * u


def largest_component(g: WeightedGraph) -> WeightedGraph:
    comp = components(g)
    sizes = np.bincount(comp, minlength=1) if g.n else np.zeros(1, dtype=int)
    keep = int(np.argmax(sizes))  # ties -> smallest component label (contains smallest vertex)
    vs = [v for v in range(g.n) if comp[v] == keep]
    relabel = {v: i for i, v in enumerate(vs)}
    return WeightedGraph(len(vs), [(relabel[u], relabel[v], w) for u, v, w in g.edges if u in relabel])


def components(g: WeightedGraph) -> np.ndarray:
    """Component label per vertex; labels follow the smallest vertex of each component."""
    parent = list(range(g.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in g.edges:
        a, b = find(u), find(v)
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = [find(v) for v in range(g.n)]
    uniq = {r: i for i, r in enumerate(sorted(set(roots)))}
    return np.array([uniq[r] for r in roots], dtype=np.int64)


def gen_graph(
    kind: str,
    n: int,
    seed: int = 0,
    *,
    p: float | None = None,
    rows: int | None = None,
    cols: int | None = None,
    wmin: float = 1.0,
    wmax: float = 100.0,
    unweighted: bool = False,
    largest_cc: bool = False,
    integer_weights: bool = False,
) -> WeightedGraph:
    """Deterministic instance generator: path, grid, gnp or random tree."""
    if n < 1:
        raise InvalidParams("n must be >= 1")
    if wmin < 0 or wmax < wmin:
        raise InvalidParams("weight range must satisfy 0 <= wmin <= wmax")
    if kind == "path":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "grid":
        if rows is None and cols is None:
            side = math.isqrt(n)
            if side * side != n:
                raise InvalidParams("grid needs rows/cols or a square n")
            rows = cols = side
        elif rows is None:
            rows = n // cols
        elif cols is None:
            cols = n // rows
        if rows * cols != n:
            raise InvalidParams("rows * cols must equal n")
        pairs = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    pairs.append((v, v + 1))
                if r + 1 < rows:
                    pairs.append((v, v + cols))
    elif kind == "gnp":
        if p is None or not 0 < p <= 1:
            raise InvalidParams("gnp requires 0 < p <= 1")
        iu, ju = np.triu_indices(n, 1)
        keep = rng.uniform_array(seed, "gnp", np.arange(len(iu))) < p
        pairs = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    elif kind == "tree":
        if n == 1:
            pairs = []
        else:
            u = rng.uniform_array(seed, "tree", np.arange(1, n))
            par = (u * np.arange(1, n)).astype(np.int64)
            pairs = [(int(par[i - 1]), i) for i in range(1, n)]
    else:
        raise InvalidParams(f"unknown graph kind {kind!r}")
    ws = _weights(seed, len(pairs), wmin, wmax, unweighted)
    if integer_weights and not unweighted:
        # integer sums are exact, so equality tests never hinge on summation order
        ws = np.floor(ws)
    g = WeightedGraph(n, [(u, v, float(w)) for (u, v), w in zip(pairs, ws)])
    if largest_cc:
        g = largest_component(g)
    return g


# ---------------------------------------------------------------- exact distances


@dataclass(frozen=True)
class DistanceVector:
    """Multi-source shortest-path distances with parents and nearest source."""

    sources: tuple[int, ...]
    dist: tuple[float, ...]
    parent: tuple[int | None, ...]
    origin: tuple[int | None, ...]

    def path(self, v: int) -> list[int]:
        """Vertex sequence from the nearest source to v."""
        if self.dist[v] == INFINITE:
            return []
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])
        return out[::-1]

    def to_tsv(self) -> str:
        return _tsv(self.dist, self.parent)


def _tsv(dist: Sequence[float], parent: Sequence[int | None]) -> str:
    rows = ["vertex\tdistance\tparent"]
    for v, (d, p) in enumerate(zip(dist, parent)):
        rows.append(f"{v}\t{'inf' if d == INFINITE else repr(float(d))}\t{'-' if p is None else p}")
    return "\n".join(rows) + "\n"


def exact_distances(g: WeightedGraph, sources: Iterable[int]) -> DistanceVector:
    """Dijkstra from a vertex set.

    Ties between sources go to the smaller source id, ties between parents to
    the smaller parent id, so the output is a pure function of the input.
    """
    srcs = sorted(set(int(s) for s in sources))
    if not srcs:
        raise EmptySourceSet("exact_distances needs at least one source")
    for s in srcs:
        if not 0 <= s < g.n:
            raise VertexOutOfRange(f"source {s} outside [0,{g.n})")
    n = g.n
    dist = [INFINITE] * n
    origin: list[int | None] = [None] * n
    parent: list[int | None] = [None] * n
    done = [False] * n
    heap = []
    for s in srcs:
        dist[s] = 0.0
        origin[s] = s
        heap.append((0.0, s, s))
    heapq.heapify(heap)
    adj = g.adjacency
    while heap:
        d, o, u = heapq.heappop(heap)
        if done[u] or d != dist[u] or o != origin[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            if done[v]:
                continue
            nd = d + w
            if nd < dist[v] or (nd == dist[v] and (o < origin[v] or (o == origin[v] and u < parent[v]))):
                dist[v] = nd
                origin[v] = o
                parent[v] = u
                heapq.heappush(heap, (nd, o, v))
    return DistanceVector(tuple(srcs), tuple(dist), tuple(parent), tuple(origin))


def distance_matrix(g: WeightedGraph, sources: Sequence[int] | None = None) -> np.ndarray:
    """Exact distances from each source (rows) to every vertex, inf if unreachable."""
    srcs = list(range(g.n)) if sources is None else [int(s) for s in sources]
    if not srcs:
        return np.zeros((0, g.n))
    if g.m and min(w for _, _, w in g.edges) > 0:
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import dijkstra

        a = g.arrays
        mat = csr_matrix((a.w, (a.src, a.dst)), shape=(g.n, g.n))
        return np.asarray(dijkstra(mat, directed=True, indices=srcs), dtype=np.float64).reshape(len(srcs), g.n)
    return np.array([exact_distances(g, [s]).dist for s in srcs], dtype=np.float64).reshape(len(srcs), g.n)


def truncated_dijkstra(g: WeightedGraph, root: int, radius: float) -> dict[int, float]:
    """Exact distances from root to every vertex strictly closer than radius."""
    out: dict[int, float] = {}
    heap = [(0.0, root)]
    best = {root: 0.0}
    adj = g.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        if u in out or d != best[u]:
            continue
        if not d < radius:
            break
        out[u] = d
        for v, w in adj[u]:
            nd = d + w
            if v not in out and nd < radius and nd < best.get(v, INFINITE):
                best[v] = nd
                heapq.heappush(heap, (nd, v))
    return out


# ---------------------------------------------------------------- hop-bounded distances


@dataclass
class BFRun:
    """Raw result of a batched synchronous Bellman-Ford.

    Rows are independent explorations. `steps` counts rounds that changed some
    estimate; later rounds would change nothing. `congestion[r]` is the max over
    vertices of the number of rows that vertex relays in round r+1.
    """

    dist: np.ndarray
    parent: np.ndarray
    label: np.ndarray | None
    steps: int
    converged: bool
    congestion: list[int]
    layers: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None

    def final_congestion(self) -> int:
        return self.congestion[-1] if self.congestion else 0


def _relaying(dist: np.ndarray, limit: np.ndarray | None) -> np.ndarray:
    if limit is None:
        return dist < INFINITE
    return (dist < limit) & (dist < INFINITE)


def multi_bf(
    arrays: EdgeArrays,
    init: np.ndarray,
    depth: int,
    *,
    limit: np.ndarray | None = None,
    label: np.ndarray | None = None,
    keep_layers: bool = False,
) -> BFRun:
    """Synchronous Bellman-Ford for several explorations at once.

    init: (rows, n) initial estimates. A vertex relays a row in a round only if
    its current estimate is finite and strictly below `limit` (broadcast to
    (rows, n)). With `label`, estimates compare as (distance, label) pairs, which
    yields the nearest root with ties to the smallest id. Stops early once a
    round changes nothing: every later round is then a no-op.
    """
    dist = np.array(init, dtype=np.float64, copy=True)
    if dist.ndim == 1:
        dist = dist[None, :]
    rows, n = dist.shape
    parent = np.full((rows, n), NO_VERTEX, dtype=np.int64)
    lab = None if label is None else np.array(label, dtype=np.int64, copy=True).reshape(rows, n)
    lim = None if limit is None else np.broadcast_to(np.asarray(limit, dtype=np.float64), (rows, n))
    src, w, offs, gdst, gid = arrays.src, arrays.w, arrays.offsets, arrays.group_dst, arrays.group_of_edge
    congestion: list[int] = []
    layers: list | None = [] if keep_layers else None
    steps = 0
    converged = False
    for _ in range(int(depth)):
        relay = _relaying(dist, lim)
        congestion.append(int(relay.sum(axis=0).max()) if n else 0)
        if not len(src):
            converged = True
            break
        active = relay[:, src]
        cand = np.where(active, dist[:, src] + w, INFINITE)
        best = np.minimum.reduceat(cand, offs, axis=1)
        cur = dist[:, gdst]
        tie = cand == best[:, gid]
        if lab is not None:
            clab = np.where(active & tie, lab[:, src], NO_VERTEX)
            blab = np.minimum.reduceat(clab, offs, axis=1)
            improve = (best < cur) | ((best == cur) & (blab < lab[:, gdst]) & (best < INFINITE))
            tie = tie & (clab == blab[:, gid])
        else:
            improve = best < cur
        if not improve.any():
            converged = True
            break
        psrc = np.where(tie & active, src, NO_VERTEX)
        bpar = np.minimum.reduceat(psrc, offs, axis=1)
        r_idx, g_idx = np.nonzero(improve)
        v_idx = gdst[g_idx]
        dist[r_idx, v_idx] = best[r_idx, g_idx]
        parent[r_idx, v_idx] = bpar[r_idx, g_idx]
        if lab is not None:
            lab[r_idx, v_idx] = blab[r_idx, g_idx]
        if layers is not None:
            layers.append((r_idx, v_idx, bpar[r_idx, g_idx]))
        steps += 1
    else:
        # depth exhausted; check whether the final state is already stable
        converged = False
    return BFRun(dist, parent, lab, steps, converged, congestion, layers)


def layered_path(run: BFRun, row: int, v: int, sources: Iterable[int] = ()) -> list[int]:
    """Walk that realizes run.dist[row, v], extracted from per-round updates.

    Plain parent pointers can go stale in hop-bounded Bellman-Ford (a parent may
    improve after its child copied it); the per-round record cannot.
    """
    if run.layers is None:
        raise ValueError("run was made without keep_layers")
    if run.dist[row, v] == INFINITE:
        return []
    walk = [v]
    r = len(run.layers)
    cur = v
    while r > 0:
        r_idx, v_idx, par = run.layers[r - 1]
        hit = np.flatnonzero((r_idx == row) & (v_idx == cur))
        if len(hit):
            cur = int(par[hit[0]])
            walk.append(cur)
        r -= 1
    return walk[::-1]


@dataclass
class HopBoundedDistanceTable:
    beta: int
    dist: tuple[float, ...]
    parent: tuple[int | None, ...]
    rounds_run: int
    _run: BFRun = field(repr=False, compare=False, default=None)

    def path(self, v: int) -> list[int]:
        """A walk of at most beta edges whose weight equals dist[v]."""
        return layered_path(self._run, 0, v)

    def to_tsv(self) -> str:
        return _tsv(self.dist, self.parent)


def _source_vector(n: int, sources) -> np.ndarray:
    init = np.full(n, INFINITE)
    items = sources.items() if isinstance(sources, dict) else sources
    for s in items:
        v, d0 = (s, 0.0) if isinstance(s, (int, np.integer)) else (int(s[0]), float(s[1]))
        if not 0 <= v < n:
            raise VertexOutOfRange(f"source {v} outside [0,{n})")
        if not d0 >= 0:
            raise NegativeWeight("initial distances must be nonnegative")
        init[v] = min(init[v], d0)
    return init


def bounded_bf(
    g: WeightedGraph,
    sources,
    beta: int,
    extra_edges: Iterable[tuple[int, int, float]] | None = None,
    forward_limit: Sequence[float] | np.ndarray | None = None,
) -> HopBoundedDistanceTable:
    """Distances over walks with at most beta edges in g plus extra edges.

    sources: vertices, (vertex, initial distance) pairs, or a dict of those.
    forward_limit: optional per-vertex bound; a vertex relays onward only while
    its estimate is strictly below its bound (use -inf to bar a vertex).
    """
    if beta < 0:
        raise InvalidParams("beta must be >= 0")
    arrays = g.arrays if extra_edges is None else EdgeArrays.merge(g.n, g.edges, extra_edges)
    init = _source_vector(g.n, sources)
    run = multi_bf(arrays, init, beta, limit=forward_limit, keep_layers=True)
    par = tuple(None if p == NO_VERTEX else int(p) for p in run.parent[0])
    return HopBoundedDistanceTable(int(beta), tuple(float(x) for x in run.dist[0]), par, run.steps, run)
