"""Round-synchronous simulation of the level-by-level distributed hopset.

Two network models are covered. In the clique model every vertex pair is a
channel. In the CONGEST model a virtual graph lives on a sampled subset V' of
the host: its edges are B-hop-bounded host distances, realized by B-round
relaxation waves in the host, and hopset edges are relaxed by broadcasts over a
BFS tree. One message per channel per direction per round in both models.

Hop budgets here are astronomically large, so every exploration runs until it
stops changing (at most n-1 productive rounds) and the remaining scheduled
rounds are charged to the trace without being executed. Since a quiescent
Bellman-Ford round is a no-op, the outputs equal those of the full schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rng
from .errors import BudgetExceeded, InvalidParams
from .graph import (
    INFINITE,
    NO_VERTEX,
    BFRun,
    EdgeArrays,
    WeightedGraph,
    layered_path,
    multi_bf,
)
from .hopset import Hopset, HopsetParams, LevelHierarchy, hierarchy_from_probabilities

FIDELITIES = ("costed", "faithful")
FAITHFUL_MAX_N = 512


# ---------------------------------------------------------------- model and trace


@dataclass(frozen=True)
class SimModel:
    mode: str  # "clique" or "congest"
    n: int
    host: WeightedGraph | None = None
    bfs_parent: tuple[int | None, ...] = ()
    bfs_depth: tuple[int, ...] = ()

    @property
    def diameter_bound(self) -> int:
        """Depth D of the BFS tree (0 in clique mode)."""
        return max(self.bfs_depth) if self.bfs_depth else 0

    @staticmethod
    def clique(n: int) -> "SimModel":
        return SimModel("clique", n)

    @staticmethod
    def congest(host: WeightedGraph) -> "SimModel":
        parent, depth = bfs_tree(host)
        return SimModel("congest", host.n, host, parent, depth)


def bfs_tree(g: WeightedGraph, root: int = 0) -> tuple[tuple[int | None, ...], tuple[int, ...]]:
    """BFS forest, neighbors scanned in id order; other components rooted at their min id."""
    parent: list[int | None] = [None] * g.n
    depth = [-1] * g.n
    for r in [root] + list(range(g.n)):
        if depth[r] >= 0:
            continue
        depth[r] = 0
        frontier = [r]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _ in g.adjacency[u]:
                    if depth[v] < 0:
                        depth[v] = depth[u] + 1
                        parent[v] = u
                        nxt.append(v)
            frontier = nxt
    return tuple(parent), tuple(depth)


@dataclass
class LevelRecord:
    scale: int
    level: int
    rounds: int
    max_congestion: int
    stage1_steps: int = 0
    stage2_steps: int = 0

    def to_dict(self) -> dict:
        return {"l": self.scale, "i": self.level, "rounds": self.rounds,
                "max_congestion": self.max_congestion,
                "stage1_steps": self.stage1_steps, "stage2_steps": self.stage2_steps}


@dataclass
class SimTrace:
    mode: str
    fidelity: str = "costed"
    rounds: int = 0
    per_level: list[LevelRecord] = field(default_factory=list)
    peak_memory_words: int = 0
    max_congestion: int = 0
    messages: int | None = None
    budget: dict = field(default_factory=dict)

    def add(self, rec: LevelRecord) -> None:
        self.per_level.append(rec)
        self.rounds += rec.rounds
        self.max_congestion = max(self.max_congestion, rec.max_congestion)

    def note_memory(self, words: int) -> None:
        self.peak_memory_words = max(self.peak_memory_words, int(words))

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "fidelity": self.fidelity,
            "rounds": self.rounds,
            "per_level": [r.to_dict() for r in self.per_level],
            "peak_memory_words": self.peak_memory_words,
            "max_congestion": self.max_congestion,
            "budget": self.budget,
        }
        if self.messages is not None:
            out["messages"] = self.messages
        return out


def charge(congestion: Sequence[int], steps: int, converged: bool, depth: int) -> int:
    """Rounds for a depth-round exploration of which `steps` rounds were executed.

    Relaying r explorations over one channel takes max(1, r) rounds. After
    quiescence every vertex keeps relaying the same explorations, so the
    unexecuted tail costs the last observed congestion per round.
    """
    executed = sum(max(1, c) for c in congestion[:steps])
    if converged and depth > steps:
        last = congestion[steps] if len(congestion) > steps else 0
        executed += (depth - steps) * max(1, last)
    return int(executed)


# ---------------------------------------------------------------- stage results


@dataclass
class Stage:
    dist: np.ndarray  # (rows, n)
    label: np.ndarray | None
    rounds: int
    congestion: int
    steps: int
    memory: np.ndarray  # per-vertex words held during the stage
    messages: int = 0
    walk: Callable[[int, int], list[int]] | None = None


def _rows_init(n: int, roots: Sequence[int], labelled: bool) -> tuple[np.ndarray, np.ndarray | None]:
    if labelled:
        init = np.full((1, n), INFINITE)
        lab = np.full((1, n), NO_VERTEX, dtype=np.int64)
        init[0, list(roots)] = 0.0
        lab[0, list(roots)] = list(roots)
        return init, lab
    init = np.full((len(roots), n), INFINITE)
    init[np.arange(len(roots)), list(roots)] = 0.0
    return init, None


# ---------------------------------------------------------------- clique explorer


class CliqueExplorer:
    """Explorations over G plus hopset edges, every pair being a channel."""

    def __init__(self, g: WeightedGraph, fidelity: str = "costed"):
        if fidelity not in FIDELITIES:
            raise InvalidParams(f"fidelity must be one of {FIDELITIES}")
        if fidelity == "faithful" and g.n > FAITHFUL_MAX_N:
            raise InvalidParams(f"faithful fidelity supports n <= {FAITHFUL_MAX_N}")
        self.g = g
        self.n = g.n
        self.fidelity = fidelity
        self.model = SimModel.clique(g.n)

    def _arrays(self, hop_edges):
        return EdgeArrays.merge(self.n, self.g.edges, hop_edges)

    def explore(self, hop_edges, roots, depth, *, labelled, limit=None) -> Stage:
        init, lab = _rows_init(self.n, roots, labelled)
        if self.fidelity == "faithful":
            return self._faithful(hop_edges, init, lab, depth, limit)
        run = multi_bf(self._arrays(hop_edges), init, depth, limit=limit, label=lab)
        rounds = charge(run.congestion, run.steps, run.converged, depth)
        return Stage(run.dist, run.label, rounds, max(run.congestion, default=0), run.steps,
                     _held_words(run.dist))

    def _faithful(self, hop_edges, init, lab, depth, limit) -> Stage:
        """Per-message simulation: each channel carries one message per round."""
        merged = WeightedGraph(self.n, list(self.g.edges) + list(hop_edges))
        adj = merged.adjacency
        rows, n = init.shape
        est = [dict((v, float(init[r, v])) for v in np.flatnonzero(np.isfinite(init[r]))) for r in range(rows)]
        labs = None if lab is None else [dict((v, int(lab[r, v])) for v in est[r]) for r in range(rows)]
        par: list[dict[int, int]] = [dict() for _ in range(rows)]
        lim = None if limit is None else np.broadcast_to(np.asarray(limit, dtype=float), (rows, n))
        congestion: list[int] = []
        steps = 0
        messages = 0
        converged = False
        for _ in range(int(depth)):
            outbox: list[list[tuple[int, float, int]]] = [[] for _ in range(n)]
            for r in range(rows):
                for v, d in est[r].items():
                    if lim is None or d < lim[r, v]:
                        outbox[v].append((r, d, labs[r][v] if labs else 0))
            for box in outbox:
                box.sort()
            cong = max((len(b) for b in outbox), default=0)
            congestion.append(cong)
            offers: dict[tuple[int, int], tuple[float, int, int]] = {}
            # round t of this step: every vertex sends the t-th queued message on all channels
            for t in range(cong):
                for x in range(n):
                    if t >= len(outbox[x]):
                        continue
                    r, d, lb = outbox[x][t]
                    for y, w in adj[x]:
                        messages += 1
                        cand = (d + w, lb, x)
                        key = (r, y)
                        old = offers.get(key)
                        if old is None or cand < old:
                            offers[key] = cand
            changed = False
            updates = []
            for (r, y), (d, lb, x) in offers.items():
                cur = est[r].get(y, INFINITE)
                if d < cur or (labs is not None and d == cur and d < INFINITE and lb < labs[r].get(y, NO_VERTEX)):
                    updates.append((r, y, d, lb, x))
            for r, y, d, lb, x in updates:
                est[r][y] = d
                par[r][y] = x
                if labs is not None:
                    labs[r][y] = lb
                changed = True
            if not changed:
                converged = True
                break
            steps += 1
        dist = np.full((rows, n), INFINITE)
        for r in range(rows):
            for v, d in est[r].items():
                dist[r, v] = d
        label = None
        if labs is not None:
            label = np.full((rows, n), NO_VERTEX, dtype=np.int64)
            for r in range(rows):
                for v, lb in labs[r].items():
                    label[r, v] = lb
        rounds = charge(congestion, steps, converged, depth)
        return Stage(dist, label, rounds, max(congestion, default=0), steps, _held_words(dist), messages)


def _held_words(dist: np.ndarray) -> np.ndarray:
    # one (origin, estimate, parent) triple per exploration that reached the vertex
    return 3 * np.isfinite(dist).sum(axis=0)


# ---------------------------------------------------------------- virtual-graph explorer


class VirtualExplorer:
    """Bellman-Ford over G'' = (V', E' + H) without materializing E'.

    One iteration is a B-round host wave seeded with the V' estimates, plus a
    broadcast of relaying V' vertices' values and out-edges over the BFS tree
    with random start rounds. With keep_paths, every estimate can be unfolded
    into the host walk that realizes it.
    """

    def __init__(self, host: WeightedGraph, vprime: Iterable[int], hop_bound: int, seed: int = 0,
                 keep_paths: bool = False):
        self.host = host
        self.n = host.n
        self.vp = np.array(sorted(set(int(v) for v in vprime)), dtype=np.int64)
        if len(self.vp) == 0:
            raise InvalidParams("V' must be nonempty")
        self.in_vp = np.zeros(self.n, dtype=bool)
        self.in_vp[self.vp] = True
        self.B = int(hop_bound)
        if self.B < 1:
            raise InvalidParams("hop bound B must be >= 1")
        self.seed = seed
        self.keep_paths = keep_paths
        self.model = SimModel.congest(host)
        self._tree_hops = None
        self.paths: dict[tuple[int, int], tuple[int, ...]] = {}
        self._phase = 0

    @property
    def tree_hops(self) -> np.ndarray:
        """Hop distance in the BFS tree from each V' vertex (rows) to every host vertex."""
        if self._tree_hops is None:
            from scipy.sparse import csr_matrix
            from scipy.sparse.csgraph import shortest_path

            par = self.model.bfs_parent
            kids = [v for v in range(self.n) if par[v] is not None]
            if kids:
                mat = csr_matrix((np.ones(len(kids)), (kids, [par[v] for v in kids])), shape=(self.n, self.n))
                d = shortest_path(mat, directed=False, unweighted=True, indices=self.vp)
            else:
                d = np.where(np.eye(self.n, dtype=bool)[self.vp], 0.0, np.inf)
            self._tree_hops = np.asarray(d).reshape(len(self.vp), self.n)
        return self._tree_hops

    def register_path(self, u: int, v: int, walk: Sequence[int]) -> None:
        self.paths[(u, v)] = tuple(walk)

    def _edge_walk(self, a: int, b: int, weight_of: dict) -> list[int]:
        """Stored host walk for hopset edge a->b, using the lighter orientation."""
        fw, bw = weight_of.get((a, b)), weight_of.get((b, a))
        if fw is not None and (bw is None or fw <= bw):
            return list(self.paths[(a, b)])
        return list(self.paths[(b, a)])[::-1]

    def explore(self, hop_edges, roots, depth, *, labelled, limit=None, init=None, label=None) -> Stage:
        hop_edges = list(hop_edges)
        if init is None:
            init, label = _rows_init(self.n, roots, labelled)
        rows, n = init.shape
        est = np.array(init, dtype=float)
        est[:, ~self.in_vp] = INFINITE
        lab = None if label is None else np.array(label, dtype=np.int64)
        lim = None if limit is None else np.broadcast_to(np.asarray(limit, dtype=float), (rows, n))
        h_arrays = EdgeArrays.build(n, hop_edges)
        weight_of = {(u, v): w for u, v, w in hop_edges}
        outdeg = np.zeros(n, dtype=np.int64)
        for u, _, _ in hop_edges:
            outdeg[u] += 1
        alpha = max(1, int(outdeg.max()) if n else 1)
        m = len(self.vp)
        D = self.model.diameter_bound
        records: list[dict] = []
        congestion: list[int] = []
        rounds = 0
        steps = 0
        messages = 0
        peak = np.zeros(n, dtype=np.int64)
        converged = False
        it = 0
        while it < depth:
            it += 1
            self._phase += 1
            wave = multi_bf(self.host.arrays, est, self.B, limit=lim, label=lab, keep_layers=self.keep_paths)
            hop = multi_bf(h_arrays, est, 1, limit=lim, label=lab)
            relay = (est < INFINITE) if lim is None else ((est < lim) & (est < INFINITE))
            relay &= self.in_vp[None, :]
            # broadcast phase: each relaying V' vertex sends its value and its out-edges
            senders = np.nonzero(relay)
            per_msg = 1 + outdeg[senders[1]]
            total = int(per_msg.sum())
            messages += total
            load = self._broadcast_load(senders[1], per_msg, max(total, m * alpha))
            bcast_rounds = (max(total, m * alpha) + D) * max(1, int(load.max()) if total else 1)
            wave_rounds = charge(wave.congestion, wave.steps, wave.converged, self.B)
            last_iter = wave_rounds + bcast_rounds
            rounds += last_iter
            congestion.append(max(wave.congestion, default=0))
            held = 2 * np.isfinite(wave.dist).sum(axis=0) + 2 * outdeg + load
            peak = np.maximum(peak, held)
            # lexicographic merge of wave and hopset candidates on V'
            new_d = est.copy()
            new_l = None if lab is None else lab.copy()
            wd, hd = wave.dist, hop.dist
            if lab is None:
                use_h = hd < wd
            else:
                use_h = (hd < wd) | ((hd == wd) & (hop.label < wave.label))
            cand_d = np.where(use_h, hd, wd)
            new_d[:, self.vp] = cand_d[:, self.vp]
            if lab is not None:
                cand_l = np.where(use_h, hop.label, wave.label)
                new_l[:, self.vp] = cand_l[:, self.vp]
            changed = new_d != est
            if lab is not None:
                changed |= new_l != lab
            changed[:, ~self.in_vp] = False
            if not changed.any():
                converged = True
                break
            if self.keep_paths:
                rec = {}
                for r, v in zip(*np.nonzero(changed)):
                    r, v = int(r), int(v)
                    if use_h[r, v]:
                        rec[(r, v)] = ("H", int(hop.parent[r, v]))
                    else:
                        rec[(r, v)] = ("E", wave)
                records.append(rec)
            est, lab = new_d, new_l
            steps += 1
        if converged and depth > it:
            # quiescent iterations repeat the last one's schedule
            rounds += (depth - it) * last_iter
        walk = None
        if self.keep_paths:
            walk = self._walker(records, weight_of)
        return Stage(est, lab, int(rounds), max(congestion, default=0), steps, peak, messages, walk)

    def _broadcast_load(self, senders: np.ndarray, per_msg: np.ndarray, span: int) -> np.ndarray:
        """Max number of messages a host vertex receives in a single round."""
        if len(senders) == 0:
            return np.zeros(self.n, dtype=np.int64)
        origin = np.repeat(senders, per_msg)
        counters = np.arange(len(origin)) + (self._phase << 32)
        start = rng.integers(self.seed, "broadcast", counters, span) + 1
        row_of = np.searchsorted(self.vp, origin)
        hops = self.tree_hops[row_of]  # (messages, n)
        arrive = start[:, None] + hops
        ok = np.isfinite(arrive)
        xs = np.broadcast_to(np.arange(self.n), arrive.shape)[ok]
        ts = arrive[ok].astype(np.int64)
        key = xs * (int(ts.max()) + 1) + ts
        uniq, counts = np.unique(key, return_counts=True)
        load = np.zeros(self.n, dtype=np.int64)
        np.maximum.at(load, uniq // (int(ts.max()) + 1), counts)
        return load

    def _walker(self, records, weight_of):
        def walk(row: int, v: int) -> list[int]:
            pieces = []
            cur = v
            for rec in reversed(records):
                hit = rec.get((row, cur))
                if hit is None:
                    continue
                kind, ref = hit
                if kind == "H":
                    piece = self._edge_walk(ref, cur, weight_of)
                else:
                    piece = layered_path(ref, row, cur)
                pieces.append(piece)
                cur = piece[0]
            out = [cur]
            for piece in reversed(pieces):
                out.extend(piece[1:])
            return out

        return walk


# ---------------------------------------------------------------- level-by-level construction


@dataclass(frozen=True)
class EdgeRecord:
    """Creation record of one hopset edge, kept for re-assertion."""

    scale: int
    level: int
    owner: int
    target: int
    weight: float
    threshold: float  # pivot estimate / 2 at creation
    pivot: bool


@dataclass
class LevelResult:
    hopset: Hopset
    trace: SimTrace
    hierarchy: LevelHierarchy
    beta: int
    eps_step: float
    k_prime: int
    scales: list[int]
    records: list[EdgeRecord]
    paths: dict[tuple[int, int], tuple[int, ...]] | None = None


def distributed_beta(eps_step: float, k_prime: int) -> int:
    """(3/delta)^k' with delta = eps_step / (15 k')."""
    kp = max(1, k_prime)
    delta = eps_step / (15 * kp)
    return math.ceil((3 / delta) ** k_prime - 1e-9)


def _log2ceil(x: float) -> int:
    return max(1, math.ceil(math.log2(max(x, 2)) - 1e-12))


def level_by_level(
    g: WeightedGraph,
    params: HopsetParams,
    eps: float | None = None,
    *,
    seed: int = 0,
    t_stride: int = 1,
    level_cap: int | None = None,
    eps_step: float | None = None,
    explorer=None,
    hierarchy: LevelHierarchy | None = None,
    n_eff: int | None = None,
    path_reporting: bool = False,
) -> LevelResult:
    """Hopsets H^(l) for hop scales 2^l, each built level by level from half-bunches."""
    eps = params.eps if eps is None else eps
    if t_stride < 1:
        raise InvalidParams("t_stride must be >= 1")
    n_eff = g.n if n_eff is None else n_eff
    cap = level_cap or _log2ceil(n_eff)
    step = eps / (2 * cap) if eps_step is None else eps_step
    if step > 1 / (5 * cap) + 1e-15:
        raise InvalidParams(f"per-scale accuracy {step:g} exceeds 1/(5 * {cap})")
    if explorer is None:
        explorer = CliqueExplorer(g)
    h = hierarchy if hierarchy is not None else hierarchy_from_probabilities(g.n, params.probabilities(g.n), seed)
    kp = h.top
    beta = distributed_beta(step, kp)
    stride = 2 ** (t_stride - 1)
    if path_reporting:
        depth1 = 8 * beta * max(1, kp) * _log2ceil(n_eff) + 1
        depth2 = 4 * beta
    else:
        depth1 = 8 * stride * beta
        depth2 = depth1 // 2
    scales = list(range(t_stride, cap + 1, t_stride))
    if not scales or scales[-1] != cap:
        scales.append(cap)
    trace = SimTrace(explorer.model.mode, getattr(explorer, "fidelity", "costed"))
    if trace.fidelity == "faithful":
        trace.messages = 0
    records: list[EdgeRecord] = []
    prev: dict[tuple[int, int], float] = {}
    paths = {} if path_reporting else None
    level_h: dict[tuple[int, int], float] = {}
    for scale in scales:
        level_h = {}
        for i in range(kp + 1):
            work = dict(prev)
            for key, w in level_h.items():
                if key not in work or w < work[key]:
                    work[key] = w
            hop_edges = [(u, v, w) for (u, v), w in sorted(work.items())]
            owners = list(h.owners(i))
            roots = list(h.members(i + 1))
            dhat = np.full(g.n, INFINITE)
            pivot = np.full(g.n, NO_VERTEX, dtype=np.int64)
            rec = LevelRecord(scale, i, 0, 0)
            mem = np.zeros(g.n, dtype=np.int64)
            s1 = None
            if roots and owners:
                s1 = explorer.explore(hop_edges, roots, depth1, labelled=True)
                dhat, pivot = s1.dist[0], s1.label[0]
                rec.rounds += s1.rounds
                rec.max_congestion = max(rec.max_congestion, s1.congestion)
                rec.stage1_steps = s1.steps
                mem = np.maximum(mem, s1.memory)
                if trace.messages is not None:
                    trace.messages += s1.messages
            new: dict[tuple[int, int], float] = {}
            if owners:
                thr = dhat[owners] / 2
                s2 = explorer.explore(hop_edges, owners, depth2, labelled=False, limit=thr[:, None])
                rec.rounds += s2.rounds
                rec.max_congestion = max(rec.max_congestion, s2.congestion)
                rec.stage2_steps = s2.steps
                mem = np.maximum(mem, s2.memory)
                if trace.messages is not None:
                    trace.messages += s2.messages
                level_members = np.array(h.members(i), dtype=np.int64)
                for r, u in enumerate(owners):
                    vals = s2.dist[r, level_members]
                    for v, d in zip(level_members[vals < thr[r]].tolist(), vals[vals < thr[r]].tolist()):
                        if v == u:
                            continue
                        new[(u, v)] = d
                        records.append(EdgeRecord(scale, i, u, v, d, float(thr[r]), False))
                        if paths is not None:
                            paths[(u, v)] = tuple(s2.walk(r, v))
                    if dhat[u] < INFINITE:
                        p = int(pivot[u])
                        new[(u, p)] = float(dhat[u])
                        records.append(EdgeRecord(scale, i, u, p, float(dhat[u]), float(thr[r]), True))
                        if paths is not None:
                            paths[(u, p)] = tuple(s1.walk(0, u)[::-1])
            for key, w in new.items():
                level_h[key] = w
                if paths is not None:
                    explorer.register_path(*key, paths[key])
            outdeg = np.zeros(g.n, dtype=np.int64)
            for (u, _), _ in work.items():
                outdeg[u] += 1
            trace.note_memory(int((mem + 2 * outdeg + 2).max()) if g.n else 0)
            trace.add(rec)
        if path_reporting:
            for key, w in level_h.items():
                if key not in prev or w <= prev[key]:
                    prev[key] = w
        else:
            prev = dict(level_h)
    edges = tuple(sorted((u, v, w) for (u, v), w in level_h.items()))
    rho = params.rho if params.rho is not None else params.nu
    budget = n_eff**rho * max(1, kp) * _log2ceil(n_eff) ** 2 * beta
    trace.budget = {
        "formula": "n^rho * k' * log2(n)^2 * beta",
        "rho": rho,
        "value": budget,
        "measured_constant": trace.rounds / budget,
        "congestion_reference": 4 * n_eff**rho * math.log(max(n_eff, 2)),
    }
    meta = {"variant": params.variant, "k": params.k, "scales": scales, "eps_step": step,
            "k_prime": kp, "t_stride": t_stride}
    hs = Hopset(g.n, edges, h.level_of, beta, meta)
    final_paths = None if paths is None else {(u, v): paths[(u, v)] for u, v, _ in edges}
    return LevelResult(hs, trace, h, beta, step, kp, scales, records, final_paths)


def run_clique_hopset(
    g: WeightedGraph,
    params: HopsetParams,
    eps: float | None = None,
    t_stride: int = 1,
    seed: int = 0,
    fidelity: str = "costed",
) -> tuple[Hopset, SimTrace]:
    res = level_by_level(g, params, eps, seed=seed, t_stride=t_stride,
                         explorer=CliqueExplorer(g, fidelity))
    return res.hopset, res.trace


# ---------------------------------------------------------------- CONGEST mode


def sample_vprime(n: int, prob: float, seed: int) -> list[int]:
    """V' by independent coin flips; never empty (falls back to the smallest draw)."""
    if not 0 < prob <= 1:
        raise InvalidParams("V' sampling probability must lie in (0, 1]")
    u = rng.uniform_array(seed, "vprime", np.arange(n))
    out = np.flatnonzero(u < prob).tolist()
    return out or [int(np.argmin(u))]


def virtual_hierarchy(n: int, vprime: Sequence[int], params: HopsetParams, seed: int) -> LevelHierarchy:
    return hierarchy_from_probabilities(n, params.probabilities(len(vprime)), seed, vertices=vprime)


def bf_small_memory(
    host: WeightedGraph,
    vprime: Iterable[int],
    hop_bound: int,
    hop_edges: Iterable[tuple[int, int, float]],
    sources,
    beta: int,
    *,
    seed: int = 0,
    memory_factor: float | None = 4.0,
) -> tuple[np.ndarray, SimTrace]:
    """beta Bellman-Ford iterations in G'' = (V', E' + H) with small per-vertex memory.

    hop_edges are oriented u -> v and stored at u only. Returns distances over
    host ids (inf outside V') and the trace. Raises BudgetExceeded if some vertex
    holds more than memory_factor * alpha * log2 n words.
    """
    ex = VirtualExplorer(host, vprime, hop_bound, seed)
    init = np.full((1, host.n), INFINITE)
    items = sources.items() if isinstance(sources, dict) else [(s, 0.0) if np.isscalar(s) else s for s in sources]
    for v, d0 in items:
        if not ex.in_vp[int(v)]:
            raise InvalidParams(f"source {v} is not in V'")
        init[0, int(v)] = min(init[0, int(v)], float(d0))
    hop_edges = list(hop_edges)
    stage = ex.explore(hop_edges, [], int(beta), labelled=False, init=init)
    trace = SimTrace("congest", "costed")
    trace.add(LevelRecord(0, 0, stage.rounds, stage.congestion, 0, stage.steps))
    trace.note_memory(int(stage.memory.max()))
    trace.messages = stage.messages
    outdeg = np.bincount([u for u, _, _ in hop_edges], minlength=host.n) if hop_edges else np.zeros(1)
    alpha = max(1, int(outdeg.max()))
    lg = math.log2(max(host.n, 2))
    trace.budget = {"alpha": alpha, "memory_bound": (memory_factor or 0) * alpha * lg,
                    "round_formula": "(m*alpha + B + D) * beta * log2 n",
                    "round_budget": (len(ex.vp) * alpha + ex.B + ex.model.diameter_bound) * beta * lg}
    if memory_factor is not None and trace.peak_memory_words > memory_factor * alpha * lg:
        raise BudgetExceeded(f"peak memory {trace.peak_memory_words} words exceeds "
                             f"{memory_factor} * {alpha} * log2 {host.n}")
    return stage.dist[0], trace


def run_congest_hopset(
    host: WeightedGraph,
    params: HopsetParams,
    eps: float | None = None,
    *,
    vprime: Sequence[int] | None = None,
    prob: float | None = None,
    hop_bound: int | None = None,
    seed: int = 0,
    t_stride: int = 1,
) -> tuple[Hopset, SimTrace]:
    res = _congest(host, params, eps, vprime, prob, hop_bound, seed, t_stride, False)
    return res.hopset, res.trace


def _congest(host, params, eps, vprime, prob, hop_bound, seed, t_stride, path_reporting) -> LevelResult:
    if vprime is None:
        vprime = sample_vprime(host.n, prob if prob is not None else 1.0, seed)
    vprime = sorted(set(int(v) for v in vprime))
    m = len(vprime)
    B = hop_bound if hop_bound is not None else host.n
    ex = VirtualExplorer(host, vprime, B, seed, keep_paths=path_reporting)
    h = virtual_hierarchy(host.n, vprime, params, seed)
    res = level_by_level(host, params, eps, seed=seed, t_stride=t_stride, explorer=ex, hierarchy=h,
                         n_eff=m, path_reporting=path_reporting)
    res.hopset.meta.update({"vprime_size": m, "hop_bound": B})
    # every virtual step costs a B-round wave plus a broadcast over the BFS tree
    b = res.trace.budget
    b["formula"] = "m^rho * k' * log2(m)^2 * beta * (B + D)"
    b["value"] *= B + ex.model.diameter_bound
    b["measured_constant"] = res.trace.rounds / b["value"]
    return res


# ---------------------------------------------------------------- path reporting


@dataclass(frozen=True)
class RegistryEntry:
    edge: tuple[int, int]
    to_owner: float  # d_P(x, owner)
    to_target: float  # d_P(x, target)
    prev: int | None  # neighbor on P toward the owner
    next: int | None  # neighbor on P toward the target


@dataclass
class PathReportingHopset:
    hopset: Hopset
    paths: dict[tuple[int, int], tuple[int, ...]]
    registry: dict[int, list[RegistryEntry]]

    @property
    def max_registry(self) -> int:
        return max((len(v) for v in self.registry.values()), default=0)


def build_registry(host: WeightedGraph, hs: Hopset, paths) -> dict[int, list[RegistryEntry]]:
    reg: dict[int, list[RegistryEntry]] = {}
    for u, v, w in hs.edges:
        walk = paths[(u, v)]
        prefix = 0.0
        seen = set()
        for j, x in enumerate(walk):
            if j:
                prefix += host.weight(walk[j - 1], x)
            if x in seen:
                continue
            seen.add(x)
            prev = walk[j - 1] if j else None
            nxt = walk[j + 1] if j + 1 < len(walk) else None
            reg.setdefault(x, []).append(RegistryEntry((u, v), prefix, w - prefix, prev, nxt))
    return {x: reg[x] for x in sorted(reg)}


def run_path_reporting(
    host: WeightedGraph,
    params: HopsetParams,
    eps: float | None = None,
    *,
    vprime: Sequence[int] | None = None,
    prob: float | None = None,
    hop_bound: int | None = None,
    seed: int = 0,
) -> tuple[PathReportingHopset, SimTrace]:
    res = _congest(host, params, eps, vprime, prob, hop_bound, seed, 1, True)
    reg = build_registry(host, res.hopset, res.paths)
    m = res.hopset.meta["vprime_size"]
    rho = params.rho if params.rho is not None else params.nu
    ref = m**rho * math.log2(max(m, 2)) ** 2
    res.trace.budget["registry_max"] = max((len(v) for v in reg.values()), default=0)
    res.trace.budget["registry_reference"] = ref
    res.trace.budget["registry_constant"] = res.trace.budget["registry_max"] / ref
    return PathReportingHopset(res.hopset, res.paths, reg), res.trace
