"""Sequential hopset construction: sampled hierarchies, bunches and pivots."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import rng
from .errors import InvalidParams, NotUnweighted
from .graph import INFINITE, WeightedGraph, exact_distances, truncated_dijkstra

VARIANTS = ("basic", "improved", "efficient")


@dataclass(frozen=True)
class HopsetParams:
    k: int
    variant: str = "basic"
    rho: float | None = None
    eps: float = 0.5
    strict_rho: bool = True  # distributed runs may use rho below 2*nu

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParams("k must be >= 1")
        if self.variant not in VARIANTS:
            raise InvalidParams(f"variant must be one of {VARIANTS}")
        if not 0 < self.eps < 1:
            raise InvalidParams("eps must lie in (0, 1)")
        if self.variant == "efficient":
            if self.rho is None or not 0 < self.rho < 1:
                raise InvalidParams("efficient variant needs 0 < rho < 1")
            if self.strict_rho and self.rho < 2 * self.nu:
                raise InvalidParams(f"efficient variant needs rho >= 2*nu = {2 * self.nu:g}")

    @property
    def nu(self) -> float:
        return 1.0 / (2**self.k - 1)

    @property
    def i0(self) -> int:
        # small epsilon guards exact powers of two against log2 rounding
        return int(math.floor(math.log2(self.rho / self.nu) + 1e-12))

    @property
    def i1(self) -> int:
        return self.i0 + 1 + math.ceil(1.0 / self.rho - 1e-12)

    @property
    def top_level(self) -> int:
        """Index of the last level that may be nonempty (the next one is empty)."""
        if self.variant == "basic":
            return self.k - 1
        if self.variant == "improved":
            return self.k
        return self.i1

    def probabilities(self, n: int) -> list[float]:
        """p_i for i = 0 .. top_level-1 (A_{i+1} is sampled from A_i with p_i)."""
        out = []
        for i in range(self.top_level):
            if self.variant == "basic":
                p = n ** (-(2**i) * self.nu)
            elif self.variant == "improved" or i <= self.i0:
                p = min(n ** (-(2**i) * self.nu) * 2 ** (2**i - 1), 0.5)
            elif i == self.i0 + 1:
                p = n ** (-self.rho / 2)
            else:
                p = n ** (-self.rho)
            out.append(float(min(p, 1.0)))
        return out

    def sequential_beta(self) -> int:
        """Hopbound of the sequential hopset: (24L/eps)^(L-1) for L levels.

        For the basic variant L = k, which is the usual (24k/eps)^(k-1).
        """
        levels = self.top_level + 1
        return math.ceil((24 * levels / self.eps) ** (levels - 1) - 1e-9)


@dataclass(frozen=True)
class LevelHierarchy:
    n: int
    levels: tuple[tuple[int, ...], ...]  # A_0 .. A_top; A_{top+1} is empty
    probabilities: tuple[float, ...]
    level_of: tuple[int, ...]  # largest i with v in A_i

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    @property
    def k_prime(self) -> int:
        """Index of the last nonempty level."""
        return max(i for i, a in enumerate(self.levels) if a) if self.n else 0

    def members(self, i: int) -> tuple[int, ...]:
        return self.levels[i] if 0 <= i < len(self.levels) else ()

    def owners(self, i: int) -> tuple[int, ...]:
        """A_i minus A_{i+1}."""
        return tuple(v for v in self.members(i) if self.level_of[v] == i)


def hierarchy_from_probabilities(n: int, probs: Iterable[float], seed: int, tag: str = "level",
                                 vertices: Iterable[int] | None = None) -> LevelHierarchy:
    """Nested sampling; v joins A_{i+1} iff v in A_i and U(seed, tag, v, i) < p_i."""
    probs = tuple(float(p) for p in probs)
    base = np.arange(n) if vertices is None else np.array(sorted(set(vertices)), dtype=np.int64)
    levels = [tuple(int(v) for v in base)]
    cur = base
    for i, p in enumerate(probs):
        if len(cur):
            cur = cur[rng.uniform_array(seed, tag, cur, i) < p]
        levels.append(tuple(int(v) for v in cur))
    level_of = [-1] * n
    for i, a in enumerate(levels):
        for v in a:
            level_of[v] = i
    return LevelHierarchy(n, tuple(levels), probs, tuple(level_of))


def sample_hierarchy(n: int, params: HopsetParams, seed: int) -> LevelHierarchy:
    if n < 1:
        raise InvalidParams("n must be >= 1")
    return hierarchy_from_probabilities(n, params.probabilities(n), seed)


@dataclass(frozen=True)
class Bunch:
    level: int
    pivot: int | None
    pivot_dist: float
    members: dict[int, float]  # non-pivot members with their distance


def compute_bunches(g: WeightedGraph, h: LevelHierarchy) -> dict[int, Bunch]:
    """B(u) for every vertex, by Dijkstra truncated at the pivot radius."""
    if h.n != g.n:
        raise InvalidParams("hierarchy was sampled for a different vertex count")
    out: dict[int, Bunch] = {}
    for i in range(len(h.levels)):
        owners = h.owners(i)
        if not owners:
            continue
        nxt = h.members(i + 1)
        piv = exact_distances(g, nxt) if nxt else None
        in_level = set(h.members(i))
        in_next = set(nxt)
        for u in owners:
            if piv is None or piv.dist[u] == INFINITE:
                near = truncated_dijkstra(g, u, INFINITE)
                members = {v: d for v, d in near.items() if v != u and v in in_level}
                out[u] = Bunch(i, None, INFINITE, members)
                continue
            # radius re-measured from u so bunch and pivot distances share one summation order
            near = truncated_dijkstra(g, u, piv.dist[u] * (1 + 1e-9) + 1e-300)
            radius = min(d for v, d in near.items() if v in in_next)
            pivot = min(v for v, d in near.items() if v in in_next and d == radius)
            members = {v: d for v, d in near.items() if v != u and v in in_level and d < radius}
            out[u] = Bunch(i, pivot, radius, members)
    return out


@dataclass(frozen=True)
class Hopset:
    """Oriented weighted edges u -> v (v in the bunch of u)."""

    n: int
    edges: tuple[tuple[int, int, float], ...]
    level_of: tuple[int, ...]
    beta: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def size(self) -> int:
        return len(self.edges)

    def undirected(self) -> list[tuple[int, int, float]]:
        return list(self.edges)

    def out_degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, _, _ in self.edges:
            deg[u] += 1
        return deg

    def to_text(self) -> str:
        return "".join(f"{u} {v} {w!r} {self.level_of[u]}\n" for u, v, w in self.edges)

    @staticmethod
    def from_text(n: int, text: str, beta: int | None = None) -> "Hopset":
        edges, level_of = [], [0] * n
        for ln in text.splitlines():
            if not ln.strip():
                continue
            u, v, w, lv = ln.split()
            edges.append((int(u), int(v), float(w)))
            level_of[int(u)] = int(lv)
        return Hopset(n, tuple(sorted(edges)), tuple(level_of), beta)

    @staticmethod
    def empty(n: int) -> "Hopset":
        return Hopset(n, (), tuple([0] * n), None)


def hopset_from_bunches(n: int, bunches: dict[int, Bunch], level_of: Iterable[int],
                        beta: int | None = None, meta: dict | None = None) -> Hopset:
    edges = []
    for u, b in bunches.items():
        for v, d in b.members.items():
            edges.append((u, v, float(d)))
        if b.pivot is not None and b.pivot != u:
            edges.append((u, b.pivot, float(b.pivot_dist)))
    return Hopset(n, tuple(sorted(edges)), tuple(level_of), beta, dict(meta or {}))


def build_hopset(g: WeightedGraph, params: HopsetParams, seed: int) -> Hopset:
    h = sample_hierarchy(g.n, params, seed)
    bunches = compute_bunches(g, h)
    meta = {"variant": params.variant, "k": params.k, "levels": [len(a) for a in h.levels]}
    return hopset_from_bunches(g.n, bunches, h.level_of, params.sequential_beta(), meta)


def build_emulator(g: WeightedGraph, k: int, seed: int) -> Hopset:
    """Additive emulator: the improved-variant edge set of an unweighted graph."""
    if not g.is_unweighted:
        raise NotUnweighted("emulator construction needs all weights equal to 1")
    params = HopsetParams(k, "improved", eps=0.5)
    hs = build_hopset(g, params, seed)
    return Hopset(hs.n, hs.edges, hs.level_of, None, {**hs.meta, "emulator": True})


def recursive_hopset(g: WeightedGraph, params: HopsetParams, iterations: int, seed: int,
                     eps: float | None = None) -> Hopset:
    """Bootstrapped construction; the union of all stages.

    Stage 1 runs the level-by-level construction with ceil(log2 n) scales.
    Stage j+1 runs it on G plus all earlier stages, with ceil(log2 beta_j)
    scales. Every stage uses per-scale accuracy eps / (3 * scales).
    """
    from .congest import level_by_level

    if iterations < 1:
        raise InvalidParams("iterations must be >= 1")
    eps = params.eps if eps is None else eps
    extra: list[tuple[int, int, float]] = []
    stages = []
    cap = max(1, math.ceil(math.log2(max(g.n, 2))))
    result = None
    for j in range(iterations):
        base = g.union(extra) if extra else g
        result = level_by_level(base, params, eps, seed=seed + j, level_cap=cap,
                                eps_step=eps / (3 * cap))
        stages.append({"stage": j + 1, "level_cap": cap, "beta": result.hopset.beta,
                       "size": result.hopset.size})
        extra.extend(result.hopset.edges)
        cap = max(1, math.ceil(math.log2(max(result.hopset.beta, 2))))
    merged: dict[tuple[int, int], float] = {}
    for u, v, w in extra:
        if (u, v) not in merged or w < merged[(u, v)]:
            merged[(u, v)] = w
    edges = tuple(sorted((u, v, w) for (u, v), w in merged.items()))
    meta = {"variant": params.variant, "k": params.k, "stages": stages}
    return Hopset(g.n, edges, result.hopset.level_of, result.hopset.beta, meta)
