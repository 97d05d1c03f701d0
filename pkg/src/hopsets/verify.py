"""Independent checks of hopset and emulator guarantees."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .errors import InvalidParams, NotUnweighted, Unreachable
from .graph import INFINITE, EdgeArrays, WeightedGraph, distance_matrix, multi_bf
from .hopset import Hopset, HopsetParams

RTOL = 1e-9


def within(value: float, bound: float) -> bool:
    """value <= bound up to the relative tolerance."""
    return value <= bound * (1 + RTOL) or value == bound


@dataclass
class StretchReport:
    epsilon: float
    beta: int
    pairs: int
    max_ratio: float
    violations: list[dict] = field(default_factory=list)
    min_beta: dict[tuple[int, int], int] | None = None
    skipped_unreachable: int = 0
    sample: str = "sample"

    @property
    def ok(self) -> bool:
        return not self.violations

    def histogram(self) -> dict[str, int]:
        if self.min_beta is None:
            return {}
        c = Counter(self.min_beta.values())
        return {str(b): c[b] for b in sorted(c)}

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "beta": self.beta,
            "pairs": self.pairs,
            "sample": self.sample,
            "skipped_unreachable": self.skipped_unreachable,
            "max_ratio": self.max_ratio,
            "violations": self.violations,
            "min_beta_histogram": self.histogram(),
        }


def sample_pairs(g: WeightedGraph, seed: int, count: int = 200, farthest: int = 20,
                 dist: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Random connected pairs plus, per sampled source, its farthest vertices."""
    n = g.n
    if n < 2:
        return []
    pairs: set[tuple[int, int]] = set()
    counter = 0
    sources: dict[int, None] = {}
    tries = 0
    while len(pairs) < count and tries < 50 * count:
        u, v = (int(x) for x in rng.integers(seed, "pairs", [counter, counter + 1], n))
        counter += 2
        tries += 1
        if u == v:
            continue
        sources.setdefault(u, None)
        pairs.add((u, v))
    srcs = sorted(sources)
    d = distance_matrix(g, srcs) if dist is None else dist
    for row, u in enumerate(srcs):
        reach = np.flatnonzero(np.isfinite(d[row]))
        order = reach[np.lexsort((reach, -d[row, reach]))]
        for v in order[:farthest]:
            if int(v) != u:
                pairs.add((u, int(v)))
    # connected pairs only
    index = {u: r for r, u in enumerate(srcs)}
    return sorted(p for p in pairs if np.isfinite(d[index[p[0]], p[1]]))


def _pairs_by_source(pairs: Iterable[tuple[int, int]]) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for u, v in pairs:
        out.setdefault(int(u), []).append(int(v))
    return {u: sorted(set(vs)) for u, vs in sorted(out.items())}


def _union(g: WeightedGraph, h: Hopset | None) -> EdgeArrays:
    if h is None or not h.edges:
        return g.arrays
    return EdgeArrays.merge(g.n, g.edges, h.edges)


def verify_hopset(
    g: WeightedGraph,
    h: Hopset | None,
    eps: float,
    beta: int,
    pairs: str | Sequence[tuple[int, int]] = "sample",
    *,
    seed: int = 0,
    count: int = 200,
    farthest: int = 20,
    with_min_beta: bool = True,
    batch: int = 64,
) -> StretchReport:
    """Check d^(beta)_{G+H}(u,v) <= (1+eps) d_G(u,v) on a pair set."""
    if beta < 1:
        raise InvalidParams("beta must be >= 1")
    if isinstance(pairs, str):
        if pairs == "all":
            mode = "all"
            plist = [(u, v) for u in range(g.n) for v in range(g.n) if u != v]
        elif pairs == "sample":
            mode = "sample"
            plist = sample_pairs(g, seed, count, farthest)
        else:
            raise InvalidParams("pairs must be 'all', 'sample' or a list")
    else:
        mode = "explicit"
        plist = [tuple(p) for p in pairs]
    arrays = _union(g, h)
    by_src = _pairs_by_source(plist)
    srcs = list(by_src)
    report = StretchReport(eps, int(beta), 0, 1.0, [], {} if with_min_beta else None, 0, mode)
    for start in range(0, len(srcs), batch):
        chunk = srcs[start:start + batch]
        exact = distance_matrix(g, chunk)
        init = np.full((len(chunk), g.n), INFINITE)
        init[np.arange(len(chunk)), chunk] = 0.0
        bounded = multi_bf(arrays, init, beta).dist
        minb = _min_beta(arrays, init, exact, eps, beta, by_src, chunk) if with_min_beta else None
        for r, u in enumerate(chunk):
            for v in by_src[u]:
                dg = exact[r, v]
                if u == v:
                    continue
                if not np.isfinite(dg):
                    report.skipped_unreachable += 1
                    continue
                report.pairs += 1
                db = bounded[r, v]
                ratio = 1.0 if db == dg else (math.inf if dg == 0 else float(db / dg))
                report.max_ratio = max(report.max_ratio, ratio)
                if not within(db, (1 + eps) * dg):
                    report.violations.append({"u": u, "v": v, "ratio": ratio})
                if minb is not None and (r, v) in minb:
                    report.min_beta[(u, v)] = minb[(r, v)]
    return report


def _min_beta(arrays, init, exact, eps, beta, by_src, chunk) -> dict[tuple[int, int], int]:
    """Smallest hop budget meeting the stretch bound, one round at a time."""
    want = np.zeros_like(exact, dtype=bool)
    for r, u in enumerate(chunk):
        want[r, by_src[u]] = True
    want &= np.isfinite(exact)
    want[np.arange(len(chunk)), chunk] = False
    bound = (1 + eps) * exact
    out: dict[tuple[int, int], int] = {}
    dist = init
    limit = max(1, min(int(beta), arrays.n))
    for hops in range(1, limit + 1):
        run = multi_bf(arrays, dist, 1)
        dist = run.dist
        ok = want & ((dist <= bound * (1 + RTOL)) | (dist == bound))
        for r, v in zip(*np.nonzero(ok)):
            out[(int(r), int(v))] = hops
        want &= ~ok
        if not want.any() or run.converged:
            break
    return out


def minimal_hopbound(g: WeightedGraph, h: Hopset | None, eps: float, pair: tuple[int, int]) -> int:
    u, v = pair
    exact = distance_matrix(g, [u])
    if not np.isfinite(exact[0, v]):
        raise Unreachable(f"{u} and {v} are not connected")
    if u == v:
        return 0
    arrays = _union(g, h)
    init = np.full((1, g.n), INFINITE)
    init[0, u] = 0.0
    got = _min_beta(arrays, init, exact, eps, g.n, {u: [v]}, [u])
    return got[(0, v)]


# ---------------------------------------------------------------- emulator


@dataclass
class EmulatorReport:
    k: int
    pairs: int
    max_surplus: float
    max_normalized: float
    surplus: dict[tuple[int, int], float]

    def to_dict(self) -> dict:
        return {"k": self.k, "pairs": self.pairs, "max_surplus": self.max_surplus,
                "max_normalized_surplus": self.max_normalized}


def verify_emulator(g: WeightedGraph, h: Hopset, k: int, pairs: str | Sequence = "sample",
                    *, seed: int = 0, count: int = 200) -> EmulatorReport:
    """Additive surplus d_H - d_G, measured with distances in H alone."""
    if not g.is_unweighted:
        raise NotUnweighted("emulator checks need an unweighted graph")
    if isinstance(pairs, str):
        plist = ([(u, v) for u in range(g.n) for v in range(g.n) if u != v] if pairs == "all"
                 else sample_pairs(g, seed, count, 0))
    else:
        plist = list(pairs)
    by_src = _pairs_by_source(plist)
    srcs = list(by_src)
    exact = distance_matrix(g, srcs)
    init = np.full((len(srcs), g.n), INFINITE)
    init[np.arange(len(srcs)), srcs] = 0.0
    dh = multi_bf(EdgeArrays.build(g.n, h.edges), init, max(g.n, 1)).dist
    rep = EmulatorReport(k, 0, 0.0, 0.0, {})
    for r, u in enumerate(srcs):
        for v in by_src[u]:
            dg = exact[r, v]
            if u == v or not np.isfinite(dg):
                continue
            d = dh[r, v]
            if not np.isfinite(d):
                raise AssertionError(f"emulator leaves connected pair ({u},{v}) disconnected")
            if d < dg * (1 - RTOL):
                raise AssertionError(f"emulator shortens ({u},{v}): {d} < {dg}")
            s = float(d - dg)
            rep.pairs += 1
            rep.surplus[(u, v)] = s
            rep.max_surplus = max(rep.max_surplus, s)
            rep.max_normalized = max(rep.max_normalized, s / (k * dg ** (1 - 1 / k)))
    return rep


# ---------------------------------------------------------------- accounting


def hopset_stats(h: Hopset, n: int, params: HopsetParams | None = None) -> dict:
    deg = h.out_degrees() if h.n else []
    per_level: Counter = Counter(h.level_of[u] for u, _, _ in h.edges)
    out = {
        "size": h.size,
        "max_out_degree": max(deg) if deg else 0,
        "per_level": {str(i): per_level[i] for i in sorted(per_level)},
    }
    if params is not None:
        ref = n ** (1 + params.nu)
        out["reference_n_pow_1_plus_nu"] = ref
        factor = {"basic": params.k, "improved": 3}.get(params.variant)
        if factor is not None:
            out["expected_size_bound"] = factor * ref
    return out
