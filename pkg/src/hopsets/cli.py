"""Command line: gen, hopset, verify, simulate, route, bench.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import congest, reports
from .errors import HopsetError
from .graph import distance_matrix, gen_graph, parse_graph
from .hopset import Hopset, HopsetParams, build_emulator, build_hopset, recursive_hopset
from .routing import build_routing_scheme, route
from .verify import hopset_stats, sample_pairs, verify_emulator, verify_hopset


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _params(a) -> HopsetParams:
    return HopsetParams(a.k, a.variant, a.rho, a.eps, strict_rho=not getattr(a, "relax_rho", False))


def _add_params(p, eps=0.5):
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--variant", choices=["basic", "improved", "efficient"], default="basic")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--seed", type=int, default=0)


def _config(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in ("func", "output", "report", "scheme_out")}


def cmd_gen(a) -> int:
    g = gen_graph(a.kind, a.n, a.seed, p=a.p, rows=a.rows, cols=a.cols, wmin=a.wmin, wmax=a.wmax,
                  unweighted=a.unweighted, largest_cc=a.largest_cc, integer_weights=a.integer_weights)
    _write(a.output, g.to_text())
    return 0


def cmd_hopset(a) -> int:
    g = parse_graph(_read(a.graph))
    params = _params(a)
    if a.method == "sequential":
        h = build_hopset(g, params, a.seed)
    elif a.method == "emulator":
        h = build_emulator(g, a.k, a.seed)
    elif a.method == "recursive":
        h = recursive_hopset(g, params, a.iterations, a.seed)
    else:
        h, _ = congest.run_clique_hopset(g, params, a.eps, a.stride, a.seed, a.fidelity)
    _write(a.output, h.to_text())
    if a.report:
        stats = hopset_stats(h, g.n, params)
        stats["beta"] = h.beta
        _write(a.report, reports.canonical(reports.make_report("hopset", _config(a), a.seed, stats)))
    return 0


def _load_hopset(where: str, n: int) -> Hopset:
    if where == "empty":
        return Hopset.empty(n)
    return Hopset.from_text(n, _read(where))


def cmd_verify(a) -> int:
    g = parse_graph(_read(a.graph))
    h = _load_hopset(a.hopset, g.n)
    if a.emulator is not None:
        rep = verify_emulator(g, h, a.emulator, a.pairs, seed=a.seed, count=a.count)
        body, ok = rep.to_dict(), True
    else:
        rep = verify_hopset(g, h, a.eps, a.beta, a.pairs, seed=a.seed, count=a.count)
        body, ok = rep.to_dict(), rep.ok
    _write(a.output, reports.canonical(reports.make_report("verify", _config(a), a.seed, body)))
    return 0 if ok else 1


def cmd_simulate(a) -> int:
    g = parse_graph(_read(a.graph))
    params = _params(a)
    if a.model == "clique":
        h, trace = congest.run_clique_hopset(g, params, a.eps, a.stride, a.seed, a.fidelity)
        extra = {}
    elif a.model == "congest":
        h, trace = congest.run_congest_hopset(g, params, a.eps, prob=a.vprime_prob, hop_bound=a.hop_bound,
                                              seed=a.seed, t_stride=a.stride)
        extra = {}
    else:
        pr, trace = congest.run_path_reporting(g, params, a.eps, prob=a.vprime_prob, hop_bound=a.hop_bound,
                                               seed=a.seed)
        h = pr.hopset
        extra = {"registry_max": pr.max_registry}
    if a.hopset_out:
        _write(a.hopset_out, h.to_text())
    body = {"trace": trace.to_dict(), "hopset_size": h.size, "beta": h.beta, **extra}
    _write(a.output, reports.canonical(reports.make_report("simulate", _config(a), a.seed, body)))
    return 0


def _pair_list(a, g) -> list[tuple[int, int]]:
    if a.pair:
        out = []
        for p in a.pair:
            s, t = p.split(":")
            out.append((int(s), int(t)))
        return out
    if a.all:
        return [(s, t) for s in range(g.n) for t in range(g.n)]
    return sample_pairs(g, a.seed, a.count, 0)


def cmd_route(a) -> int:
    g = parse_graph(_read(a.graph))
    scheme, trace = build_routing_scheme(g, a.k, a.eps, a.seed, a.mode, hop_bound=a.hop_bound)
    if a.scheme_out:
        _write(a.scheme_out, scheme.to_json() + "\n")
    bound = a.max_stretch if a.max_stretch is not None else 4 * a.k - 5 + 0.5
    pairs = _pair_list(a, g)
    worst, bad, lines = 1.0, 0, []
    by_src: dict[int, np.ndarray] = {}
    for s, t in pairs:
        if s not in by_src:
            by_src[s] = distance_matrix(g, [s])[0]
        r = route(scheme, s, t, exact=float(by_src[s][t]))
        worst = max(worst, r.stretch)
        bad += r.stretch > bound * (1 + 1e-9)
        lines.append(r.line())
    _write(a.output, "".join(ln + "\n" for ln in lines))
    if a.report:
        body = {"pairs": len(pairs), "max_stretch": worst, "stretch_bound": bound, "over_bound": bad,
                **scheme.size_report()}
        if trace is not None:
            body["trace"] = trace
        _write(a.report, reports.canonical(reports.make_report("route", _config(a), a.seed, body)))
    return 1 if bad else 0


def cmd_bench(a) -> int:
    params = _params(a)
    rows = []
    for seed in range(a.seed, a.seed + a.seeds):
        g = gen_graph(a.kind, a.n, seed, p=a.p, largest_cc=True)
        t0 = time.perf_counter()
        h = build_hopset(g, params, seed)
        t1 = time.perf_counter()
        rep = verify_hopset(g, h, a.eps, a.beta or h.beta, seed=seed, count=a.count)
        t2 = time.perf_counter()
        rows.append({"seed": seed, "n": g.n, "m": g.m, "size": h.size, "beta": a.beta or h.beta,
                     "violations": len(rep.violations), "max_ratio": rep.max_ratio,
                     "min_beta_histogram": rep.histogram(),
                     "timing": {"build_s": t1 - t0, "verify_s": t2 - t1}})
    sizes = [r["size"] for r in rows]
    ref = hopset_stats(Hopset.empty(a.n), a.n, params)
    body = {"runs": rows, "mean_size": float(np.mean(sizes)),
            "reference_n_pow_1_plus_nu": ref["reference_n_pow_1_plus_nu"],
            "expected_size_bound": ref.get("expected_size_bound")}
    text = reports.canonical(reports.make_report("bench", _config(a), a.seed, body))
    if a.timing:
        import json

        text = json.dumps(reports.jsonable(reports.make_report("bench", _config(a), a.seed, body)),
                          sort_keys=True, indent=2) + "\n"
    _write(a.output, text)
    return 1 if any(r["violations"] for r in rows) else 0


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hopsets", description="Hopsets, distributed simulation and compact routing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph")
    p.add_argument("--kind", choices=["path", "grid", "gnp", "tree"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--wmin", type=float, default=1.0)
    p.add_argument("--wmax", type=float, default=100.0)
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--integer-weights", action="store_true")
    p.add_argument("--largest-cc", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("hopset", help="build a hopset; writes 'u v w level' lines")
    p.add_argument("graph")
    _add_params(p)
    p.add_argument("--method", choices=["sequential", "clique", "recursive", "emulator"], default="sequential")
    p.add_argument("--iterations", type=int, default=2)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--fidelity", choices=list(congest.FIDELITIES), default="costed")
    p.add_argument("--relax-rho", action="store_true", help="allow rho below 2*nu")
    p.add_argument("-o", "--output")
    p.add_argument("--report")
    p.set_defaults(func=cmd_hopset)

    p = sub.add_parser("verify", help="check the stretch guarantee of a hopset")
    p.add_argument("graph")
    p.add_argument("--hopset", default="-", help="file, '-' for stdin, or 'empty'")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--pairs", choices=["sample", "all"], default="sample")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--emulator", type=int, default=None, metavar="K", help="check additive surplus instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run a distributed construction and print its trace")
    p.add_argument("graph")
    _add_params(p, eps=0.4)
    p.add_argument("--model", choices=["clique", "congest", "path-reporting"], default="clique")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--fidelity", choices=list(congest.FIDELITIES), default="costed")
    p.add_argument("--vprime-prob", type=float, default=1.0)
    p.add_argument("--hop-bound", type=int, default=None)
    p.add_argument("--relax-rho", action="store_true", help="allow rho below 2*nu")
    p.add_argument("--hopset-out")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("route", help="build a routing scheme and route pairs")
    p.add_argument("graph")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--mode", choices=["simulated", "sequential"], default="simulated")
    p.add_argument("--hop-bound", type=int, default=None)
    p.add_argument("--pair", action="append", metavar="S:T")
    p.add_argument("--all", action="store_true")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--max-stretch", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme-out")
    p.add_argument("--report")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("bench", help="build and verify hopsets over several seeds")
    p.add_argument("--kind", choices=["path", "grid", "gnp", "tree"], default="gnp")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--beta", type=int, default=None)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--timing", action="store_true", help="include wall-clock times (not canonical)")
    _add_params(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        a = parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return a.func(a)
    except (HopsetError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
