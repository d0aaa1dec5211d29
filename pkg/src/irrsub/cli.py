"""Command-line front end.

Subcommands: generate (graph files), sample (degree histograms), oracle
(exact small-graph probabilities), martingale (trace summaries/dumps),
verify (config-driven bound report) and bench (backend comparison).

Exit codes: 0 all assertions passed, 1 assertion failure, 2 usage or config
error, 3 runtime error.  Every command that consumes randomness prints its
master seed to stderr and persists it in the run manifest; without --seed a
fresh seed is drawn from system entropy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib.resources import files as _resource_files

from . import _backend, analysis, manifest, oracle, verify
from .graphs import (GraphConstructionError, GraphFamilySpec, build_graph,
                     load_edge_list, save_edge_list)
from .martingale import QuadratureSpec, random_trace, write_trace_csv
from .rng import fresh_seed
from .sampling import degree_histogram, sample_weights_for_trial, subgraph_degrees

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = fresh_seed()
        _note(f"master seed (from system entropy): {seed}")
    else:
        _note(f"master seed: {seed}")
    return seed


def _graph_spec_from_args(args) -> GraphFamilySpec:
    fam = args.family.replace("-", "_")
    if fam == "complete":
        _need(args.n is not None, "--n is required for complete")
        return GraphFamilySpec("complete", (args.n,))
    if fam == "circulant":
        _need(args.n is not None, "--n is required for circulant")
        if args.offsets:
            offs = tuple(int(o) for o in args.offsets.split(","))
        elif args.d is not None:
            offs = tuple(range(1, args.d // 2 + 1)) + ((args.n // 2,) if args.d % 2 else ())
        else:
            raise CliError("circulant needs --offsets or --d")
        return GraphFamilySpec("circulant", (args.n, *offs))
    if fam == "complete_bipartite":
        _need(args.m is not None, "--m is required for complete-bipartite")
        return GraphFamilySpec("complete_bipartite", (args.m,))
    if fam == "hypercube":
        _need(args.dim is not None, "--dim is required for hypercube")
        return GraphFamilySpec("hypercube", (args.dim,))
    if fam == "random_regular":
        _need(args.n is not None and args.d is not None,
              "--n and --d are required for random-regular")
        seed = args.seed if args.seed is not None else fresh_seed()
        return GraphFamilySpec("random_regular", (args.n, args.d), seed=seed,
                               method=args.method)
    if fam == "disjoint_cliques":
        _need(args.copies is not None and args.size is not None,
              "--copies and --size are required for disjoint-cliques")
        return GraphFamilySpec("disjoint_cliques", (args.copies, args.size))
    raise CliError(f"unknown family {args.family!r}")


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise CliError(message)


def cmd_generate(args) -> int:
    started = time.time()
    spec = _graph_spec_from_args(args)
    if spec.seed is not None:
        _note(f"graph seed: {spec.seed}")
    g = build_graph(spec)
    save_edge_list(g, args.out)
    manifest.write_manifest(args.out, "generate",
                            {"family": spec.family, "parameters": list(spec.parameters),
                             "method": spec.method},
                            spec.seed, started, [args.out], g.descriptor)
    _note(f"wrote {g.descriptor} to {args.out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    started = time.time()
    if args.trials < 1:
        raise CliError("--trials must be >= 1")
    g = load_edge_list(args.graph)
    seed = _resolve_seed(args.seed)
    if args.k is not None and not 0 <= args.k <= g.d:
        raise CliError(f"--k must lie in [0, {g.d}]")
    lines = []
    for t in range(args.trials):
        w = sample_weights_for_trial(g.n, seed, t)
        hist = degree_histogram(subgraph_degrees(g, w, backend=args.backend), g.d)
        record = {
            "trial": t,
            "seed": [seed, t],
            "counts": hist.counts.tolist(),
            "max_count": hist.max_count,
        }
        if args.k is not None:
            record["k"] = args.k
            record["count_k"] = int(hist.counts[args.k])
        lines.append(json.dumps(record, sort_keys=True))
    manifest.atomic_write_text(args.out, "\n".join(lines) + "\n")
    manifest.write_manifest(args.out, "sample",
                            {"graph": args.graph, "trials": args.trials, "k": args.k},
                            seed, started, [args.out], g.descriptor)
    return EXIT_OK


def cmd_oracle(args) -> int:
    started = time.time()
    g = load_edge_list(args.graph)
    try:
        enum = oracle.enumerate_graph(g, size_cap=args.cap, backend=args.backend,
                                      workers=analysis.resolve_threads(args.threads))
    except oracle.OracleSizeError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    out: dict = {"graph": g.descriptor, "n": g.n, "d": g.d,
                 "order_types": enum.denominator, "query": args.query}
    if args.query == "pmf":
        v = args.v if args.v is not None else 0
        pmf = enum.degree_pmf(v)
        out["v"] = v
        out["pmf"] = [oracle.fraction_str(p) for p in pmf]
        out["pmf_float"] = [float(p) for p in pmf]
    elif args.query == "joint":
        _need(args.u is not None and args.v is not None, "joint query needs --u and --v")
        _need(args.k is not None, "joint query needs --k")
        val = enum.joint(args.u, args.v, args.k)
        out.update({"u": args.u, "v": args.v, "k": args.k,
                    "joint": oracle.fraction_str(val), "joint_float": float(val)})
    elif args.query == "mean-var":
        _need(args.k is not None, "mean-var query needs --k")
        mean, var = enum.mean_var(args.k)
        out.update({"k": args.k, "mean": oracle.fraction_str(mean),
                    "mean_float": float(mean), "variance": oracle.fraction_str(var),
                    "variance_float": float(var),
                    "joint_ratio_max": enum.joint_ratio_max()})
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        manifest.atomic_write_text(args.out, text)
        manifest.write_manifest(args.out, "oracle",
                                {"graph": args.graph, "query": args.query},
                                None, started, [args.out], g.descriptor)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_martingale(args) -> int:
    started = time.time()
    g = load_edge_list(args.graph)
    if not 0 <= args.k <= g.d:
        raise CliError(f"--k must lie in [0, {g.d}]")
    if args.traces < 1:
        raise CliError("--traces must be >= 1")
    seed = _resolve_seed(args.seed)
    quad = QuadratureSpec(nodes=args.quad_nodes, rel_tol=args.quad_rel_tol)
    full_dir = None
    if args.full:
        full_dir = os.path.splitext(args.out)[0] + "_traces"
        os.makedirs(full_dir, exist_ok=True)
    lines = []
    outputs = [args.out]
    for t in range(args.traces):
        trace = random_trace(g, args.k, seed, t, quad=quad, backend=args.backend)
        record = {
            "trace": t,
            "seed": [seed, t],
            "k": args.k,
            "x0": float(trace.x_path[0]),
            "xn": float(trace.x_path[-1]),
            "final_count": trace.final_count,
            "max_abs_y": float(trace.max_abs_y),
            "m_total": float(trace.m_total),
            "quad_error": float(trace.quad_error),
        }
        lines.append(json.dumps(record, sort_keys=True))
        if full_dir:
            path = os.path.join(full_dir, f"trace_{t:05d}.csv")
            write_trace_csv(trace, path)
            outputs.append(path)
    manifest.atomic_write_text(args.out, "\n".join(lines) + "\n")
    manifest.write_manifest(args.out, "martingale",
                            {"graph": args.graph, "k": args.k, "traces": args.traces,
                             "quad_nodes": args.quad_nodes},
                            seed, started, outputs, g.descriptor)
    return EXIT_OK


def _locate_config(name: str) -> str:
    if os.path.exists(name):
        return name
    bundled = _resource_files("irrsub").joinpath("configs", f"{name}.yaml")
    if bundled.is_file():
        return str(bundled)
    raise CliError(f"config not found: {name!r} (no such file, no bundled config)")


def cmd_verify(args) -> int:
    started = time.time()
    path = _locate_config(args.config)
    try:
        config = verify.load_config(path)
    except verify.ConfigError as exc:
        raise CliError(f"config error: {exc}", EXIT_USAGE) from exc
    seed = args.seed if args.seed is not None else config["master_seed"]
    seed = _resolve_seed(seed)
    report = verify.run_verification(config, seed,
                                     threads=analysis.resolve_threads(args.threads),
                                     backend=args.backend)
    text = verify.report_to_json(report)
    if args.out:
        manifest.atomic_write_text(args.out, text)
        manifest.write_manifest(args.out, "verify", {"config": path}, seed,
                                started, [args.out])
        _note(f"wrote report to {args.out}")
    else:
        sys.stdout.write(text)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        _note(f"[{status}] {check['type']}")
    return EXIT_OK if report["passed"] else EXIT_ASSERTION


def cmd_bench(args) -> int:
    from .bench import run_benchmarks
    results = run_benchmarks(repeats=args.repeats)
    sys.stdout.write(json.dumps(results, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irrsub",
        description="Simulation and verification lab for irregular random subgraphs")
    parser.add_argument("--backend", choices=["auto", "pure", "compiled"], default=None,
                        help="kernel backend (default: compiled when available)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: env IRRSUB_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a graph file in edge-list format")
    p.add_argument("--family", required=True,
                   choices=["complete", "circulant", "complete-bipartite", "hypercube",
                            "random-regular", "disjoint-cliques"])
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--copies", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--offsets", type=str, help="comma-separated circulant offsets")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["auto", "rejection", "rematch"], default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="sample degree histograms to JSONL")
    p.add_argument("--graph", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("oracle", help="exact probabilities on small graphs")
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True, choices=["pmf", "joint", "mean-var"])
    p.add_argument("--v", type=int)
    p.add_argument("--u", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_SIZE_CAP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("martingale", help="run exposure traces, write summaries")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--traces", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--quad-nodes", type=int, default=32)
    p.add_argument("--quad-rel-tol", type=float, default=1e-6)
    p.add_argument("--full", action="store_true", help="also dump per-trace CSV files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_martingale)

    p = sub.add_parser("verify", help="run a verification config, write a bound report")
    p.add_argument("--config", required=True,
                   help="path to a YAML config, or a bundled name like 'smoke'")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="compare compiled and pure backends")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        try:
            _backend.set_backend(args.backend)
        except RuntimeError as exc:
            _note(f"error: {exc}")
            return EXIT_USAGE
    if args.threads is not None:
        os.environ["IRRSUB_THREADS"] = str(max(1, args.threads))
    try:
        return args.func(args)
    except CliError as exc:
        _note(f"error: {exc}")
        return exc.code
    except (GraphConstructionError, verify.ConfigError, ValueError) as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        _note(f"runtime error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
