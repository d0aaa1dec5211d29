"""Config-driven verification runs: schema, check registry, bound reports.

A verification config is a YAML document with a ``run`` section and a list of
``checks``.  Validation is strict: unknown keys anywhere are errors, reported
with their full field path, since silent typos in experiment configs are the
main reproducibility hazard.  The resulting BoundReport JSON contains no
timestamps or thread counts, so reruns with the same master seed are
byte-identical regardless of parallelism.
"""

from __future__ import annotations

import json
from fractions import Fraction

import yaml

from . import analysis, oracle
from .binomial import binomial_segment_integral
from .graphs import GraphFamilySpec, build_graph, codegree, codegree_sum
from .martingale import run_trace_with_decomposition
from .rng import make_rng

_SEED_STRIDE = 0x9E3779B97F4A7C15  # per-check golden-ratio stride, mod 2^63


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


# -- strict schema helpers -----------------------------------------------------

def _need_map(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return node


def _need_list(node, path, min_len=0):
    if not isinstance(node, list):
        raise ConfigError(f"{path}: expected a list")
    if len(node) < min_len:
        raise ConfigError(f"{path}: expected at least {min_len} entries")
    return node


def _need_int(node, path, minimum=None, maximum=None):
    if isinstance(node, bool) or not isinstance(node, int):
        raise ConfigError(f"{path}: expected an integer")
    if minimum is not None and node < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {node}")
    if maximum is not None and node > maximum:
        raise ConfigError(f"{path}: must be <= {maximum}, got {node}")
    return node


def _need_number(node, path, minimum=None):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    if minimum is not None and node < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {node}")
    return float(node)


def _only_keys(node, path, required, optional=()):
    for key in node:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in node:
            raise ConfigError(f"{path}.{key}: missing required key")


_GRAPH_KEYS = {
    "complete": ({"family", "n"}, set()),
    "circulant": ({"family", "n"}, {"offsets", "d"}),
    "complete_bipartite": ({"family", "m"}, set()),
    "hypercube": ({"family", "dim"}, set()),
    "random_regular": ({"family", "n", "d", "seed"}, {"method"}),
    "disjoint_cliques": ({"family", "copies", "size"}, set()),
    "from_file": ({"family", "path"}, set()),
}


def graph_spec_from_config(node, path) -> GraphFamilySpec:
    node = _need_map(node, path)
    family = node.get("family")
    if family not in _GRAPH_KEYS:
        raise ConfigError(f"{path}.family: expected one of {sorted(_GRAPH_KEYS)}, got {family!r}")
    required, optional = _GRAPH_KEYS[family]
    _only_keys(node, path, required, optional)
    if family == "complete":
        return GraphFamilySpec("complete", (_need_int(node["n"], f"{path}.n", 2),))
    if family == "circulant":
        n = _need_int(node["n"], f"{path}.n", 3)
        if ("offsets" in node) == ("d" in node):
            raise ConfigError(f"{path}: circulant needs exactly one of 'offsets' or 'd'")
        if "offsets" in node:
            offs = [_need_int(o, f"{path}.offsets[{i}]", 1)
                    for i, o in enumerate(_need_list(node["offsets"], f"{path}.offsets", 1))]
        else:
            d = _need_int(node["d"], f"{path}.d", 1)
            offs = list(range(1, d // 2 + 1)) + ([n // 2] if d % 2 else [])
        return GraphFamilySpec("circulant", (n, *offs))
    if family == "complete_bipartite":
        return GraphFamilySpec("complete_bipartite", (_need_int(node["m"], f"{path}.m", 1),))
    if family == "hypercube":
        return GraphFamilySpec("hypercube", (_need_int(node["dim"], f"{path}.dim", 1),))
    if family == "random_regular":
        return GraphFamilySpec(
            "random_regular",
            (_need_int(node["n"], f"{path}.n", 2), _need_int(node["d"], f"{path}.d", 1)),
            seed=_need_int(node["seed"], f"{path}.seed", 0),
            method=node.get("method", "auto"))
    if family == "disjoint_cliques":
        return GraphFamilySpec("disjoint_cliques",
                               (_need_int(node["copies"], f"{path}.copies", 1),
                                _need_int(node["size"], f"{path}.size", 2)))
    return GraphFamilySpec("from_file", (), path=str(node["path"]))


def _graph_list(node, path) -> list[GraphFamilySpec]:
    return [graph_spec_from_config(item, f"{path}[{i}]")
            for i, item in enumerate(_need_list(node, path, 1))]


# -- check implementations -----------------------------------------------------

def _check_exact_degree_law(params, seed, threads, backend):
    results = []
    ok = True
    for spec in params["graphs"]:
        g = build_graph(spec)
        enum = oracle.enumerate_graph(g, backend=backend, workers=threads or 1)
        target = Fraction(1, g.d + 1)
        exact = all(p == target for v in range(g.n) for p in enum.degree_pmf(v))
        ok = ok and exact
        results.append({"graph": g.descriptor, "target": oracle.fraction_str(target),
                        "all_equal": exact})
    return {"graphs": results, "passed": ok}


def _check_exact_variance_bound(params, seed, threads, backend):
    results = []
    ok = True
    for spec in params["graphs"]:
        g = build_graph(spec)
        enum = oracle.enumerate_graph(g, backend=backend, workers=threads or 1)
        cap = Fraction(analysis.VARIANCE_CAP_FACTOR * g.n, g.d + 1)
        per_k = []
        for k in range(g.d + 1):
            _, var = enum.mean_var(k)
            good = var <= cap
            ok = ok and good
            per_k.append({"k": k, "variance": oracle.fraction_str(var),
                          "variance_float": float(var), "passed": bool(good)})
        results.append({"graph": g.descriptor, "cap": oracle.fraction_str(cap),
                        "per_k": per_k})
    return {"graphs": results, "passed": ok}


def _check_exact_joint_bound(params, seed, threads, backend):
    results = []
    ok = True
    for spec in params["graphs"]:
        g = build_graph(spec)
        enum = oracle.enumerate_graph(g, backend=backend, workers=threads or 1)
        worst = Fraction(0)
        worst_at = None
        good = True
        for u in range(g.n):
            for v in range(u + 1, g.n):
                cap = oracle.joint_bound(g.d, codegree(g, u, v))
                for k in range(g.d + 1):
                    val = enum.joint(u, v, k)
                    if val > cap:
                        good = False
                    if cap > 0 and val / cap > worst:
                        worst = val / cap
                        worst_at = [u, v, k]
        ok = ok and good
        results.append({"graph": g.descriptor, "passed": good,
                        "worst_fill_of_bound": float(worst), "worst_at": worst_at,
                        "joint_ratio_max": enum.joint_ratio_max()})
    return {"graphs": results, "passed": ok}


def _check_exact_chebyshev_tails(params, seed, threads, backend):
    """Exhaustive exact tails against Var/z^2, as literal rational inequalities."""
    results = []
    ok = True
    for spec in params["graphs"]:
        g = build_graph(spec)
        enum = oracle.enumerate_graph(g, backend=backend, workers=threads or 1)
        tested = 0
        good = True
        for k in range(g.d + 1):
            mean, var = enum.mean_var(k)
            zs = sorted({abs(Fraction(m) - mean) for m in range(g.n + 1)} - {Fraction(0)})
            for z in zs:
                if enum.exact_tail(k, z) > var / (z * z):
                    good = False
                tested += 1
        ok = ok and good
        results.append({"graph": g.descriptor, "inequalities": tested, "passed": good})
    return {"graphs": results, "passed": ok}


def _check_codegree_identity(params, seed, threads, backend):
    results = []
    ok = True
    built = 0
    for case in params["cases"]:
        n, d, count = case["n"], case["d"], case["count"]
        for i in range(count):
            spec = GraphFamilySpec("random_regular", (n, d), seed=seed + built)
            g = build_graph(spec)
            total = codegree_sum(g)
            good = total == n * d * (d - 1)
            ok = ok and good
            results.append({"graph": g.descriptor, "codegree_sum": total,
                            "expected": n * d * (d - 1), "passed": good})
            built += 1
    return {"graphs_built": built, "cases": results, "passed": ok}


def _check_monte_carlo(params, seed, threads, backend):
    cfg = analysis.ExperimentConfig(
        graph=params["graph"], trials=params["trials"], master_seed=seed,
        k_set=params.get("k_set", "all"),
        kappa_constant=params.get("kappa_constant", 1.0),
        threads=threads, backend=backend)
    report = analysis.run_monte_carlo(cfg)
    if params["trials"] >= 100:
        g = build_graph(params["graph"])
        cap = 1.1 * analysis.VARIANCE_CAP_FACTOR * g.n / (g.d + 1)
        var_ok = all(r["variance"] <= cap for r in report["per_k"])
        report["variance_limit_with_slack"] = cap
        report["variances_within_slack_cap"] = var_ok
        report["passed"] = bool(report["passed"] and var_ok)
    return report


def _check_variance_bound(params, seed, threads, backend):
    g = build_graph(params["graph"])
    results = []
    ok = True
    for k in params.get("k_set", list(range(g.d + 1))):
        res = analysis.verify_variance_bound(
            g, k, params.get("trials", 0), seed,
            mode=params.get("mode", "auto"), threads=threads, backend=backend)
        ok = ok and res["passed"]
        results.append(res)
    return {"per_k": results, "passed": ok}


def _check_variance_proxy(params, seed, threads, backend):
    g = build_graph(params["graph"])
    k = params["k"]
    _, exact_var = oracle.enumerate_graph(g, backend=backend).mean_var(k)
    stats = analysis.trace_statistics(g, k, params["traces"], seed,
                                      threads=threads, backend=backend)
    m = stats["m_total"]
    mean = float(m.mean())
    se = float(m.std(ddof=1) / len(m) ** 0.5)
    dev = abs(mean - float(exact_var))
    ok = dev <= analysis.STAT_MARGIN_SE * se
    return {"graph": g.descriptor, "k": k, "traces": params["traces"],
            "mean_m_total": mean, "standard_error": se,
            "exact_variance": oracle.fraction_str(exact_var),
            "exact_variance_float": float(exact_var),
            "deviation_in_se": dev / se if se else 0.0, "passed": bool(ok)}


def _check_martingale_exactness(params, seed, threads, backend):
    g = build_graph(params["graph"])
    k = params["k"]
    # run_trace itself raises if any final count disagrees with the sampler
    stats = analysis.trace_statistics(g, k, params["traces"], seed,
                                      threads=threads, backend=backend, compute_sq=False)
    x0_probe = g.n * binomial_segment_integral(0.0, 1.0, g.d, k)
    x0_err = abs(x0_probe - g.n / (g.d + 1))
    max_tel = float(stats["telescope_err"].max())
    ok = bool(x0_err <= 1e-9 and max_tel <= 1e-8)
    return {"graph": g.descriptor, "k": k, "traces": params["traces"],
            "x0": g.n / (g.d + 1), "x0_error": x0_err,
            "max_telescope_error": max_tel, "final_counts_verified": True,
            "passed": ok}


def _check_decomposition_inequality(params, seed, threads, backend):
    g = build_graph(params["graph"])
    results = []
    ok = True
    worst = -1.0
    for k in params["k_set"]:
        for t in range(params["traces"]):
            rng = make_rng(seed, t + 100000 * k)
            x = rng.random(g.n)
            order = rng.permutation(g.n)
            trace, a1, a2 = run_trace_with_decomposition(g, order, x, k)
            gap = float((trace.sq_increments - (2 * a1 + 2 * a2)).max())
            worst = max(worst, gap)
            good = gap <= 1e-6
            ok = ok and good
            results.append({"k": k, "trace": t, "max_excess": gap, "passed": good})
    return {"graph": g.descriptor, "k_set": list(params["k_set"]),
            "traces": params["traces"], "worst_excess": worst,
            "tolerance": 1e-6, "per_trace": results, "passed": ok}


def _check_f_inequality(params, seed, threads, backend):
    return analysis.check_f_inequality(params.get("grid", 500))


def _check_stirling_delta(params, seed, threads, backend):
    return analysis.check_stirling_delta(params["samples"], seed)


def _check_interval_claims(params, seed, threads, backend):
    return analysis.interval_claims_stats(params["m"], params["h"], params["reps"],
                                          seed, kappa=params.get("kappa"))


def _check_concentration(params, seed, threads, backend):
    g = build_graph(params["graph"])
    return analysis.concentration_report(
        g, params["k"], params["trials"], seed, params["z_grid"],
        pilot_traces=params.get("pilot_traces", 200), threads=threads, backend=backend)


def _check_scaling_trend(params, seed, threads, backend):
    return analysis.scaling_study(params["n_list"], params["d"], params["trials"],
                                  seed, k=params.get("k"), threads=threads,
                                  backend=backend)


def _schema_graphs(node, path):
    return {"graphs": _graph_list(node.get("graphs"), f"{path}.graphs")}


_CHECKS = {}


def _register(name, schema_fn, runner):
    _CHECKS[name] = (schema_fn, runner)


def _schema_exact(node, path):
    _only_keys(node, path, {"type", "graphs"})
    return _schema_graphs(node, path)


def _schema_codegree(node, path):
    _only_keys(node, path, {"type", "cases"})
    cases = []
    for i, item in enumerate(_need_list(node["cases"], f"{path}.cases", 1)):
        item = _need_map(item, f"{path}.cases[{i}]")
        _only_keys(item, f"{path}.cases[{i}]", {"n", "d", "count"})
        cases.append({"n": _need_int(item["n"], f"{path}.cases[{i}].n", 2),
                      "d": _need_int(item["d"], f"{path}.cases[{i}].d", 1),
                      "count": _need_int(item["count"], f"{path}.cases[{i}].count", 1)})
    return {"cases": cases}


def _schema_monte_carlo(node, path):
    _only_keys(node, path, {"type", "graph", "trials"}, {"k_set", "kappa_constant"})
    params = {"graph": graph_spec_from_config(node["graph"], f"{path}.graph"),
              "trials": _need_int(node["trials"], f"{path}.trials", 1)}
    if "k_set" in node and node["k_set"] != "all":
        params["k_set"] = tuple(_need_int(k, f"{path}.k_set[{i}]", 0)
                                for i, k in enumerate(_need_list(node["k_set"], f"{path}.k_set", 1)))
    if "kappa_constant" in node:
        params["kappa_constant"] = _need_number(node["kappa_constant"], f"{path}.kappa_constant", 1e-9)
    return params


def _schema_variance_bound(node, path):
    _only_keys(node, path, {"type", "graph"}, {"k_set", "trials", "mode"})
    params = {"graph": graph_spec_from_config(node["graph"], f"{path}.graph"),
              "mode": node.get("mode", "auto")}
    if params["mode"] not in ("auto", "exact", "sampling"):
        raise ConfigError(f"{path}.mode: expected auto|exact|sampling")
    if "trials" in node:
        params["trials"] = _need_int(node["trials"], f"{path}.trials", 100)
    elif params["mode"] == "sampling":
        raise ConfigError(f"{path}.trials: required for sampling mode (>= 100)")
    if "k_set" in node:
        params["k_set"] = [_need_int(k, f"{path}.k_set[{i}]", 0)
                           for i, k in enumerate(_need_list(node["k_set"], f"{path}.k_set", 1))]
    return params


def _schema_traces(extra=()):
    def schema(node, path):
        _only_keys(node, path, {"type", "graph", "k", "traces"}, set(extra))
        return {"graph": graph_spec_from_config(node["graph"], f"{path}.graph"),
                "k": _need_int(node["k"], f"{path}.k", 0),
                "traces": _need_int(node["traces"], f"{path}.traces", 1)}
    return schema


def _schema_decomposition(node, path):
    _only_keys(node, path, {"type", "graph", "k_set", "traces"})
    return {"graph": graph_spec_from_config(node["graph"], f"{path}.graph"),
            "k_set": [_need_int(k, f"{path}.k_set[{i}]", 0)
                      for i, k in enumerate(_need_list(node["k_set"], f"{path}.k_set", 1))],
            "traces": _need_int(node["traces"], f"{path}.traces", 1)}


def _schema_f_inequality(node, path):
    _only_keys(node, path, {"type"}, {"grid"})
    return {"grid": _need_int(node.get("grid", 500), f"{path}.grid", 100)}


def _schema_stirling(node, path):
    _only_keys(node, path, {"type", "samples"})
    return {"samples": _need_int(node["samples"], f"{path}.samples", 1000)}


def _schema_interval(node, path):
    _only_keys(node, path, {"type", "m", "h", "reps"}, {"kappa"})
    params = {"m": _need_int(node["m"], f"{path}.m", 100),
              "h": _need_number(node["h"], f"{path}.h", 1.0000001),
              "reps": _need_int(node["reps"], f"{path}.reps", 100)}
    if "kappa" in node:
        params["kappa"] = _need_number(node["kappa"], f"{path}.kappa", 1e-9)
    return params


def _schema_concentration(node, path):
    _only_keys(node, path, {"type", "graph", "k", "trials", "z_grid"}, {"pilot_traces"})
    params = {"graph": graph_spec_from_config(node["graph"], f"{path}.graph"),
              "k": _need_int(node["k"], f"{path}.k", 0),
              "trials": _need_int(node["trials"], f"{path}.trials", 1000),
              "z_grid": [_need_number(z, f"{path}.z_grid[{i}]", 0.0)
                         for i, z in enumerate(_need_list(node["z_grid"], f"{path}.z_grid", 1))]}
    if "pilot_traces" in node:
        params["pilot_traces"] = _need_int(node["pilot_traces"], f"{path}.pilot_traces", 50)
    return params


def _schema_scaling(node, path):
    _only_keys(node, path, {"type", "n_list", "d", "trials"}, {"k"})
    params = {"n_list": [_need_int(n, f"{path}.n_list[{i}]", 4)
                         for i, n in enumerate(_need_list(node["n_list"], f"{path}.n_list", 3))],
              "d": _need_int(node["d"], f"{path}.d", 2),
              "trials": _need_int(node["trials"], f"{path}.trials", 10)}
    if "k" in node:
        params["k"] = _need_int(node["k"], f"{path}.k", 0)
    return params


_register("exact_degree_law", _schema_exact, _check_exact_degree_law)
_register("exact_variance_bound", _schema_exact, _check_exact_variance_bound)
_register("exact_joint_bound", _schema_exact, _check_exact_joint_bound)
_register("exact_chebyshev_tails", _schema_exact, _check_exact_chebyshev_tails)
_register("codegree_identity", _schema_codegree, _check_codegree_identity)
_register("monte_carlo", _schema_monte_carlo, _check_monte_carlo)
_register("variance_bound", _schema_variance_bound, _check_variance_bound)
_register("variance_proxy", _schema_traces(), _check_variance_proxy)
_register("martingale_exactness", _schema_traces(), _check_martingale_exactness)
_register("decomposition_inequality", _schema_decomposition, _check_decomposition_inequality)
_register("f_inequality", _schema_f_inequality, _check_f_inequality)
_register("stirling_delta", _schema_stirling, _check_stirling_delta)
_register("interval_claims", _schema_interval, _check_interval_claims)
_register("concentration", _schema_concentration, _check_concentration)
_register("scaling_trend", _schema_scaling, _check_scaling_trend)


def validate_config(doc) -> dict:
    """Validate a parsed YAML document; returns {master_seed?, checks: [...]}."""
    doc = _need_map(doc, "config")
    _only_keys(doc, "config", {"checks"}, {"run"})
    out = {"master_seed": None, "checks": []}
    if "run" in doc:
        run = _need_map(doc["run"], "run")
        _only_keys(run, "run", set(), {"master_seed"})
        if "master_seed" in run:
            out["master_seed"] = _need_int(run["master_seed"], "run.master_seed", 0)
    for i, item in enumerate(_need_list(doc["checks"], "checks", 1)):
        path = f"checks[{i}]"
        item = _need_map(item, path)
        ctype = item.get("type")
        if ctype not in _CHECKS:
            raise ConfigError(f"{path}.type: expected one of {sorted(_CHECKS)}, got {ctype!r}")
        schema_fn, _ = _CHECKS[ctype]
        out["checks"].append({"type": ctype, "params": schema_fn(item, path), "raw": item})
    return out


def load_config(path: str) -> dict:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not valid YAML ({exc})") from exc
    return validate_config(doc)


def run_verification(config: dict, master_seed: int, threads: int | None = None,
                     backend: str | None = None) -> dict:
    """Run every configured check; the report is stable across thread counts."""
    checks = []
    all_ok = True
    for idx, check in enumerate(config["checks"]):
        _, runner = _CHECKS[check["type"]]
        seed = (master_seed + _SEED_STRIDE * (idx + 1)) % (1 << 63)
        result = runner(check["params"], seed, threads, backend)
        all_ok = all_ok and bool(result["passed"])
        checks.append({"index": idx, "type": check["type"], "check_seed": seed,
                       "config": check["raw"], "result": result,
                       "passed": bool(result["passed"])})
    return {
        "tool": "irrsub",
        "report": "bound-verification",
        "master_seed": master_seed,
        "checks": checks,
        "passed": all_ok,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False,
                      default=_json_default) + "\n"


def _json_default(obj):
    import numpy as np
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, GraphFamilySpec):
        return {"family": obj.family, "parameters": list(obj.parameters),
                "seed": obj.seed, "path": obj.path}
    if isinstance(obj, Fraction):
        return oracle.fraction_str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")
