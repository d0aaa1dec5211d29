"""Timing comparison of the compiled kernels against the pure NumPy fallback."""

from __future__ import annotations

import time

import numpy as np

from . import _backend
from .graphs import circulant_with_degree, complete_graph
from .martingale import run_trace
from .oracle import _CACHE, enumerate_graph
from .rng import make_rng
from .sampling import subgraph_degrees


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmarks(repeats: int = 3) -> dict:
    """Best-of-N wall times for each hot kernel on each available backend."""
    backends = _backend.available_backends()
    out: dict = {"backends": list(backends), "repeats": repeats, "kernels": {}}

    g_deg = circulant_with_degree(2000, 20)
    x_deg = make_rng(1, 0).random(g_deg.n)

    g_oracle = complete_graph(7)
    g_trace = circulant_with_degree(400, 20)
    rng = make_rng(2, 0)
    x_trace = rng.random(g_trace.n)
    order = rng.permutation(g_trace.n)

    cases = {
        "subgraph_degrees_n2000_d20_x100": lambda b: [
            subgraph_degrees(g_deg, x_deg, backend=b) for _ in range(100)],
        "oracle_sweep_K7": lambda b: (_CACHE.clear(),
                                      enumerate_graph(g_oracle, backend=b, verbose=False)),
        "trace_n400_d20": lambda b: run_trace(g_trace, order, x_trace, 10, backend=b),
    }
    for name, fn in cases.items():
        row = {}
        for b in backends:
            row[b] = _time(lambda: fn(b), repeats)
        if "compiled" in row and row["compiled"] > 0:
            row["speedup"] = row["pure"] / row["compiled"]
        out["kernels"][name] = row
    return out
