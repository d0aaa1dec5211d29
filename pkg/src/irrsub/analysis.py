"""Monte Carlo experiment engine and bound-verification suite.

Every assertion here is either exact (rational arithmetic against the
enumeration oracle on small graphs) or statistical with an explicit margin of
three standard errors.  All randomized procedures draw one Philox stream per
trial from (master_seed, trial_index) and reduce results in trial order, so
reports are identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import chi2

from .graphs import Graph, GraphFamilySpec, build_graph, circulant_with_degree
from .martingale import (DEFAULT_QUAD, MartingaleTrace, QuadratureSpec, bernstein_tail,
                         random_trace)
from .oracle import DEFAULT_SIZE_CAP, enumerate_graph, fraction_str
from .rng import make_rng
from .sampling import degree_histogram, histogram_matrix, subgraph_degrees

VARIANCE_CAP_FACTOR = 17  # Var(m(H,k)) <= 17 n/(d+1) for every regular graph
STAT_MARGIN_SE = 3.0      # statistical assertions allow three standard errors


def resolve_threads(threads: int | None) -> int:
    if threads is not None and threads > 0:
        return threads
    env = os.environ.get("IRRSUB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_trials(trials: int, worker, threads: int | None = None) -> list:
    """Run worker(trial) for trial = 0..trials-1, results in trial order.

    Each worker derives its own RNG stream from its trial index, so the
    outcome is independent of the thread count and completion order.
    """
    nthreads = min(resolve_threads(threads), trials)
    if nthreads <= 1:
        return [worker(t) for t in range(trials)]
    results = [None] * trials
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        futures = {pool.submit(worker, t): t for t in range(trials)}
        for fut in futures:
            results[futures[fut]] = fut.result()
    return results


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: graph, trial count, seed and report knobs.

    ``kappa_constant`` is the reporting constant C in kappa = C log n and
    k_plus = C max(k, kappa); the underlying inequalities leave it
    unspecified, so it is recorded in reports but never asserted against.
    """

    graph: GraphFamilySpec
    trials: int
    master_seed: int
    k_set: tuple[int, ...] | str = "all"
    kappa_constant: float = 1.0
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    threads: int | None = None
    backend: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.kappa_constant <= 0:
            raise ValueError("kappa_constant must be positive")


def _resolve_k_set(k_set, d: int) -> list[int]:
    if k_set == "all":
        return list(range(d + 1))
    ks = sorted(set(int(k) for k in k_set))
    if any(k < 0 or k > d for k in ks):
        raise ValueError(f"k values must lie in [0, {d}]")
    return ks


def run_monte_carlo(cfg: ExperimentConfig) -> dict:
    """Sample m(H,k) over independent trials and report per-k statistics.

    Each per-k mean is checked against n/(d+1) with a window of four
    conservative standard errors, 4*sqrt(17*(n/(d+1))/trials); the empirical
    variance (when trials >= 2) is reported against the 17n/(d+1) cap.
    """
    g = build_graph(cfg.graph)
    n, d = g.n, g.d
    ks = _resolve_k_set(cfg.k_set, d)
    hist = histogram_matrix(g, cfg.trials, cfg.master_seed, backend=cfg.backend)
    mu = n / (d + 1)
    cap = VARIANCE_CAP_FACTOR * mu
    window = 4.0 * math.sqrt(cap / cfg.trials)
    kappa = cfg.kappa_constant * math.log(n)
    rows = []
    all_ok = True
    for k in ks:
        col = hist[:, k]
        mean = float(col.mean())
        if cfg.trials >= 2:
            var = float(col.var(ddof=1))
            var_flag = None
        else:
            var = None
            var_flag = "variance_undefined"
        mean_ok = abs(mean - mu) <= window
        all_ok = all_ok and mean_ok
        rows.append({
            "k": k,
            "mean": mean,
            "variance": var,
            "variance_flag": var_flag,
            "min": int(col.min()),
            "max": int(col.max()),
            "mean_ok": mean_ok,
            "k_plus": cfg.kappa_constant * max(k, kappa),
        })
    return {
        "graph": g.descriptor,
        "n": n,
        "d": d,
        "trials": cfg.trials,
        "master_seed": cfg.master_seed,
        "expected_mean": mu,
        "mean_window": window,
        "variance_cap": cap,
        "kappa": kappa,
        "kappa_constant": cfg.kappa_constant,
        "per_k": rows,
        "passed": all_ok,
    }


def verify_variance_bound(g: Graph, k: int, trials: int, seed: int,
                          mode: str = "auto", threads: int | None = None,
                          backend: str | None = None,
                          size_cap: int = DEFAULT_SIZE_CAP) -> dict:
    """Check Var(m(H,k)) <= 17 n/(d+1).

    Exact mode (n within the oracle cap) compares rationals strictly.
    Sampling mode compares the 99% chi-square upper confidence bound of the
    empirical variance against the cap with 10% slack, and needs trials >= 100.
    """
    if mode not in ("auto", "exact", "sampling"):
        raise ValueError(f"unknown mode {mode!r}")
    cap = Fraction(VARIANCE_CAP_FACTOR * g.n, g.d + 1)
    if mode == "exact" or (mode == "auto" and g.n <= size_cap):
        _, var = enumerate_graph(g, size_cap=size_cap, backend=backend).mean_var(k)
        ok = var <= cap
        return {"mode": "exact", "graph": g.descriptor, "k": k,
                "variance": fraction_str(var), "variance_float": float(var),
                "cap": fraction_str(cap), "passed": bool(ok)}
    if trials < 100:
        raise ValueError("sampling mode needs trials >= 100")
    hist = histogram_matrix(g, trials, seed, backend=backend)
    s2 = float(hist[:, k].var(ddof=1))
    ucb = (trials - 1) * s2 / float(chi2.ppf(0.01, trials - 1))
    limit = 1.1 * float(cap)
    return {"mode": "sampling", "graph": g.descriptor, "k": k, "trials": trials,
            "variance": s2, "variance_ucb99": ucb, "cap": float(cap),
            "limit_with_slack": limit, "passed": bool(ucb <= limit)}


def _bound_threshold(bound: float, trials: int) -> float:
    """bound + three binomial standard errors, clipped into [0, 1]."""
    b = min(max(bound, 0.0), 1.0)
    se = math.sqrt(b * (1.0 - b) / trials)
    return min(1.0, b + STAT_MARGIN_SE * se)


def trace_statistics(g: Graph, k: int, traces: int, seed: int,
                     quad: QuadratureSpec = DEFAULT_QUAD, threads: int | None = None,
                     backend: str | None = None, compute_sq: bool = True) -> dict:
    """Summaries over independent traces: max |Y_j|, M_n, endpoint checks."""
    def worker(t: int):
        tr = random_trace(g, k, seed, t, quad=quad, backend=backend, compute_sq=compute_sq)
        return (tr.max_abs_y, tr.m_total, tr.final_count,
                abs(tr.x_path[-1] - tr.final_count), tr.quad_error)

    rows = parallel_trials(traces, worker, threads)
    arr = np.array(rows, dtype=np.float64)
    return {
        "max_abs_y": arr[:, 0],
        "m_total": arr[:, 1],
        "final_counts": arr[:, 2].astype(np.int64),
        "telescope_err": arr[:, 3],
        "quad_err": arr[:, 4],
        "x0": g.n / (g.d + 1),
    }


def concentration_report(g: Graph, k: int, trials: int, seed: int,
                         z_grid, pilot_traces: int = 200,
                         quad: QuadratureSpec = DEFAULT_QUAD,
                         threads: int | None = None,
                         backend: str | None = None) -> dict:
    """Empirical tails of |m(H,k) - n/(d+1)| against two theoretical caps.

    The Chebyshev column is 17(n/(d+1))/z^2.  The Bernstein column evaluates
    the martingale bound at an increment cap a* and proxy cap L* measured as
    99.9% pilot quantiles, plus the empirical probabilities of exceeding
    either cap (the additive terms the bound requires).  Each empirical tail
    must stay below each cap plus three binomial standard errors.
    """
    if trials < 1000:
        raise ValueError("concentration_report needs trials >= 1000")
    mu = g.n / (g.d + 1)
    hist = histogram_matrix(g, trials, seed, backend=backend)
    dev = np.abs(hist[:, k] - mu)
    pilot = trace_statistics(g, k, pilot_traces, seed + 1, quad=quad,
                             threads=threads, backend=backend)
    a_star = float(np.quantile(pilot["max_abs_y"], 0.999))
    l_star = float(np.quantile(pilot["m_total"], 0.999))
    p_exceed_a = float(np.mean(pilot["max_abs_y"] > a_star))
    p_exceed_l = float(np.mean(pilot["m_total"] > l_star))
    table = []
    all_ok = True
    for z in z_grid:
        z = float(z)
        emp = float(np.mean(dev >= z)) if z > 0 else 1.0
        cheb = min(1.0, VARIANCE_CAP_FACTOR * mu / (z * z)) if z > 0 else 1.0
        bern = min(1.0, bernstein_tail(z, a_star, l_star) + p_exceed_a + p_exceed_l)
        ok = (emp <= _bound_threshold(cheb, trials)) and (emp <= _bound_threshold(bern, trials))
        all_ok = all_ok and ok
        table.append({"z": z, "empirical": emp, "chebyshev": cheb,
                      "bernstein": bern, "passed": ok})
    return {
        "graph": g.descriptor, "k": k, "trials": trials, "master_seed": seed,
        "a_star": a_star, "l_star": l_star,
        "p_exceed_a": p_exceed_a, "p_exceed_l": p_exceed_l,
        "pilot_traces": pilot_traces, "table": table, "passed": all_ok,
    }


# -- closed-form inequality checks ---------------------------------------------

def _log_uniform_grid(resolution: int) -> np.ndarray:
    """Grid covering (0,1) densely near both endpoints."""
    half = max(resolution // 2, 2)
    lo = np.geomspace(1e-6, 0.5, half)
    grid = np.concatenate([lo, 1.0 - lo[:resolution - half]])
    return np.unique(grid)


def check_f_inequality(grid_resolution: int = 500) -> dict:
    """The relative-entropy inequality behind the pointwise mass bounds.

    For f(a) = a log(x/a) + (1-a) log((1-x)/(1-a)): verify f <= 0 on a
    log-uniform grid of (x, a), f(x) = 0 on the diagonal, and report the
    empirical constant c_hat = min of -f / min(|x-a|, (1/x+1/(1-x))(x-a)^2).
    """
    if grid_resolution < 100:
        raise ValueError("grid_resolution must be >= 100")
    pts = _log_uniform_grid(grid_resolution)
    x = pts[:, None]
    a = pts[None, :]
    f = a * np.log(x / a) + (1.0 - a) * (np.log1p(-x) - np.log1p(-a))
    off = x != a
    denom = np.minimum(np.abs(x - a), (1.0 / x + 1.0 / (1.0 - x)) * (x - a) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(off, -f / denom, np.inf)
    diag = pts * np.log(pts / pts) + (1.0 - pts) * (np.log1p(-pts) - np.log1p(-pts))
    c_hat = float(ratios.min())
    max_f_off = float(f[off].max())
    spot = float(0.25 * math.log(0.5 / 0.25)
                 + 0.75 * (math.log1p(-0.5) - math.log1p(-0.25)))
    passed = bool(max_f_off < 0.0 and np.all(diag == 0.0) and c_hat > 0.0)
    return {"grid_resolution": int(grid_resolution), "grid_points": int(pts.size),
            "max_f_offdiagonal": max_f_off, "diag_all_zero": bool(np.all(diag == 0.0)),
            "c_hat": c_hat, "spot_f_quarter_half": spot, "passed": passed}


def check_stirling_delta(samples: int, seed: int, t_max: int = 200) -> dict:
    """Adjacent binomial mass gaps against their Stirling-form envelope.

    Samples (x, t, h) with 0 < h < t-1, computes the exact gap
    |p(x,t,h) - p(x,t,h+1)| in log space via its closed factorization and
    compares to (|t(a-x)|+3) / (a(1-a)t)^{3/2} * exp(f(a)(t-1)) with a =
    h/(t-1) and implied constant one.  Records the largest ratio (the
    empirical implied constant); asserts only that gaps are probabilities
    (<= 1) and ratios are finite.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    rng = make_rng(seed, 0)
    t = rng.integers(4, t_max + 1, size=samples)
    h = np.array([rng.integers(1, ti - 1) for ti in t])
    x = rng.random(samples)
    alpha = h / (t - 1.0)
    # exact gap: p(x,t,h) - p(x,t,h+1) = t!/((h+1)!(t-h)!) x^h (1-x)^(t-h-1)
    #            * ((1-x)(h+1) - x(t-h))
    from scipy.special import gammaln
    log_coeff = gammaln(t + 1.0) - gammaln(h + 2.0) - gammaln(t - h + 1.0)
    linear = (1.0 - x) * (h + 1) - x * (t - h)
    log_gap = (log_coeff + h * np.log(x) + (t - h - 1) * np.log1p(-x)
               + np.log(np.abs(linear)))
    f_alpha = alpha * np.log(x / alpha) + (1.0 - alpha) * (np.log1p(-x) - np.log1p(-alpha))
    log_rhs = (np.log(np.abs(t * (alpha - x)) + 3.0)
               - 1.5 * np.log(alpha * (1.0 - alpha) * t)
               + f_alpha * (t - 1.0))
    log_ratio = log_gap - log_rhs
    ratios = np.exp(log_ratio)
    gaps = np.exp(log_gap)
    i_max = int(np.argmax(log_ratio))
    passed = bool(np.all(gaps <= 1.0 + 1e-12) and np.all(np.isfinite(ratios)))
    return {"samples": int(samples), "max_ratio": float(ratios[i_max]),
            "argmax": {"x": float(x[i_max]), "t": int(t[i_max]), "h": int(h[i_max])},
            "max_abs_gap": float(gaps.max()), "passed": passed}


def interval_claims_stats(m: int, h: float, reps: int, seed: int,
                          kappa: float | None = None) -> dict:
    """Occupancy statistics of m uniforms against three Chernoff-type caps.

    (a) the count in a fixed subinterval of length h/m leaves
        [h - l, h + l], l = sqrt(kappa*max(h,kappa)),  cap exp(-kappa/3);
    (b) that count exceeds 2h,                          cap exp(-h/3);
    (c) some empty gap of length >= h/m exists,         cap 3m exp(-h/3).
    Each empirical frequency must stay below its cap plus three binomial
    standard errors.
    """
    if m < 100 or reps < 100:
        raise ValueError("need m >= 100 and reps >= 100")
    if h <= 1:
        raise ValueError("h must exceed 1")
    kappa = float(h) if kappa is None else float(kappa)
    ell = math.sqrt(kappa * max(h, kappa))
    width = h / m
    gap_len = h / m
    out_a = out_b = out_c = 0
    for rep in range(reps):
        x = make_rng(seed, rep).random(m)
        cnt = int(np.count_nonzero(x < width))
        if cnt < h - ell or cnt > h + ell:
            out_a += 1
        if cnt > 2 * h:
            out_b += 1
        xs = np.sort(x)
        max_gap = max(xs[0], 1.0 - xs[-1], float(np.diff(xs).max()) if m > 1 else 0.0)
        if max_gap >= gap_len:
            out_c += 1
    bounds = {
        "window": math.exp(-kappa / 3.0),
        "overfill": math.exp(-h / 3.0),
        "empty_gap": min(1.0, 3.0 * m * math.exp(-h / 3.0)),
    }
    freqs = {"window": out_a / reps, "overfill": out_b / reps, "empty_gap": out_c / reps}
    checks = {name: freqs[name] <= _bound_threshold(bounds[name], reps) for name in bounds}
    return {"m": m, "h": h, "kappa": kappa, "reps": reps, "master_seed": seed,
            "frequencies": freqs, "bounds": bounds, "checks": checks,
            "passed": all(checks.values())}


# -- scaling study -----------------------------------------------------------------

#: quadrature used for scaling traces: the asserted quantity (max |Y_j|) needs
#: no quadrature at all, and M_n is report-only, so a coarser rule is enough
SCALING_QUAD = QuadratureSpec(nodes=16, rel_tol=1e-4, abs_tol=1e-10)


def scaling_study(n_list, d: int, trials: int, seed: int, family: str = "circulant",
                  k: int | None = None, quantile: float = 0.999,
                  quad: QuadratureSpec = SCALING_QUAD, threads: int | None = None,
                  backend: str | None = None) -> dict:
    """Growth of max |Y_j| and M_n across graph sizes at fixed degree.

    Asserts that the quantile of max_j |Y_j| divided by log n moves by less
    than a factor of two across the size range; the M_n quantiles and their
    ratios to (log n) n/d are recorded without assertion.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing with at least 3 entries")
    if family != "circulant":
        raise ValueError("scaling_study currently generates circulant families only")
    rows = []
    for idx, n in enumerate(n_list):
        g = circulant_with_degree(n, d)
        kk = (d // 2) if k is None else int(k)
        stats = trace_statistics(g, kk, trials, seed + idx, quad=quad,
                                 threads=threads, backend=backend)
        qy = float(np.quantile(stats["max_abs_y"], quantile))
        qm = float(np.quantile(stats["m_total"], quantile))
        rows.append({"n": n, "d": d, "k": kk, "trials": trials,
                     "max_y_quantile": qy, "m_total_quantile": qm,
                     "y_ratio": qy / math.log(n),
                     "m_ratio": qm / (math.log(n) * n / d)})
    y_ratios = [r["y_ratio"] for r in rows]
    spread = max(y_ratios) / min(y_ratios)
    return {"family": family, "d": d, "trials": trials, "quantile": quantile,
            "master_seed": seed, "rows": rows, "y_ratio_spread": spread,
            "passed": bool(spread < 2.0)}
