"""Vertex-exposure martingale for the count of degree-k vertices.

Reveal the weights one vertex at a time along an arrival order pi and track
X_j = E[X | first j weights], where X is the number of vertices whose
subgraph degree is exactly k.  Revealing position j only moves the
conditional degree probabilities of the revealed vertex and its graph
neighbors, which gives the increment

    Y_j(x) = self_term(x) + sum over revealed neighbors u of
                 gap_u * (1{x >= 1 - x_u} - x_u)
           + sum over unrevealed neighbors u of avg_u(x),

with gap_u the difference of two adjacent binomial point masses for u and
avg_u the same quantity averaged over u's still-unknown weight.  The
conditional square increment E[Y_j^2 | F_{j-1}] is the integral of Y_j(x)^2
over the candidate weight x, evaluated by composite Gauss-Legendre quadrature
on the pieces cut by the revealed-neighbor thresholds (the only jump points
of the integrand), with a node-doubling error estimate and adaptive bisection
of pieces that miss the tolerance.

All discrete keep/exceed decisions use the symmetric test x + x' >= 1 so the
final conditional values reproduce the direct sampler count exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc as _betainc

from . import _backend
from .binomial import (binomial_point, binomial_point_vec, binomial_segment_integral,
                       binomial_upper_tail)
from .graphs import Graph
from .rng import make_rng
from .sampling import WeightAssignment, degree_histogram, subgraph_degrees


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its depth without reaching tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre node count per piece, doubled for the error estimate."""

    nodes: int = 32
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    max_depth: int = 14


DEFAULT_QUAD = QuadratureSpec()

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    rule = _GL_CACHE.get(nodes)
    if rule is None:
        x, w = np.polynomial.legendre.leggauss(nodes)
        rule = ((x + 1.0) * 0.5, w * 0.5)
        _GL_CACHE[nodes] = rule
    return rule


def bernstein_tail(z: float, a: float, L: float) -> float:
    """Freedman/Bernstein exponential factor exp(-(z/a)^2 / (2(L/a^2 + z/a))).

    The additive increment-cap failure probability P[max |Y_i| > a] is the
    caller's to supply from measured data.
    """
    if a <= 0 or L <= 0:
        raise ValueError("a and L must be positive")
    if z < 0:
        raise ValueError("z must be nonnegative")
    za = z / a
    return math.exp(-0.5 * za * za / (L / (a * a) + za))


# -- reveal-order state --------------------------------------------------------

class RevealState:
    """Bookkeeping for a partial reveal of weights along an arrival order.

    Tracks, for every vertex: the number of still-unrevealed neighbors, the
    sorted thresholds 1 - x(w) of revealed neighbors w, and (for revealed
    vertices) the exact count of revealed neighbors w with x(w) + x(v) >= 1.
    """

    __slots__ = ("g", "order", "prefix", "x", "revealed", "thr", "nrev", "hcount")

    def __init__(self, g: Graph, order: np.ndarray):
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(g.n)):
            raise ValueError("order must be a permutation of 0..n-1")
        self.g = g
        self.order = order
        self.prefix = 0
        self.x = np.full(g.n, np.nan)
        self.revealed = np.zeros(g.n, dtype=bool)
        self.thr: list[np.ndarray] = [np.empty(0)] * g.n
        self.nrev = np.zeros(g.n, dtype=np.int64)
        self.hcount = np.zeros(g.n, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.g.n

    def next_vertex(self) -> int:
        return int(self.order[self.prefix])

    def pending(self, v: int) -> int:
        """Neighbors of v arriving after the current prefix."""
        return self.g.d - int(self.nrev[v])

    def reveal(self, xj: float) -> int:
        """Reveal the next vertex in the order with weight xj; returns it."""
        if not 0.0 <= xj <= 1.0:
            raise ValueError("weights must lie in [0, 1]")
        w = self.next_vertex()
        self.x[w] = xj
        self.revealed[w] = True
        tau = 1.0 - xj
        h = 0
        for u in self.g.neighbors[w]:
            u = int(u)
            t = self.thr[u]
            self.thr[u] = np.insert(t, np.searchsorted(t, tau), tau)
            self.nrev[u] += 1
            if self.revealed[u] and xj + self.x[u] >= 1.0:
                self.hcount[u] += 1
                h += 1
        self.hcount[w] = h
        self.prefix += 1
        return w


def cond_indicator_mean(state: RevealState, v: int, k: int) -> float:
    """E[deg(v) = k | revealed prefix].

    Revealed v: one binomial point mass at its own weight.  Unrevealed v: the
    integral of that mass over the candidate weight, split at the revealed
    thresholds where the exceedance count steps.
    """
    d = state.g.d
    t = state.pending(v)
    if state.revealed[v]:
        return binomial_point(float(state.x[v]), t, k - int(state.hcount[v]))
    tau = np.clip(state.thr[v], 0.0, 1.0)
    bounds = np.concatenate(([0.0], tau, [1.0]))
    total = 0.0
    for i in range(bounds.size - 1):
        total += binomial_segment_integral(bounds[i], bounds[i + 1], t, k - i)
    return total


# -- the increment as a function of the candidate weight ------------------------

def _upper_tail_pair(c: np.ndarray, t: int, h1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """J values P[Bin(t+1, c) >= h+1] for h = h1 and h = h1+1 (one betainc)."""
    j1 = binomial_upper_tail(c, t + 1, h1 + 1)
    j2 = j1 - binomial_point_vec(c, t + 1, h1 + 1)
    return np.asarray(j1), np.asarray(j2)


class _UnrevealedTerm:
    """avg_u(x): increment of an unrevealed neighbor's conditional mean.

    avg_u(x) = integral_{1-x}^1 gap_u(y) dy - integral_0^1 y gap_u(y) dy where
    gap_u(y) = p(y, t', k-1-i) - p(y, t', k-i) on the i-th threshold piece of
    u, and t' is u's pending count after this reveal.
    """

    __slots__ = ("tau", "t_after", "pref", "dtot", "first_moment", "ja1", "ja2", "k")

    def __init__(self, state: RevealState, u: int, k: int):
        self.k = k
        self.tau = np.clip(state.thr[u], 0.0, 1.0)
        self.t_after = state.pending(u) - 1
        t = self.t_after
        bounds = np.concatenate(([0.0], self.tau, [1.0]))
        pieces = np.arange(bounds.size - 1)
        h1 = k - 1 - pieces
        lo, hi = bounds[:-1], bounds[1:]
        j1_lo, j2_lo = _upper_tail_pair(lo, t, h1)
        j1_hi, j2_hi = _upper_tail_pair(hi, t, h1)
        seg = ((j1_hi - j1_lo) - (j2_hi - j2_lo)) / (t + 1)
        self.pref = np.concatenate(([0.0], np.cumsum(seg)))
        self.dtot = float(self.pref[-1])
        self.ja1, self.ja2 = j1_lo, j2_lo
        # first moment of gap_u via I_c(h+2, t-h+1): one extra beta pass per bound
        f_hi = _first_moment_tail(hi, t, h1)
        f_lo = _first_moment_tail(lo, t, h1)
        self.first_moment = float(np.sum(f_hi - f_lo))

    def batch(self, x: np.ndarray) -> np.ndarray:
        c = 1.0 - x
        ip = np.searchsorted(self.tau, c, side="right")
        h1 = self.k - 1 - ip
        j1c, j2c = _upper_tail_pair(c, self.t_after, h1)
        partial = ((j1c - self.ja1[ip]) - (j2c - self.ja2[ip])) / (self.t_after + 1)
        d_at_c = self.pref[ip] + partial
        return (self.dtot - d_at_c) - self.first_moment

    def gap_sq_weighted_integral(self, quad: QuadratureSpec) -> tuple[float, float]:
        """integral_0^1 gap_u(y)^2 y (1-y) dy on u's own piece partition."""
        t = self.t_after
        bounds = np.concatenate(([0.0], self.tau, [1.0]))

        def f(y, piece_idx):
            h1 = self.k - 1 - piece_idx
            gap = binomial_point_vec(y, t, h1) - binomial_point_vec(y, t, h1 + 1)
            return gap * gap * y * (1.0 - y)

        return _integrate_pieces_indexed(f, bounds, quad)


def _first_moment_tail(c: np.ndarray, t: int, h1: np.ndarray) -> np.ndarray:
    """integral_0^c y*gap(y) dy summed per piece, gap = p(.,t,h1) - p(.,t,h1+1)."""
    out = np.zeros_like(np.asarray(c, dtype=np.float64))
    for h in (h1, h1 + 1):
        ok = (h >= 0) & (h <= t)
        a = np.where(ok, h, 0).astype(np.float64)
        val = _betainc(a + 2.0, t - a + 1.0, c) * (a + 1.0) / ((t + 1) * (t + 2))
        sign = 1.0 if h is h1 else -1.0
        out += sign * np.where(ok, val, 0.0)
    return out


class IncrementEvaluator:
    """Y_j(x): the martingale increment at the next reveal as a function of x.

    Built from a RevealState *before* the reveal; evaluating at arrays of
    candidate weights powers the square-increment quadrature, and evaluating
    at the realized weight gives the actual increment.
    """

    def __init__(self, state: RevealState, k: int):
        if state.prefix >= state.n:
            raise ValueError("no vertex left to reveal")
        g = state.g
        self.k = k
        self.w = state.next_vertex()
        self.t_w = state.pending(self.w)
        self.thr_w = np.clip(state.thr[self.w], 0.0, 1.0)
        self.cur_w = cond_indicator_mean(state, self.w, k)
        rev_thr, rev_gap, rev_x = [], [], []
        self.unrevealed: list[_UnrevealedTerm] = []
        self.max_abs_gap = 0.0
        for u in g.neighbors[self.w]:
            u = int(u)
            if state.revealed[u]:
                t_after = state.pending(u) - 1
                h = int(state.hcount[u])
                xu = float(state.x[u])
                gap = binomial_point(xu, t_after, k - 1 - h) - binomial_point(xu, t_after, k - h)
                rev_thr.append(1.0 - xu)
                rev_gap.append(gap)
                rev_x.append(xu)
                self.max_abs_gap = max(self.max_abs_gap, abs(gap))
            else:
                self.unrevealed.append(_UnrevealedTerm(state, u, k))
        order = np.argsort(np.asarray(rev_thr)) if rev_thr else np.empty(0, dtype=np.int64)
        self.rev_thr = np.asarray(rev_thr, dtype=np.float64)[order]
        gaps = np.asarray(rev_gap, dtype=np.float64)[order]
        self.rev_gap_prefix = np.concatenate(([0.0], np.cumsum(gaps)))
        self.rev_base = -float(np.sum(np.asarray(rev_gap) * np.asarray(rev_x)))
        self._rev_pairs = list(zip(rev_x, rev_gap))

    # pieces where the integrand can jump: the revealed-neighbor thresholds
    def breakpoints(self) -> np.ndarray:
        inner = np.unique(self.thr_w)
        inner = inner[(inner > 0.0) & (inner < 1.0)]
        return np.concatenate(([0.0], inner, [1.0]))

    def revealed_part(self, x: np.ndarray) -> np.ndarray:
        """Self term plus revealed-neighbor terms (measurable given x)."""
        x = np.asarray(x, dtype=np.float64)
        hw = np.searchsorted(self.thr_w, x, side="right")
        self_term = binomial_point_vec(x, self.t_w, self.k - hw) - self.cur_w
        if self.rev_thr.size:
            idx = np.searchsorted(self.rev_thr, x, side="right")
            rev = self.rev_gap_prefix[idx] + self.rev_base
        else:
            rev = np.zeros_like(x)
        return self_term + rev

    def unrevealed_part(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        total = np.zeros_like(x)
        for term in self.unrevealed:
            total += term.batch(x)
        return total

    def batch(self, x: np.ndarray) -> np.ndarray:
        return self.revealed_part(x) + self.unrevealed_part(x)

    def at_reveal(self, xj: float) -> float:
        """The realized increment, with exact symmetric tie handling."""
        h = sum(1 for xu, _ in self._rev_pairs if xj + xu >= 1.0)
        self_term = binomial_point(xj, self.t_w, self.k - h) - self.cur_w
        rev = sum(gap * ((1.0 if xj + xu >= 1.0 else 0.0) - xu)
                  for xu, gap in self._rev_pairs)
        unrev = float(self.unrevealed_part(np.array([xj]))[0]) if self.unrevealed else 0.0
        return self_term + rev + unrev


# -- adaptive piecewise Gauss-Legendre ------------------------------------------

def _gauss_on(f, a: float, b: float, nodes: int) -> float:
    xs, ws = _gl_rule(nodes)
    return float(np.dot(f(a + (b - a) * xs), ws) * (b - a))


def _integrate_adaptive(f, a: float, b: float, quad: QuadratureSpec, depth: int = 0,
                        i_coarse: float | None = None) -> tuple[float, float]:
    if i_coarse is None:
        i_coarse = _gauss_on(f, a, b, quad.nodes)
    i_fine = _gauss_on(f, a, b, 2 * quad.nodes)
    err = abs(i_fine - i_coarse)
    if err <= quad.abs_tol + quad.rel_tol * abs(i_fine):
        return i_fine, err
    if depth >= quad.max_depth:
        if err > 50.0 * (quad.abs_tol + quad.rel_tol * abs(i_fine)):
            raise QuadratureError(
                f"piece [{a}, {b}] did not converge: estimated error {err:.3e}")
        return i_fine, err
    m = 0.5 * (a + b)
    v1, e1 = _integrate_adaptive(f, a, m, quad, depth + 1)
    v2, e2 = _integrate_adaptive(f, m, b, quad, depth + 1)
    return v1 + v2, e1 + e2


def _integrate_pieces(f, bounds: np.ndarray, quad: QuadratureSpec) -> tuple[float, float]:
    """Integral of f over [bounds[0], bounds[-1]] split at the interior bounds.

    First pass evaluates every piece at the base and doubled node counts in
    two batched calls; only pieces failing the doubling estimate recurse.
    """
    lo, hi = bounds[:-1], bounds[1:]
    widths = hi - lo
    live = widths > 0.0
    if not live.any():
        return 0.0, 0.0
    lo, hi, widths = lo[live], hi[live], widths[live]
    xs1, ws1 = _gl_rule(quad.nodes)
    xs2, ws2 = _gl_rule(2 * quad.nodes)
    pts1 = (lo[:, None] + widths[:, None] * xs1[None, :]).ravel()
    pts2 = (lo[:, None] + widths[:, None] * xs2[None, :]).ravel()
    v1 = f(pts1).reshape(lo.size, -1) @ ws1 * widths
    v2 = f(pts2).reshape(lo.size, -1) @ ws2 * widths
    errs = np.abs(v2 - v1)
    total = 0.0
    err_total = 0.0
    for i in range(lo.size):
        if errs[i] <= quad.abs_tol + quad.rel_tol * abs(v2[i]):
            total += v2[i]
            err_total += errs[i]
        else:
            v, e = _integrate_adaptive(f, lo[i], hi[i], quad, depth=1, i_coarse=v1[i])
            total += v
            err_total += e
    return total, err_total


def _integrate_pieces_indexed(f, bounds: np.ndarray, quad: QuadratureSpec) -> tuple[float, float]:
    """Like _integrate_pieces for integrands needing their piece index."""
    total = 0.0
    err_total = 0.0
    for i in range(bounds.size - 1):
        a, b = float(bounds[i]), float(bounds[i + 1])
        if b <= a:
            continue
        v, e = _integrate_adaptive(lambda y, i=i: f(y, i), a, b, quad)
        total += v
        err_total += e
    return total, err_total


# -- public step operations ------------------------------------------------------

def martingale_step(state: RevealState, j: int, xj: float, k: int) -> float:
    """Reveal step j (must be state.prefix + 1) and return the increment Y_j."""
    if j != state.prefix + 1:
        raise ValueError(f"out-of-order reveal: step {j} but prefix is {state.prefix}")
    ev = IncrementEvaluator(state, k)
    y = ev.at_reveal(xj)
    state.reveal(xj)
    return y


def cond_sq_increment(state: RevealState, j: int, k: int,
                      quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E[Y_j^2 | current prefix] = integral of Y_j(x)^2 over the candidate x."""
    if j != state.prefix + 1:
        raise ValueError(f"out-of-order reveal: step {j} but prefix is {state.prefix}")
    ev = IncrementEvaluator(state, k)
    value, _ = _integrate_pieces(lambda x: ev.batch(x) ** 2, ev.breakpoints(), quad)
    return value


#: largest number of kink points for which the unrevealed-part quadrature uses
#: the exact kink partition instead of adaptive refinement
_KINK_PARTITION_LIMIT = 512


def decompose_increment(state: RevealState, j: int, k: int,
                        quad: QuadratureSpec = DEFAULT_QUAD,
                        include_self: bool = True) -> tuple[float, float]:
    """Split the square increment into revealed and future-averaged parts.

    Returns (A1, A2) with E[Y_j^2 | prefix] <= 2*A1 + 2*A2:

      A1 = integral over x of (revealed part of Y_j(x))^2,
      A2 = E over x and over every unrevealed neighbor weight of the squared
           unrevealed-neighbor sum (before averaging the neighbor weights).

    With ``include_self=True`` (default) the revealed part contains the newly
    exposed vertex's own recentred term; this is what makes the two-part
    bound hold at every step.  ``include_self=False`` drops it, matching a
    sum over previously revealed neighbors only -- an empty sum (A1 = 0) when
    no neighbor is revealed yet -- but then the bound can fail at late steps,
    where the self term is the whole increment.
    """
    if j != state.prefix + 1:
        raise ValueError(f"out-of-order reveal: step {j} but prefix is {state.prefix}")
    ev = IncrementEvaluator(state, k)
    breaks = ev.breakpoints()
    if include_self:
        a1, _ = _integrate_pieces(lambda x: ev.revealed_part(x) ** 2, breaks, quad)
    elif ev.rev_thr.size == 0:
        a1 = 0.0
    else:
        def rev_only(x):
            idx = np.searchsorted(ev.rev_thr, x, side="right")
            return ev.rev_gap_prefix[idx] + ev.rev_base
        a1, _ = _integrate_pieces(lambda x: rev_only(x) ** 2, breaks, quad)

    if not ev.unrevealed:
        return a1, 0.0
    kinks = np.unique(np.concatenate([1.0 - t.tau for t in ev.unrevealed]))
    kinks = kinks[(kinks > 0.0) & (kinks < 1.0)]
    if kinks.size <= _KINK_PARTITION_LIMIT:
        u_bounds = np.concatenate(([0.0], kinks, [1.0]))
    else:
        u_bounds = breaks
    cross, _ = _integrate_pieces(lambda x: ev.unrevealed_part(x) ** 2, u_bounds, quad)
    a2 = cross
    for term in ev.unrevealed:
        own_kinks = 1.0 - term.tau[::-1]
        own_kinks = own_kinks[(own_kinks > 0.0) & (own_kinks < 1.0)]
        own_bounds = np.concatenate(([0.0], own_kinks, [1.0]))
        sq_avg, _ = _integrate_pieces(lambda x, t=term: t.batch(x) ** 2, own_bounds, quad)
        diag, _ = term.gap_sq_weighted_integral(quad)
        a2 += diag - sq_avg
    return a1, a2


# -- full traces -------------------------------------------------------------------

@dataclass(frozen=True)
class MartingaleTrace:
    """One full reveal trajectory with its square increments.

    ``x_path[j]`` accumulates X_0 + Y_1 + ... + Y_j in floating point;
    ``final_count`` is the exact integer number of degree-k vertices, which
    the float path matches to telescoping accuracy.
    """

    k: int
    order: np.ndarray
    x_path: np.ndarray        # X_0 .. X_n
    y_increments: np.ndarray  # Y_1 .. Y_n
    sq_increments: np.ndarray  # E[Y_j^2 | F_{j-1}]
    m_path: np.ndarray        # running sums M_0 .. M_n of sq_increments
    final_count: int
    quad: QuadratureSpec
    quad_error: float
    seed_info: tuple[int, int] | None = None

    @property
    def max_abs_y(self) -> float:
        return float(np.abs(self.y_increments).max()) if self.y_increments.size else 0.0

    @property
    def m_total(self) -> float:
        return float(self.m_path[-1])


def run_trace(g: Graph, order, w: WeightAssignment | np.ndarray, k: int,
              quad: QuadratureSpec = DEFAULT_QUAD, backend: str | None = None,
              compute_sq: bool = True,
              seed_info: tuple[int, int] | None = None) -> MartingaleTrace:
    """Run the full vertex-exposure trace for one weight assignment."""
    x = w.x if isinstance(w, WeightAssignment) else np.ascontiguousarray(w, dtype=np.float64)
    if x.shape != (g.n,):
        raise ValueError(f"weight vector has length {x.shape}, graph has n={g.n}")
    order = np.ascontiguousarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(g.n)):
        raise ValueError("order must be a permutation of 0..n-1")
    if not 0 <= k <= g.d:
        raise ValueError(f"k must lie in [0, {g.d}]")
    kern = _backend.kernels(backend)
    if kern is not None:
        trace = _compiled_trace(kern, g, order, x, k, quad, compute_sq, seed_info)
    else:
        trace = _pure_trace(g, order, x, k, quad, compute_sq, seed_info)
    expected = int(degree_histogram(subgraph_degrees(g, x, backend=backend), g.d).counts[k])
    if trace.final_count != expected:
        raise AssertionError(
            f"trace final count {trace.final_count} != sampler count {expected}")
    return trace


def _pure_trace(g, order, x, k, quad, compute_sq, seed_info) -> MartingaleTrace:
    n, d = g.n, g.d
    state = RevealState(g, order)
    x0 = n / (d + 1)
    y = np.zeros(n)
    sq = np.zeros(n)
    quad_err = 0.0
    for j in range(n):
        ev = IncrementEvaluator(state, k)
        if compute_sq:
            val, err = _integrate_pieces(lambda t: ev.batch(t) ** 2, ev.breakpoints(), quad)
            sq[j] = val
            quad_err = max(quad_err, err)
        xj = float(x[state.next_vertex()])
        y[j] = ev.at_reveal(xj)
        state.reveal(xj)
    final = int(np.sum(state.hcount == k))
    x_path = np.concatenate(([x0], x0 + np.cumsum(y)))
    m_path = np.concatenate(([0.0], np.cumsum(sq)))
    return MartingaleTrace(k=k, order=order, x_path=x_path, y_increments=y,
                           sq_increments=sq, m_path=m_path, final_count=final,
                           quad=quad, quad_error=quad_err, seed_info=seed_info)


def _compiled_trace(kern, g, order, x, k, quad, compute_sq, seed_info) -> MartingaleTrace:
    n = g.n
    y = np.zeros(n)
    sq = np.zeros(n)
    xs1, ws1 = _gl_rule(quad.nodes)
    xs2, ws2 = _gl_rule(2 * quad.nodes)
    final, quad_err = kern.run_trace(
        g.neighbors, order, x, k, 1 if compute_sq else 0,
        quad.rel_tol, quad.abs_tol, quad.max_depth,
        xs1, ws1, xs2, ws2, y, sq)
    if final < 0:
        raise QuadratureError(f"trace quadrature did not converge (code {final})")
    x0 = n / (g.d + 1)
    x_path = np.concatenate(([x0], x0 + np.cumsum(y)))
    m_path = np.concatenate(([0.0], np.cumsum(sq)))
    return MartingaleTrace(k=k, order=order, x_path=x_path, y_increments=y,
                           sq_increments=sq, m_path=m_path, final_count=int(final),
                           quad=quad, quad_error=float(quad_err), seed_info=seed_info)


def run_trace_with_decomposition(g: Graph, order, w, k: int,
                                 quad: QuadratureSpec = DEFAULT_QUAD,
                                 include_self: bool = True,
                                 ) -> tuple[MartingaleTrace, np.ndarray, np.ndarray]:
    """Full trace plus the (A1, A2) split of every square increment."""
    x = w.x if isinstance(w, WeightAssignment) else np.ascontiguousarray(w, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    n, d = g.n, g.d
    state = RevealState(g, order)
    y = np.zeros(n)
    sq = np.zeros(n)
    a1 = np.zeros(n)
    a2 = np.zeros(n)
    quad_err = 0.0
    for j in range(n):
        ev = IncrementEvaluator(state, k)
        val, err = _integrate_pieces(lambda t: ev.batch(t) ** 2, ev.breakpoints(), quad)
        sq[j] = val
        quad_err = max(quad_err, err)
        a1[j], a2[j] = decompose_increment(state, j + 1, k, quad, include_self=include_self)
        xj = float(x[state.next_vertex()])
        y[j] = ev.at_reveal(xj)
        state.reveal(xj)
    final = int(np.sum(state.hcount == k))
    x0 = n / (d + 1)
    trace = MartingaleTrace(k=k, order=order, x_path=np.concatenate(([x0], x0 + np.cumsum(y))),
                            y_increments=y, sq_increments=sq,
                            m_path=np.concatenate(([0.0], np.cumsum(sq))),
                            final_count=final, quad=quad, quad_error=quad_err)
    return trace, a1, a2


def random_trace(g: Graph, k: int, master_seed: int, trial: int,
                 quad: QuadratureSpec = DEFAULT_QUAD, backend: str | None = None,
                 compute_sq: bool = True) -> MartingaleTrace:
    """Trace with fresh uniform weights and a fresh uniform arrival order."""
    rng = make_rng(master_seed, trial)
    x = rng.random(g.n)
    order = rng.permutation(g.n)
    return run_trace(g, order, x, k, quad=quad, backend=backend,
                     compute_sq=compute_sq, seed_info=(master_seed, trial))


def write_trace_csv(trace: MartingaleTrace, path: str) -> None:
    """Dump one trace as CSV with columns j, X_j, Y_j, sq_increment, M_j."""
    with open(path, "w", newline="\n") as fh:
        fh.write("j,X_j,Y_j,sq_increment,M_j\n")
        fh.write(f"0,{float(trace.x_path[0])!r},,,{float(trace.m_path[0])!r}\n")
        for j in range(1, trace.x_path.size):
            fh.write(f"{j},{float(trace.x_path[j])!r},{float(trace.y_increments[j - 1])!r},"
                     f"{float(trace.sq_increments[j - 1])!r},{float(trace.m_path[j])!r}\n")
