# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot loops.

Three entry points: `subgraph_degrees` (threshold degree counting),
`oracle_sweep` (order-type enumeration over a sign-vector range) and
`run_trace` (a full vertex-exposure martingale trace with adaptive
Gauss-Legendre square increments).  The incomplete-beta machinery uses a
direct binomial-tail summation for small trial counts and a Lentz continued
fraction above that, mirroring the conventions of the pure NumPy path.
"""

import numpy as np

from libc.math cimport exp, fabs, log, log1p
from libc.stdint cimport int64_t, uint8_t


# -- binomial / incomplete beta primitives -------------------------------------

cdef inline double binom_pmf(double c, long t, long h, const double* lf) noexcept nogil:
    if h < 0 or h > t:
        return 0.0
    if t == 0:
        return 1.0
    if c <= 0.0:
        return 1.0 if h == 0 else 0.0
    if c >= 1.0:
        return 1.0 if h == t else 0.0
    return exp(lf[t] - lf[h] - lf[t - h] + h * log(c) + (t - h) * log1p(-c))


cdef double _betacf(double a, double b, double x) noexcept nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d = 1.0 - qab * x / qap, h, aa, del_
    cdef int m, m2
    if fabs(d) < 1e-300:
        d = 1e-300
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < 1e-300:
            d = 1e-300
        c = 1.0 + aa / c
        if fabs(c) < 1e-300:
            c = 1e-300
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < 1e-300:
            d = 1e-300
        c = 1.0 + aa / c
        if fabs(c) < 1e-300:
            c = 1e-300
        d = 1.0 / d
        del_ = d * c
        h *= del_
        if fabs(del_ - 1.0) < 1e-15:
            break
    return h


cdef double _betainc_int(long a, long b, double x, const double* lf) noexcept nogil:
    """Regularized incomplete beta I_x(a, b) for integer a, b >= 1."""
    cdef double bt
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    bt = exp(lf[a + b - 1] - lf[a - 1] - lf[b - 1] + a * log(x) + b * log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


#: largest trial count handled by direct tail summation instead of the
#: continued fraction (the two are cross-checked in the test suite)
DEF SUM_PATH_MAX = 30


cdef double binom_upper_tail(double c, long n_trials, long m, const double* lf) noexcept nogil:
    """P[Bin(n_trials, c) >= m]; 1 for m <= 0, 0 for m > n_trials."""
    cdef double b, s, ratio
    cdef long i
    if m <= 0:
        return 1.0
    if m > n_trials:
        return 0.0
    if c <= 0.0:
        return 0.0
    if c >= 1.0:
        return 1.0
    if n_trials <= SUM_PATH_MAX:
        b = binom_pmf(c, n_trials, m, lf)
        s = b
        ratio = c / (1.0 - c)
        for i in range(m + 1, n_trials + 1):
            b *= ratio * (n_trials - i + 1) / i
            s += b
        return s if s < 1.0 else 1.0
    return _betainc_int(m, n_trials - m + 1, c, lf)


cdef inline double seg_integral(double a, double b, long t, long h, const double* lf) noexcept nogil:
    """integral_a^b C(t,h) y^h (1-y)^(t-h) dy."""
    if h < 0 or h > t:
        return 0.0
    return (binom_upper_tail(b, t + 1, h + 1, lf)
            - binom_upper_tail(a, t + 1, h + 1, lf)) / (t + 1)


cdef inline double seg_first_moment(double a, double b, long t, long h, const double* lf) noexcept nogil:
    """integral_a^b y * C(t,h) y^h (1-y)^(t-h) dy."""
    if h < 0 or h > t:
        return 0.0
    return (h + 1) * (binom_upper_tail(b, t + 2, h + 2, lf)
                      - binom_upper_tail(a, t + 2, h + 2, lf)) / ((<double>(t + 1)) * (t + 2))


cdef inline long upper_bound(const double* arr, long size, double key) noexcept nogil:
    """Number of entries <= key in a sorted array."""
    cdef long lo = 0, hi = size, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] <= key:
            lo = mid + 1
        else:
            hi = mid
    return lo


# scalar wrappers for cross-checking against SciPy / mpmath in tests

def py_binom_pmf(double c, long t, long h):
    lf = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, max(t, 2) + 3)))))
    cdef double[::1] lfv = lf
    return binom_pmf(c, t, h, &lfv[0])


def py_binom_upper_tail(double c, long n_trials, long m):
    lf = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, max(n_trials, 2) + 3)))))
    cdef double[::1] lfv = lf
    return binom_upper_tail(c, n_trials, m, &lfv[0])


def py_seg_integral(double a, double b, long t, long h):
    lf = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, max(t, 2) + 4)))))
    cdef double[::1] lfv = lf
    return seg_integral(a, b, t, h, &lfv[0])


# -- kernel 1: subgraph degrees -------------------------------------------------

def subgraph_degrees(const int[:, ::1] nbrs, const double[::1] x, int[::1] out):
    cdef Py_ssize_t n = nbrs.shape[0], d = nbrs.shape[1], v, i
    cdef int cnt
    cdef double xv
    with nogil:
        for v in range(n):
            xv = x[v]
            cnt = 0
            for i in range(d):
                if x[nbrs[v, i]] + xv >= 1.0:
                    cnt += 1
            out[v] = cnt


# -- kernel 2: order-type sweep ---------------------------------------------------

def oracle_sweep(const signed char[:, ::1] perms, const int[:, ::1] edges,
                 long n, long d, long sign_lo, long sign_hi,
                 int64_t[:, ::1] deg_counts, int64_t[:, ::1] pair_counts,
                 int64_t[:, ::1] x_dist):
    """Accumulate degree, same-degree-pair and count-distribution statistics
    over all (ranking, sign-vector) pairs with the sign mask in [lo, hi)."""
    if n > 32 or d > 62:
        raise ValueError("compiled oracle sweep supports n <= 32, d <= 62")
    cdef Py_ssize_t n_perms = perms.shape[0], m = edges.shape[0]
    cdef long smask, p, e, u, v, kk, pidx
    cdef int kept
    cdef int deg[32]
    cdef int hist[64]
    cdef int su[32]
    with nogil:
        for smask in range(sign_lo, sign_hi):
            for v in range(n):
                su[v] = (smask >> v) & 1
            for p in range(n_perms):
                for v in range(n):
                    deg[v] = 0
                for e in range(m):
                    u = edges[e, 0]
                    v = edges[e, 1]
                    if su[u]:
                        if su[v]:
                            kept = 1
                        else:
                            kept = perms[p, u] > perms[p, v]
                    elif su[v]:
                        kept = perms[p, v] > perms[p, u]
                    else:
                        kept = 0
                    if kept:
                        deg[u] += 1
                        deg[v] += 1
                for kk in range(d + 1):
                    hist[kk] = 0
                for v in range(n):
                    deg_counts[v, deg[v]] += 1
                    hist[deg[v]] += 1
                for kk in range(d + 1):
                    x_dist[kk, hist[kk]] += 1
                pidx = 0
                for u in range(n):
                    for v in range(u + 1, n):
                        if deg[u] == deg[v]:
                            pair_counts[pidx, deg[u]] += 1
                        pidx += 1


# -- kernel 3: martingale trace ----------------------------------------------------

cdef struct StepCtx:
    long k
    long t_w
    long r_w
    double cur_w
    const double* thr_w
    long nr
    double* rthr
    double* rgap
    double* rpre
    double* rx
    double rbase
    long nu
    long* u_r
    long* u_t
    long* u_blk
    double* u_dtot
    double* u_cu
    double** u_tau
    double* pool
    const double* lf


cdef inline double delta_at(StepCtx* ctx, long uu, double c) noexcept nogil:
    """Unrevealed-neighbor increment at candidate threshold c = 1 - x."""
    cdef long r = ctx.u_r[uu], tp = ctx.u_t[uu], blk = ctx.u_blk[uu], ip, h1
    cdef double j1c, j2c, partial
    ip = upper_bound(ctx.u_tau[uu], r, c)
    h1 = ctx.k - 1 - ip
    j1c = binom_upper_tail(c, tp + 1, h1 + 1, ctx.lf)
    j2c = j1c - binom_pmf(c, tp + 1, h1 + 1, ctx.lf)
    partial = ((j1c - ctx.pool[blk + (r + 2) + ip])
               - (j2c - ctx.pool[blk + 2 * (r + 2) + ip])) / (tp + 1)
    return ctx.u_dtot[uu] - (ctx.pool[blk + ip] + partial) - ctx.u_cu[uu]


cdef double eval_increment(StepCtx* ctx, double t) noexcept nogil:
    """Y_j(t): the increment if the next reveal takes value t."""
    cdef long hw, idx, uu
    cdef double val, c
    hw = upper_bound(ctx.thr_w, ctx.r_w, t)
    val = binom_pmf(t, ctx.t_w, ctx.k - hw, ctx.lf) - ctx.cur_w
    if ctx.nr > 0:
        idx = upper_bound(ctx.rthr, ctx.nr, t)
        val += ctx.rpre[idx] + ctx.rbase
    c = 1.0 - t
    for uu in range(ctx.nu):
        val += delta_at(ctx, uu, c)
    return val


cdef double gl_sq(StepCtx* ctx, double a, double b,
                  const double* xs, const double* ws, long nn) noexcept nogil:
    cdef double s = 0.0, t, yv
    cdef long i
    for i in range(nn):
        t = a + (b - a) * xs[i]
        yv = eval_increment(ctx, t)
        s += ws[i] * yv * yv
    return s * (b - a)


cdef int adaptive_sq(StepCtx* ctx, double a, double b, int depth,
                     double rel_tol, double abs_tol, int max_depth,
                     const double* xs1, const double* ws1, long n1,
                     const double* xs2, const double* ws2, long n2,
                     double* val, double* err) noexcept nogil:
    cdef double i1 = gl_sq(ctx, a, b, xs1, ws1, n1)
    cdef double i2 = gl_sq(ctx, a, b, xs2, ws2, n2)
    cdef double e = fabs(i2 - i1), m, v1, e1, v2, e2
    if e <= abs_tol + rel_tol * fabs(i2):
        val[0] = i2
        err[0] = e
        return 0
    if depth >= max_depth:
        if e > 50.0 * (abs_tol + rel_tol * fabs(i2)):
            return 1
        val[0] = i2
        err[0] = e
        return 0
    m = 0.5 * (a + b)
    v1 = 0.0
    e1 = 0.0
    v2 = 0.0
    e2 = 0.0
    if adaptive_sq(ctx, a, m, depth + 1, rel_tol, abs_tol, max_depth,
                   xs1, ws1, n1, xs2, ws2, n2, &v1, &e1):
        return 1
    if adaptive_sq(ctx, m, b, depth + 1, rel_tol, abs_tol, max_depth,
                   xs1, ws1, n1, xs2, ws2, n2, &v2, &e2):
        return 1
    val[0] = v1 + v2
    err[0] = e1 + e2
    return 0


def run_trace(const int[:, ::1] nbrs, const int64_t[::1] order, const double[::1] x,
              long k, int compute_sq, double rel_tol, double abs_tol, int max_depth,
              const double[::1] xs1, const double[::1] ws1,
              const double[::1] xs2, const double[::1] ws2,
              double[::1] y_out, double[::1] sq_out):
    """Full trace; fills y_out and sq_out, returns (final_count, max_step_quad_error).

    Returns final_count = -1 if a square-increment quadrature failed to
    converge at the maximum refinement depth.
    """
    cdef Py_ssize_t n = nbrs.shape[0], d = nbrs.shape[1]
    lf_np = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, d + 6, dtype=np.float64)))))
    thr_np = np.zeros((n, d), dtype=np.float64)
    thr_len_np = np.zeros(n, dtype=np.int64)
    nrev_np = np.zeros(n, dtype=np.int64)
    hcount_np = np.zeros(n, dtype=np.int64)
    revealed_np = np.zeros(n, dtype=np.uint8)
    rthr_np = np.zeros(d, dtype=np.float64)
    rgap_np = np.zeros(d, dtype=np.float64)
    rx_np = np.zeros(d, dtype=np.float64)
    rpre_np = np.zeros(d + 1, dtype=np.float64)
    u_r_np = np.zeros(d, dtype=np.int64)
    u_t_np = np.zeros(d, dtype=np.int64)
    u_blk_np = np.zeros(d, dtype=np.int64)
    u_dtot_np = np.zeros(d, dtype=np.float64)
    u_cu_np = np.zeros(d, dtype=np.float64)
    pool_np = np.zeros(3 * d * (d + 2) + 8, dtype=np.float64)

    cdef double[::1] lf = lf_np
    cdef double[:, ::1] thr = thr_np
    cdef int64_t[::1] thr_len = thr_len_np
    cdef int64_t[::1] nrev = nrev_np
    cdef int64_t[::1] hcount = hcount_np
    cdef uint8_t[::1] revealed = revealed_np
    cdef double[::1] rthr = rthr_np, rgap = rgap_np, rx = rx_np, rpre = rpre_np
    cdef int64_t[::1] u_r = u_r_np, u_t = u_t_np, u_blk = u_blk_np
    cdef double[::1] u_dtot = u_dtot_np, u_cu = u_cu_np, pool = pool_np

    # pointer table into the per-vertex threshold rows, stored in an intp buffer
    u_tau_np = np.zeros(max(d, 1), dtype=np.intp)
    cdef Py_ssize_t[::1] u_tau_store = u_tau_np

    cdef StepCtx ctx
    cdef long j, w, u, idx, i, r_u, tp, h, hh, pos, nr, nu, blk
    cdef long n1 = xs1.shape[0], n2 = xs2.shape[0]
    cdef double xw, tau, prev, bnd, gap, total, errtot, val, err, c
    cdef double quad_err = 0.0
    cdef double h1seg
    cdef long h1
    cdef int fail = 0
    cdef int64_t final_count = 0

    ctx.lf = &lf[0]
    ctx.k = k
    ctx.rthr = &rthr[0]
    ctx.rgap = &rgap[0]
    ctx.rpre = &rpre[0]
    ctx.rx = &rx[0]
    ctx.u_r = <long*> &u_r[0]
    ctx.u_t = <long*> &u_t[0]
    ctx.u_blk = <long*> &u_blk[0]
    ctx.u_dtot = &u_dtot[0]
    ctx.u_cu = &u_cu[0]
    ctx.pool = &pool[0]
    ctx.u_tau = <double**> &u_tau_store[0]

    with nogil:
        for j in range(n):
            w = order[j]
            xw = x[w]
            # --- pre-reveal scratch -------------------------------------
            ctx.t_w = d - nrev[w]
            ctx.r_w = thr_len[w]
            ctx.thr_w = &thr[w, 0]
            ctx.cur_w = 0.0
            prev = 0.0
            for i in range(ctx.r_w + 1):
                bnd = thr[w, i] if i < ctx.r_w else 1.0
                ctx.cur_w += seg_integral(prev, bnd, ctx.t_w, k - i, ctx.lf)
                prev = bnd
            nr = 0
            nu = 0
            blk = 0
            for idx in range(d):
                u = nbrs[w, idx]
                if revealed[u]:
                    tp = d - nrev[u] - 1
                    h = hcount[u]
                    gap = (binom_pmf(x[u], tp, k - 1 - h, ctx.lf)
                           - binom_pmf(x[u], tp, k - h, ctx.lf))
                    rthr[nr] = 1.0 - x[u]
                    rgap[nr] = gap
                    rx[nr] = x[u]
                    nr += 1
                else:
                    r_u = thr_len[u]
                    tp = d - nrev[u] - 1
                    u_r[nu] = r_u
                    u_t[nu] = tp
                    u_blk[nu] = blk
                    ctx.u_tau[nu] = &thr[u, 0]
                    pool[blk] = 0.0
                    u_cu[nu] = 0.0
                    prev = 0.0
                    for i in range(r_u + 1):
                        bnd = thr[u, i] if i < r_u else 1.0
                        h1 = k - 1 - i
                        h1seg = (seg_integral(prev, bnd, tp, h1, ctx.lf)
                                 - seg_integral(prev, bnd, tp, h1 + 1, ctx.lf))
                        pool[blk + i + 1] = pool[blk + i] + h1seg
                        pool[blk + (r_u + 2) + i] = binom_upper_tail(prev, tp + 1, h1 + 1, ctx.lf)
                        pool[blk + 2 * (r_u + 2) + i] = (pool[blk + (r_u + 2) + i]
                                                         - binom_pmf(prev, tp + 1, h1 + 1, ctx.lf))
                        u_cu[nu] += (seg_first_moment(prev, bnd, tp, h1, ctx.lf)
                                     - seg_first_moment(prev, bnd, tp, h1 + 1, ctx.lf))
                        prev = bnd
                    u_dtot[nu] = pool[blk + r_u + 1]
                    blk += 3 * (r_u + 2)
                    nu += 1
            ctx.nr = nr
            ctx.nu = nu
            # sort revealed entries by threshold (insertion sort, d is small)
            for i in range(1, nr):
                tau = rthr[i]
                gap = rgap[i]
                val = rx[i]
                pos = i
                while pos > 0 and rthr[pos - 1] > tau:
                    rthr[pos] = rthr[pos - 1]
                    rgap[pos] = rgap[pos - 1]
                    rx[pos] = rx[pos - 1]
                    pos -= 1
                rthr[pos] = tau
                rgap[pos] = gap
                rx[pos] = val
            rpre[0] = 0.0
            ctx.rbase = 0.0
            for i in range(nr):
                rpre[i + 1] = rpre[i] + rgap[i]
                ctx.rbase -= rgap[i] * rx[i]
            # --- square increment ----------------------------------------
            if compute_sq:
                total = 0.0
                errtot = 0.0
                prev = 0.0
                for i in range(ctx.r_w + 1):
                    bnd = thr[w, i] if i < ctx.r_w else 1.0
                    if bnd > 1.0:
                        bnd = 1.0
                    if bnd > prev:
                        if adaptive_sq(&ctx, prev, bnd, 0, rel_tol, abs_tol, max_depth,
                                       &xs1[0], &ws1[0], n1, &xs2[0], &ws2[0], n2,
                                       &val, &err):
                            fail = 1
                            break
                        total += val
                        errtot += err
                        prev = bnd
                if fail:
                    break
                sq_out[j] = total
                if errtot > quad_err:
                    quad_err = errtot
            # --- realized increment ----------------------------------------
            hh = 0
            for i in range(nr):
                if xw + rx[i] >= 1.0:
                    hh += 1
            val = binom_pmf(xw, ctx.t_w, k - hh, ctx.lf) - ctx.cur_w
            for i in range(nr):
                val += rgap[i] * ((1.0 if xw + rx[i] >= 1.0 else 0.0) - rx[i])
            c = 1.0 - xw
            for i in range(nu):
                val += delta_at(&ctx, i, c)
            y_out[j] = val
            # --- reveal bookkeeping -----------------------------------------
            tau = 1.0 - xw
            hh = 0
            for idx in range(d):
                u = nbrs[w, idx]
                r_u = thr_len[u]
                pos = upper_bound(&thr[u, 0], r_u, tau)
                for i in range(r_u, pos, -1):
                    thr[u, i] = thr[u, i - 1]
                thr[u, pos] = tau
                thr_len[u] += 1
                nrev[u] += 1
                if revealed[u] and xw + x[u] >= 1.0:
                    hcount[u] += 1
                    hh += 1
            hcount[w] = hh
            revealed[w] = 1
        if not fail:
            for j in range(n):
                if hcount[j] == k:
                    final_count += 1
    if fail:
        return -1, quad_err
    return int(final_count), quad_err
