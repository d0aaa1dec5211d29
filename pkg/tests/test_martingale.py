import math

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from irrsub.graphs import circulant_graph, complete_graph
from irrsub.martingale import (DEFAULT_QUAD, IncrementEvaluator, QuadratureSpec,
                               RevealState, bernstein_tail, cond_indicator_mean,
                               cond_sq_increment, decompose_increment, martingale_step,
                               random_trace, run_trace, run_trace_with_decomposition,
                               write_trace_csv)
from irrsub.rng import make_rng
from irrsub.sampling import subgraph_degrees


def make_state(g, order, x_values, prefix):
    state = RevealState(g, order)
    for j in range(prefix):
        state.reveal(float(x_values[j]))
    return state


def mc_count_mean(g, fixed: dict, k: int, samples: int, seed: int):
    """Monte Carlo estimate of E[#degree-k vertices | fixed weights].

    Independent of the martingale machinery: samples the unknown weights and
    counts degrees directly through the sampler.
    """
    rng = make_rng(seed, 0)
    idx = np.array(sorted(fixed), dtype=int)
    vals = np.array([fixed[i] for i in sorted(fixed)])
    hits = np.empty(samples)
    for s in range(samples):
        x = rng.random(g.n)
        if idx.size:
            x[idx] = vals
        hits[s] = np.count_nonzero(subgraph_degrees(g, x) == k)
    return float(hits.mean()), float(hits.std(ddof=1) / math.sqrt(samples))


# -- conditional means ----------------------------------------------------------

def test_cond_mean_at_start_is_uniform():
    g = circulant_graph(10, [1, 2])
    state = RevealState(g, np.arange(10))
    for v in (0, 3, 7):
        for k in range(g.d + 1):
            assert cond_indicator_mean(state, v, k) == pytest.approx(1 / (g.d + 1), abs=1e-12)


def test_cond_mean_fully_revealed_is_indicator():
    g = circulant_graph(8, [1, 2])
    rng = make_rng(17, 0)
    x = rng.random(g.n)
    state = make_state(g, np.arange(g.n), x, g.n)
    degs = subgraph_degrees(g, x)
    for v in range(g.n):
        for k in range(g.d + 1):
            expected = 1.0 if degs[v] == k else 0.0
            assert cond_indicator_mean(state, v, k) == expected


def test_cond_mean_revealed_all_neighbors_known():
    # revealed vertex with every neighbor revealed and exactly k exceedances
    g = complete_graph(3)
    x = [0.9, 0.8, 0.3]
    state = make_state(g, np.arange(3), x, 3)
    # vertex 0: neighbors 1 (0.8+0.9>=1) and 2 (0.3+0.9>=1) -> degree 2
    assert cond_indicator_mean(state, 0, 2) == 1.0
    assert cond_indicator_mean(state, 0, 1) == 0.0


@pytest.mark.parametrize("prefix", [0, 1, 3, 6])
def test_cond_mean_matches_monte_carlo(prefix):
    g = circulant_graph(10, [1, 2])
    rng = make_rng(55, prefix)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    state = make_state(g, order, [x[v] for v in order], prefix)
    k = 2
    total = sum(cond_indicator_mean(state, v, k) for v in range(g.n))
    fixed = {int(order[j]): float(x[order[j]]) for j in range(prefix)}
    mc, se = mc_count_mean(g, fixed, k, 60000, seed=900 + prefix)
    assert abs(total - mc) <= 4 * se + 1e-9


# -- increments --------------------------------------------------------------------

def test_k2_step_example():
    g = complete_graph(2)
    state = RevealState(g, np.array([0, 1]))
    y1 = martingale_step(state, 1, 0.9, 1)
    assert y1 == pytest.approx(0.8, abs=1e-12)
    assert state.prefix == 1


def test_k2_sq_increment_closed_form():
    g = complete_graph(2)
    state = RevealState(g, np.array([0, 1]))
    assert cond_sq_increment(state, 1, 1) == pytest.approx(1 / 3, abs=1e-9)


def test_k3_first_increment_vanishes():
    # on a triangle with k=1 the first reveal carries no information
    g = complete_graph(3)
    state = RevealState(g, np.array([0, 1, 2]))
    ev = IncrementEvaluator(state, 1)
    xs = np.linspace(0.005, 0.995, 23)
    assert np.max(np.abs(ev.batch(xs))) < 1e-12
    assert cond_sq_increment(state, 1, 1) == pytest.approx(0.0, abs=1e-12)


def test_out_of_order_reveal_rejected():
    g = complete_graph(3)
    state = RevealState(g, np.array([0, 1, 2]))
    with pytest.raises(ValueError, match="out-of-order"):
        martingale_step(state, 2, 0.5, 1)
    with pytest.raises(ValueError, match="out-of-order"):
        cond_sq_increment(state, 2, 1)


def test_increment_matches_monte_carlo_difference():
    g = circulant_graph(10, [1, 2])
    rng = make_rng(77, 0)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    prefix = 4
    k = 2
    state = make_state(g, order, [x[v] for v in order], prefix)
    ev = IncrementEvaluator(state, k)
    w = int(order[prefix])
    fixed = {int(order[j]): float(x[order[j]]) for j in range(prefix)}
    before, se_b = mc_count_mean(g, fixed, k, 60000, seed=1234)
    for c in (0.15, 0.62, 0.97):
        fixed_after = dict(fixed)
        fixed_after[w] = c
        after, se_a = mc_count_mean(g, fixed_after, k, 60000, seed=4321)
        y = ev.at_reveal(c)
        assert abs(y - (after - before)) <= 4 * math.hypot(se_a, se_b)


def test_batch_and_scalar_evaluation_agree():
    g = circulant_graph(12, [1, 3])
    rng = make_rng(3, 0)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    state = make_state(g, order, [x[v] for v in order], 5)
    ev = IncrementEvaluator(state, 3)
    pts = rng.random(50)
    batch = ev.batch(pts)
    for i, c in enumerate(pts):
        assert ev.at_reveal(float(c)) == pytest.approx(batch[i], abs=1e-12)


def test_conditional_mean_of_increment_is_zero():
    # E[Y_j | F_{j-1}] = 0: the increment integrates to zero over x
    g = circulant_graph(10, [1, 2])
    for trial in range(3):
        rng = make_rng(40 + trial, 0)
        order = rng.permutation(g.n)
        x = rng.random(g.n)
        for prefix in (0, 2, 7):
            state = make_state(g, order, [x[v] for v in order], prefix)
            ev = IncrementEvaluator(state, 1)
            val = 0.0
            breaks = ev.breakpoints()
            for a, b in zip(breaks[:-1], breaks[1:]):
                if b > a:
                    part, _ = scipy_quad(lambda t: ev.batch(np.array([t]))[0], a, b,
                                         epsabs=1e-11, limit=200)
                    val += part
            assert abs(val) < 1e-8


def test_martingale_property_statistical():
    # empirical mean of Y_j over many reveals of x(j), fixed prefix
    g = circulant_graph(10, [1, 2])
    rng = make_rng(91, 0)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    state = make_state(g, order, [x[v] for v in order], 5)
    ev = IncrementEvaluator(state, 2)
    draws = make_rng(92, 0).random(10 ** 4)
    ys = ev.batch(draws)
    se = ys.std(ddof=1) / math.sqrt(ys.size)
    assert abs(ys.mean()) <= 4 * se + 1e-12


def test_sq_increment_matches_scipy_quad():
    g = circulant_graph(12, [1, 2, 4])
    rng = make_rng(8, 0)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    for prefix in (1, 6, 10):
        state = make_state(g, order, [x[v] for v in order], prefix)
        ev = IncrementEvaluator(state, 3)
        ours = cond_sq_increment(state, prefix + 1, 3)
        ref = 0.0
        breaks = ev.breakpoints()
        for a, b in zip(breaks[:-1], breaks[1:]):
            if b > a:
                part, _ = scipy_quad(lambda t: ev.batch(np.array([t]))[0] ** 2, a, b,
                                     epsabs=1e-12, limit=300)
                ref += part
        assert ours == pytest.approx(ref, rel=1e-6, abs=1e-10)


def test_gap_magnitude_bounded_by_one():
    g = circulant_graph(14, [1, 2, 3])
    rng = make_rng(6, 0)
    order = rng.permutation(g.n)
    x = rng.random(g.n)
    for prefix in range(g.n):
        state = make_state(g, order, [x[v] for v in order], prefix)
        ev = IncrementEvaluator(state, 3)
        assert ev.max_abs_gap <= 1.0 + 1e-12


# -- full traces ---------------------------------------------------------------------

def test_trace_endpoints_and_telescoping():
    g = circulant_graph(20, [1, 2])
    for trial in range(5):
        tr = random_trace(g, 2, 1001, trial)
        assert tr.x_path[0] == pytest.approx(g.n / (g.d + 1), abs=1e-9)
        assert abs(tr.x_path[-1] - tr.final_count) <= 1e-8
        assert tr.max_abs_y <= g.d + 1
        assert np.all(np.diff(tr.m_path) >= 0)
        # X increments are exactly the Y values by construction
        assert np.allclose(np.diff(tr.x_path), tr.y_increments, atol=1e-12)


def test_trace_final_count_equals_recount():
    g = circulant_graph(30, [1, 4])
    rng = make_rng(4, 0)
    x = rng.random(g.n)
    order = rng.permutation(g.n)
    tr = run_trace(g, order, x, 1)
    recount = int(np.count_nonzero(subgraph_degrees(g, x) == 1))
    assert tr.final_count == recount


def test_trace_rejects_bad_inputs():
    g = complete_graph(4)
    x = np.full(4, 0.5)
    with pytest.raises(ValueError):
        run_trace(g, [0, 1, 2, 2], x, 1)
    with pytest.raises(ValueError):
        run_trace(g, [0, 1, 2, 3], x[:3], 1)
    with pytest.raises(ValueError):
        run_trace(g, [0, 1, 2, 3], x, 9)


def test_k2_variance_proxy_closed_form():
    # for the single edge with k=0: M_2 = 1/3 + 4 x1 (1 - x1)
    g = complete_graph(2)
    for x1 in (0.12, 0.5, 0.77):
        tr = run_trace(g, np.array([0, 1]), np.array([x1, 0.4]), 0, backend="pure")
        assert tr.m_total == pytest.approx(1 / 3 + 4 * x1 * (1 - x1), abs=1e-9)


def test_mean_variance_proxy_matches_exact_variance():
    from irrsub.oracle import exact_mean_var
    g = circulant_graph(6, [1, 3])
    _, var = exact_mean_var(g, 1)
    totals = [random_trace(g, 1, 777, t).m_total for t in range(1500)]
    mean = float(np.mean(totals))
    se = float(np.std(totals, ddof=1) / math.sqrt(len(totals)))
    assert abs(mean - float(var)) <= 4 * se


def test_decomposition_trivial_cases():
    g = circulant_graph(10, [1, 2])
    # first reveal: no revealed neighbors -> paper-form A1 is an empty sum
    state = RevealState(g, np.arange(g.n))
    a1, a2 = decompose_increment(state, 1, 2, include_self=False)
    assert a1 == 0.0
    assert a2 > 0.0
    # last reveal: no unrevealed neighbors -> A2 is an empty sum
    rng = make_rng(21, 0)
    x = rng.random(g.n)
    state = make_state(g, np.arange(g.n), x, g.n - 1)
    a1, a2 = decompose_increment(state, g.n, 2)
    assert a2 == 0.0


def test_decomposition_bounds_square_increment():
    g = circulant_graph(16, [1, 2])
    for trial in range(2):
        rng = make_rng(1300 + trial, 0)
        x = rng.random(g.n)
        order = rng.permutation(g.n)
        for k in (0, 2):
            trace, a1, a2 = run_trace_with_decomposition(g, order, x, k)
            excess = trace.sq_increments - (2 * a1 + 2 * a2)
            assert float(excess.max()) <= 1e-6


def test_decomposition_needs_self_term_late():
    # the pure neighbor-sum form underestimates late-step increments
    g = circulant_graph(20, [1, 2, 3])
    rng = make_rng(2900, 0)
    x = rng.random(g.n)
    order = rng.permutation(g.n)
    _, a1, a2 = run_trace_with_decomposition(g, order, x, 0, include_self=False)
    trace, _, _ = run_trace_with_decomposition(g, order, x, 0, include_self=True)
    excess = trace.sq_increments - (2 * a1 + 2 * a2)
    assert float(excess.max()) > 1e-4


def test_bernstein_tail():
    assert bernstein_tail(0.0, 1.0, 1.0) == 1.0
    zs = np.linspace(0, 50, 40)
    vals = [bernstein_tail(z, 2.0, 9.0) for z in zs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    # at z/a = L/a^2 the exponent collapses to -z/(4a)
    a, L = 1.7, 5.3
    z = L / a
    assert bernstein_tail(z, a, L) == pytest.approx(math.exp(-z / (4 * a)), rel=1e-12)
    with pytest.raises(ValueError):
        bernstein_tail(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        bernstein_tail(-1.0, 1.0, 1.0)


def test_trace_csv_dump(tmp_path):
    g = complete_graph(4)
    tr = random_trace(g, 1, 15, 0)
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "j,X_j,Y_j,sq_increment,M_j"
    assert len(lines) == g.n + 2
    first = lines[1].split(",")
    assert first[0] == "0" and first[2] == "" and first[3] == ""
    last = lines[-1].split(",")
    assert float(last[1]) == pytest.approx(tr.x_path[-1])


def test_random_trace_seed_info_and_determinism():
    g = circulant_graph(12, [1, 2])
    t1 = random_trace(g, 1, 99, 4)
    t2 = random_trace(g, 1, 99, 4)
    assert t1.seed_info == (99, 4)
    assert np.array_equal(t1.order, t2.order)
    assert np.array_equal(t1.y_increments, t2.y_increments)
