from fractions import Fraction

import numpy as np
import pytest

from irrsub.graphs import (circulant_graph, codegree, complete_bipartite_graph,
                           complete_graph, disjoint_cliques_graph)
from irrsub.oracle import (OracleSizeError, OrderType, degrees_of_order_type,
                           batch_degrees_of_order_types, enumerate_graph, exact_degree_pmf,
                           exact_joint, exact_mean_var, joint_bound, order_type_count,
                           order_type_of_weights)
from irrsub.sampling import sample_weights_for_trial, subgraph_degrees


def test_order_type_validation():
    with pytest.raises(ValueError):
        OrderType(rank_perm=(0, 0), signs=(True, False))
    with pytest.raises(ValueError):
        OrderType(rank_perm=(0, 1), signs=(True,))


def test_degrees_of_order_type_extremes():
    g = complete_graph(4)
    n = g.n
    all_true = OrderType(rank_perm=tuple(range(n)), signs=(True,) * n)
    assert np.all(degrees_of_order_type(g, all_true) == g.d)
    all_false = OrderType(rank_perm=tuple(range(n)), signs=(False,) * n)
    assert np.all(degrees_of_order_type(g, all_false) == 0)


def test_degrees_of_order_type_k2():
    g = complete_graph(2)
    # x_0 above 1/2, x_1 below, |x_0 - 1/2| larger: edge survives
    ot = OrderType(rank_perm=(1, 0), signs=(True, False))
    assert degrees_of_order_type(g, ot).tolist() == [1, 1]
    ot = OrderType(rank_perm=(0, 1), signs=(True, False))
    assert degrees_of_order_type(g, ot).tolist() == [0, 0]


def test_degree_pmf_is_uniform():
    for g in (complete_graph(2), complete_graph(4), circulant_graph(6, [1, 3])):
        target = Fraction(1, g.d + 1)
        for v in range(g.n):
            pmf = exact_degree_pmf(g, v)
            assert all(p == target for p in pmf)
            assert sum(pmf) == 1


def test_pmf_cap_error():
    g = circulant_graph(9, [1, 2])
    with pytest.raises(OracleSizeError, match="order types"):
        exact_degree_pmf(g, 0)


def test_joint_examples():
    k4 = complete_graph(4)
    for k in range(4):
        val = exact_joint(k4, 0, 1, k)
        assert val <= Fraction(9, 16)
    k33 = complete_bipartite_graph(3)
    for k in range(4):
        # same-side pair: d(u,v)=3, cap (1/16)(1+12/4) = 1/4
        assert exact_joint(k33, 0, 1, k) <= Fraction(1, 4)
    two_k2 = disjoint_cliques_graph(2, 2)
    assert exact_joint(two_k2, 0, 2, 0) == Fraction(1, 4)  # independent components
    with pytest.raises(ValueError):
        exact_joint(k4, 1, 1, 0)


def test_joint_symmetry():
    g = circulant_graph(6, [1, 2])
    enum = enumerate_graph(g)
    for k in range(g.d + 1):
        assert enum.joint(0, 3, k) == enum.joint(3, 0, k)


def test_mean_var_k2():
    g = complete_graph(2)
    mean, var = exact_mean_var(g, 0)
    assert mean == 1 and var == 1
    mean, var = exact_mean_var(g, 1)
    assert mean == 1 and var == 1


def test_mean_is_n_over_d_plus_one():
    for g in (complete_graph(5), circulant_graph(8, [1, 2])):
        means = [exact_mean_var(g, k)[0] for k in range(g.d + 1)]
        assert all(m == Fraction(g.n, g.d + 1) for m in means)
        assert sum(means) == g.n


def test_circulant8_variance_under_cap():
    g = circulant_graph(8, [1, 2])
    for k in range(g.d + 1):
        _, var = exact_mean_var(g, k)
        assert var <= Fraction(17 * 8, 5)


def test_count_distribution_consistency():
    g = complete_graph(4)
    enum = enumerate_graph(g)
    for k in range(g.d + 1):
        dist = enum.count_distribution(k)
        assert sum(dist) == 1
        mean = sum(Fraction(m) * p for m, p in enumerate(dist))
        assert mean == enum.mean_var(k)[0]
    # degree-count rows must also be consistent with per-vertex pmfs
    assert enum.deg_counts.sum() == g.n * enum.denominator


def test_order_type_of_weights_roundtrip():
    x = np.array([0.9, 0.2, 0.55, 0.35])
    ot = order_type_of_weights(x)
    assert ot.signs == (True, False, True, False)
    # |x - 1/2| = (0.4, 0.3, 0.05, 0.15): increasing order 2, 3, 1, 0
    assert ot.rank_perm == (3, 2, 0, 1)


def test_oracle_matches_sampler_on_million_draws():
    """Mapping sampled weights to order types reproduces sampler degrees exactly."""
    g = circulant_graph(8, [1, 2])
    total = 10 ** 6
    chunk = 10 ** 5
    for part in range(total // chunk):
        xs = np.random.Generator(np.random.Philox(key=[424242, part])).random((chunk, g.n))
        v = np.abs(xs - 0.5)
        ranks = np.argsort(np.argsort(v, axis=1, kind="stable"), axis=1, kind="stable")
        deg_ot = batch_degrees_of_order_types(g, xs > 0.5, ranks)
        deg_direct = (xs[:, g.neighbors] + xs[:, :, None] >= 1.0).sum(axis=2)
        assert np.array_equal(deg_ot, deg_direct)
    # spot-check the scalar mapping path on a handful of assignments
    for trial in range(20):
        w = sample_weights_for_trial(g.n, 31, trial)
        ot = order_type_of_weights(w.x)
        assert np.array_equal(degrees_of_order_type(g, ot), subgraph_degrees(g, w))


def test_monte_carlo_frequency_matches_exact():
    g = complete_graph(4)
    enum = enumerate_graph(g)
    trials = 40000
    xs = np.random.Generator(np.random.Philox(key=[5, 1])).random((trials, g.n))
    degs = np.vstack([subgraph_degrees(g, row) for row in xs])
    for v in (0, 2):
        for k in (0, 1, 3):
            p = float(enum.degree_pmf(v)[k])
            emp = float(np.mean(degs[:, v] == k))
            margin = 4.0 * (p * (1 - p) / trials) ** 0.5
            assert abs(emp - p) <= margin


def test_order_type_count_and_denominator():
    g = complete_graph(4)
    enum = enumerate_graph(g)
    assert enum.denominator == order_type_count(4) == 384
    assert enum.x_dist[0].sum() == enum.denominator


def test_workers_do_not_change_counts():
    from irrsub.oracle import _CACHE
    g = circulant_graph(6, [1, 2])
    _CACHE.clear()
    one = enumerate_graph(g, workers=1)
    _CACHE.clear()
    three = enumerate_graph(g, workers=3)
    assert np.array_equal(one.deg_counts, three.deg_counts)
    assert np.array_equal(one.pair_counts, three.pair_counts)
    assert np.array_equal(one.x_dist, three.x_dist)


def test_joint_bound_helper():
    assert joint_bound(3, 2) == Fraction(9, 16)
    assert joint_bound(3, 3) == Fraction(13, 16)
    assert joint_bound(3, 0) == Fraction(1, 16)
