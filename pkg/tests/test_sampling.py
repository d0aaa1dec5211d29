import numpy as np
import pytest
from scipy.stats import kstest

from irrsub.graphs import circulant_graph, complete_graph
from irrsub.rng import make_rng
from irrsub.sampling import (WeightAssignment, degree_histogram, edge_kept,
                             histogram_matrix, sample_weights, sample_weights_for_trial,
                             subgraph_degrees)


def test_edge_kept_cases():
    assert edge_kept(0.7, 0.4)
    assert not edge_kept(0.3, 0.3)
    assert edge_kept(0.5, 0.5)  # boundary kept by the >= convention
    with pytest.raises(ValueError):
        edge_kept(1.2, 0.1)


def test_sample_weights_deterministic():
    a = sample_weights_for_trial(100, 42, 3)
    b = sample_weights_for_trial(100, 42, 3)
    assert np.array_equal(a.x, b.x)
    c = sample_weights_for_trial(100, 42, 4)
    assert not np.array_equal(a.x, c.x)
    assert a.seed_info == (42, 3)


def test_sample_weights_validation():
    with pytest.raises(ValueError):
        sample_weights(0, make_rng(1, 0))
    with pytest.raises(ValueError):
        WeightAssignment(np.array([0.5, 1.5]))


def test_uniformity_mean_and_ks():
    x = sample_weights_for_trial(10 ** 5, 2024, 0).x
    assert abs(x.mean() - 0.5) <= 0.01
    assert kstest(x, "uniform").statistic < 0.01
    assert x.min() >= 0.0 and x.max() < 1.0  # half-open draw


def test_degrees_extremes():
    g = complete_graph(5)
    assert np.all(subgraph_degrees(g, np.ones(5)) == 4)
    assert np.all(subgraph_degrees(g, np.zeros(5)) == 0)


def test_degrees_k3_single_surviving_edge():
    g = complete_graph(3)
    degs = subgraph_degrees(g, np.array([0.9, 0.8, 0.05]))
    assert degs.tolist() == [1, 1, 0]


def test_degrees_k3_tie_is_kept():
    # x0 + x2 = 1.0 exactly: the boundary edge survives by the >= convention
    g = complete_graph(3)
    degs = subgraph_degrees(g, np.array([0.9, 0.8, 0.1]))
    assert degs.tolist() == [2, 1, 1]


def test_degrees_dimension_mismatch():
    g = complete_graph(3)
    with pytest.raises(ValueError):
        subgraph_degrees(g, np.array([0.5, 0.5]))


@pytest.mark.parametrize("trial", range(5))
def test_handshake_parity(trial):
    g = circulant_graph(40, [1, 2, 5])
    degs = subgraph_degrees(g, sample_weights_for_trial(g.n, 7, trial))
    assert int(degs.sum()) % 2 == 0


def test_monotone_in_single_weight():
    g = circulant_graph(24, [1, 3, 4])
    x = sample_weights_for_trial(g.n, 13, 0).x.copy()
    base = subgraph_degrees(g, x)
    for v in (0, 5, 17):
        bumped = x.copy()
        bumped[v] = min(1.0, x[v] + 0.31)
        degs = subgraph_degrees(g, bumped)
        assert np.all(degs >= base)


@pytest.mark.parametrize("trial", range(3))
def test_reflection_symmetry(trial):
    g = circulant_graph(30, [1, 2])
    x = sample_weights_for_trial(g.n, 5, trial).x
    degs = subgraph_degrees(g, x)
    reflected = subgraph_degrees(g, 1.0 - x)
    # no exact ties x(u)+x(v)=1 occur for random draws
    assert np.array_equal(reflected, g.d - degs)
    h = degree_histogram(degs, g.d).counts
    h_ref = degree_histogram(reflected, g.d).counts
    assert np.array_equal(h_ref, h[::-1])


def test_histogram_basics():
    h = degree_histogram(np.array([1, 1, 0]), 2)
    assert h.counts.tolist() == [1, 2, 0]
    assert h.max_count == 2
    h = degree_histogram(np.zeros(5, dtype=int), 3)
    assert h.counts[0] == 5
    with pytest.raises(ValueError):
        degree_histogram(np.array([4]), 3)


def test_histogram_sums_to_n():
    g = circulant_graph(50, [1, 4])
    for trial in range(4):
        degs = subgraph_degrees(g, sample_weights_for_trial(g.n, 3, trial))
        assert degree_histogram(degs, g.d).n == g.n


def test_k4_mean_counts():
    # every mean count converges to n/(d+1) = 1
    g = complete_graph(4)
    hist = histogram_matrix(g, 10 ** 5, 2718)
    means = hist.mean(axis=0)
    assert np.all(np.abs(means - 1.0) <= 0.05)


def test_histogram_matrix_deterministic_rows():
    g = circulant_graph(12, [1, 2])
    a = histogram_matrix(g, 8, 31)
    b = histogram_matrix(g, 8, 31)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        histogram_matrix(g, 0, 31)
