import numpy as np
import pytest

from irrsub.graphs import (Graph, GraphConstructionError, GraphFamilySpec, build_graph,
                           circulant_graph, circulant_with_degree, codegree, codegree_sum,
                           complete_bipartite_graph, complete_graph, disjoint_cliques_graph,
                           hypercube_graph, load_edge_list, random_regular_graph,
                           save_edge_list)

# frozen output of the pairing procedure for (n=10, d=3, seed=7)
GOLDEN_10_3_7 = [(0, 3), (0, 4), (0, 8), (1, 4), (1, 6), (1, 9), (2, 3), (2, 7),
                 (2, 9), (3, 5), (4, 8), (5, 6), (5, 7), (6, 9), (7, 8)]


def assert_valid_regular(g: Graph):
    assert g.neighbors.shape == (g.n, g.d)
    for v in range(g.n):
        row = g.neighbors[v]
        assert np.all(np.diff(row) > 0), f"row {v} not sorted/unique"
        assert v not in row, f"self-loop at {v}"
        for u in row:
            assert v in g.neighbors[u], f"asymmetric edge ({v},{u})"
    assert (g.n * g.d) % 2 == 0


def test_complete_graph():
    g = complete_graph(4)
    assert (g.n, g.d) == (4, 3)
    assert_valid_regular(g)


def test_circulant_basic():
    g = circulant_graph(8, [1, 2])
    assert (g.n, g.d) == (8, 4)
    assert_valid_regular(g)
    assert g.edge_array().shape == (16, 2)


def test_circulant_half_offset_counts_once():
    g = circulant_graph(6, [1, 3])
    assert g.d == 3
    assert_valid_regular(g)


def test_circulant_rejects_bad_offsets():
    with pytest.raises(GraphConstructionError):
        circulant_graph(8, [1, 1])
    with pytest.raises(GraphConstructionError):
        circulant_graph(8, [5])
    with pytest.raises(GraphConstructionError):
        circulant_graph(8, [0])


def test_circulant_with_degree():
    g = circulant_with_degree(2000, 20)
    assert (g.n, g.d) == (2000, 20)
    g = circulant_with_degree(10, 3)
    assert (g.n, g.d) == (10, 3)
    assert_valid_regular(g)


def test_other_families():
    assert_valid_regular(complete_bipartite_graph(3))
    assert_valid_regular(hypercube_graph(4))
    assert_valid_regular(disjoint_cliques_graph(3, 4))


def test_build_graph_dispatch():
    g = build_graph(GraphFamilySpec("circulant", (8, 1, 2)))
    assert g.d == 4
    with pytest.raises(GraphConstructionError):
        build_graph(GraphFamilySpec("random_regular", (10, 3)))  # missing seed


def test_random_regular_golden():
    g = random_regular_graph(10, 3, 7)
    assert [tuple(map(int, e)) for e in g.edge_array()] == GOLDEN_10_3_7
    assert_valid_regular(g)


def test_random_regular_deterministic():
    a = random_regular_graph(24, 4, 99)
    b = random_regular_graph(24, 4, 99)
    assert a.neighbors.tobytes() == b.neighbors.tobytes()
    c = random_regular_graph(24, 4, 100)
    assert a.neighbors.tobytes() != c.neighbors.tobytes()


def test_random_regular_odd_product_rejected():
    with pytest.raises(GraphConstructionError):
        random_regular_graph(9, 3, 1)


def test_random_regular_rematch_mode():
    g = random_regular_graph(100, 10, 5)
    assert "rematch" in g.descriptor
    assert_valid_regular(g)


def test_random_regular_rejection_limit():
    # rejection at d=10 is astronomically unlikely to produce a simple pairing
    import irrsub.graphs as G
    old = G.PAIRING_RETRY_LIMIT
    G.PAIRING_RETRY_LIMIT = 20
    try:
        with pytest.raises(GraphConstructionError, match="restarts"):
            random_regular_graph(40, 10, 3, method="rejection")
    finally:
        G.PAIRING_RETRY_LIMIT = old


@pytest.mark.parametrize("n,d,seed", [(20, 3, 0), (50, 5, 1), (100, 10, 2)])
def test_random_regular_families(n, d, seed):
    g = random_regular_graph(n, d, seed)
    assert_valid_regular(g)
    assert codegree_sum(g) == n * d * (d - 1)


def test_codegree_values():
    k4 = complete_graph(4)
    assert codegree(k4, 0, 1) == 2
    k33 = complete_bipartite_graph(3)
    assert codegree(k33, 0, 1) == 3  # same side
    assert codegree(k33, 0, 3) == 0  # opposite sides
    with pytest.raises(ValueError):
        codegree(k4, 1, 1)


def test_codegree_symmetry():
    g = circulant_graph(10, [1, 3])
    for u in range(g.n):
        for v in range(u + 1, g.n):
            assert codegree(g, u, v) == codegree(g, v, u)


@pytest.mark.parametrize("g", [complete_graph(4), complete_graph(2),
                               circulant_graph(8, [1, 2]), hypercube_graph(4),
                               complete_bipartite_graph(4)],
                         ids=lambda g: g.descriptor)
def test_codegree_sum_identity(g):
    assert codegree_sum(g) == g.n * g.d * (g.d - 1)


def test_codegree_sum_matches_pairwise_brute_force():
    g = random_regular_graph(30, 4, 11)
    brute = sum(codegree(g, u, v) for u in range(g.n) for v in range(g.n) if u != v)
    assert codegree_sum(g) == brute


def test_edge_list_round_trip(tmp_path):
    g = circulant_graph(8, [1, 2])
    path = tmp_path / "g.txt"
    save_edge_list(g, str(path))
    text = path.read_text()
    assert text.startswith("8 4\n")
    assert text.count("\n") == 17
    g2 = load_edge_list(str(path))
    assert g2.n == g.n and g2.d == g.d
    assert np.array_equal(g2.neighbors, g.neighbors)


def test_load_rejects_non_regular(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("4 2\n0 1\n1 2\n2 3\n0 2\n")  # vertex 3 has degree 1, 2 has 3
    with pytest.raises(GraphConstructionError, match="vertex"):
        load_edge_list(str(path))


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("4\n0 1\n")
    with pytest.raises(GraphConstructionError, match="header"):
        load_edge_list(str(path))


def test_load_rejects_duplicate_edges(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1\n0 1\n0 1\n")
    with pytest.raises(GraphConstructionError):
        load_edge_list(str(path))
