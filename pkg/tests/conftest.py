import pytest

from irrsub.graphs import (circulant_graph, complete_bipartite_graph, complete_graph,
                           disjoint_cliques_graph)


def oracle_registry():
    """The n <= 8 graphs exercised by every exact-oracle check."""
    return [
        complete_graph(2),
        complete_graph(4),
        complete_graph(5),
        complete_bipartite_graph(3),
        circulant_graph(8, [1, 2]),
        disjoint_cliques_graph(2, 2),
        disjoint_cliques_graph(2, 4),
    ]


@pytest.fixture(scope="session")
def registry():
    return oracle_registry()


@pytest.fixture(scope="session")
def k4():
    return complete_graph(4)


@pytest.fixture(scope="session")
def k2():
    return complete_graph(2)
