"""irrsub: a simulation and verification lab for irregular random subgraphs.

Given a d-regular graph G and i.i.d. uniform vertex weights x(v), the random
subgraph H keeps each edge (u,v) exactly when x(u) + x(v) >= 1.  The package
builds graphs, samples H, computes exact degree-event probabilities on small
graphs by order-type enumeration, runs the vertex-exposure martingale with
its variance proxy, and verifies the degree-distribution law, the variance
cap and the concentration machinery both exactly and statistically.
"""

from ._backend import available_backends, backend_name, set_backend
from .binomial import binomial_point, binomial_segment_integral
from .graphs import (Graph, GraphConstructionError, GraphFamilySpec, build_graph,
                     codegree, codegree_sum, load_edge_list, save_edge_list)
from .martingale import (MartingaleTrace, QuadratureSpec, RevealState, bernstein_tail,
                         cond_indicator_mean, cond_sq_increment, decompose_increment,
                         martingale_step, random_trace, run_trace)
from .oracle import (ExactEnumeration, OracleSizeError, OrderType, degrees_of_order_type,
                     enumerate_graph, exact_degree_pmf, exact_joint, exact_mean_var)
from .sampling import (DegreeHistogram, WeightAssignment, degree_histogram, edge_kept,
                       sample_weights, subgraph_degrees)

__version__ = "0.1.0"

__all__ = [
    "Graph", "GraphFamilySpec", "GraphConstructionError", "build_graph",
    "codegree", "codegree_sum", "load_edge_list", "save_edge_list",
    "WeightAssignment", "DegreeHistogram", "sample_weights", "edge_kept",
    "subgraph_degrees", "degree_histogram",
    "OrderType", "ExactEnumeration", "OracleSizeError", "degrees_of_order_type",
    "enumerate_graph", "exact_degree_pmf", "exact_joint", "exact_mean_var",
    "binomial_point", "binomial_segment_integral",
    "RevealState", "MartingaleTrace", "QuadratureSpec", "cond_indicator_mean",
    "martingale_step", "cond_sq_increment", "decompose_increment", "run_trace",
    "random_trace", "bernstein_tail",
    "available_backends", "backend_name", "set_backend",
]
