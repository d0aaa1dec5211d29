"""Construction, validation and queries for d-regular simple graphs.

A :class:`Graph` stores its adjacency as an ``(n, d)`` int32 array of sorted
neighbor lists (compressed rows of constant width d).  All generators produce
simple d-regular graphs or fail with a diagnostic; graphs are immutable after
construction and safe to share across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .rng import make_rng

FAMILIES = ("complete", "circulant", "complete_bipartite", "hypercube",
            "random_regular", "disjoint_cliques", "from_file")

#: whole-restart pairing attempts before giving up
PAIRING_RETRY_LIMIT = 10_000

#: largest degree for which plain pairing rejection is practical: the chance
#: that a random pairing is simple decays like exp(-(d*d-1)/4), so past d=6
#: the retry limit is essentially certain to be exhausted.
REJECTION_MAX_DEGREE = 6


class GraphConstructionError(ValueError):
    """Invalid family parameters or a failed randomized construction."""


@dataclass(frozen=True)
class Graph:
    """Immutable d-regular simple graph with sorted per-vertex neighbor rows."""

    n: int
    d: int
    neighbors: np.ndarray  # (n, d) int32, each row sorted ascending
    descriptor: str

    def __post_init__(self):
        object.__setattr__(self, "neighbors", np.ascontiguousarray(self.neighbors, dtype=np.int32))
        self.neighbors.setflags(write=False)

    def edge_array(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, lexicographically sorted."""
        u = np.repeat(np.arange(self.n, dtype=np.int32), self.d)
        v = self.neighbors.reshape(-1)
        keep = u < v
        return np.column_stack([u[keep], v[keep]])

    def adjacency_csr(self) -> sp.csr_matrix:
        indptr = np.arange(self.n + 1, dtype=np.int64) * self.d
        data = np.ones(self.n * self.d, dtype=np.int64)
        return sp.csr_matrix((data, self.neighbors.reshape(-1).astype(np.int64), indptr),
                             shape=(self.n, self.n))

    def content_key(self) -> bytes:
        """Stable digest input identifying the adjacency, not the descriptor."""
        return b"%d %d " % (self.n, self.d) + self.neighbors.tobytes()


@dataclass(frozen=True)
class GraphFamilySpec:
    """Recipe for building a graph: family tag plus integer parameters.

    Parameter conventions per family:
      complete:          (n,)
      circulant:         (n, offset_1, ..., offset_r)
      complete_bipartite: (m,)          -- the balanced K_{m,m}
      hypercube:         (dim,)
      random_regular:    (n, d)         -- requires a seed
      disjoint_cliques:  (copies, size) -- copies of K_size
      from_file:         ()             -- requires path
    """

    family: str
    parameters: tuple = ()
    seed: int | None = None
    path: str | None = None
    method: str = "auto"  # random_regular only: auto | rejection | rematch

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GraphConstructionError(
                f"unknown graph family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "parameters", tuple(int(p) for p in self.parameters))


def _graph_from_edges(n: int, d: int, edges: Iterable[tuple[int, int]], descriptor: str) -> Graph:
    nbrs = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise GraphConstructionError(f"self-loop at vertex {u}")
        nbrs[u].append(v)
        nbrs[v].append(u)
    arr = np.full((n, d), -1, dtype=np.int32)
    for v, lst in enumerate(nbrs):
        if len(lst) != d:
            raise GraphConstructionError(
                f"vertex {v} has degree {len(lst)}, expected {d}")
        if len(set(lst)) != d:
            raise GraphConstructionError(f"duplicate edge at vertex {v}")
        arr[v] = sorted(lst)
    return Graph(n=n, d=d, neighbors=arr, descriptor=descriptor)


def complete_graph(n: int) -> Graph:
    if n < 2:
        raise GraphConstructionError("complete graph needs n >= 2")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return _graph_from_edges(n, n - 1, edges, f"complete(n={n})")


def circulant_graph(n: int, offsets: Sequence[int]) -> Graph:
    """Circulant graph: vertex i adjacent to i +/- off (mod n) for each offset.

    Offsets must be distinct integers in [1, n/2]; the offset n/2 (n even)
    contributes degree 1, every other offset degree 2.
    """
    offsets = [int(o) for o in offsets]
    if len(offsets) == 0:
        raise GraphConstructionError("circulant needs at least one offset")
    if len(set(offsets)) != len(offsets):
        raise GraphConstructionError("circulant offsets must be distinct")
    for o in offsets:
        if not 1 <= o <= n // 2:
            raise GraphConstructionError(
                f"circulant offset {o} outside [1, {n // 2}] for n={n}")
    half = [o for o in offsets if 2 * o == n]
    d = 2 * len(offsets) - len(half)
    edges = set()
    for i in range(n):
        for o in offsets:
            j = (i + o) % n
            edges.add((min(i, j), max(i, j)))
    off_str = ",".join(str(o) for o in sorted(offsets))
    return _graph_from_edges(n, d, sorted(edges), f"circulant(n={n},offsets={off_str})")


def circulant_with_degree(n: int, d: int) -> Graph:
    """Circulant with offsets 1..ceil(d/2); odd d uses the n/2 offset (n even)."""
    if d % 2 == 0:
        offsets = list(range(1, d // 2 + 1))
    else:
        if n % 2 != 0:
            raise GraphConstructionError("odd-degree circulant needs even n")
        offsets = list(range(1, d // 2 + 1)) + [n // 2]
    if offsets and max(offsets) > n // 2:
        raise GraphConstructionError(f"degree {d} too large for circulant on {n} vertices")
    return circulant_graph(n, offsets)


def complete_bipartite_graph(m: int) -> Graph:
    """The balanced complete bipartite graph K_{m,m} (the only regular one)."""
    if m < 1:
        raise GraphConstructionError("complete_bipartite needs m >= 1")
    n = 2 * m
    edges = [(u, m + v) for u in range(m) for v in range(m)]
    return _graph_from_edges(n, m, edges, f"complete_bipartite(m={m})")


def hypercube_graph(dim: int) -> Graph:
    if dim < 1:
        raise GraphConstructionError("hypercube needs dim >= 1")
    n = 1 << dim
    edges = [(v, v ^ (1 << b)) for v in range(n) for b in range(dim) if v < v ^ (1 << b)]
    return _graph_from_edges(n, dim, edges, f"hypercube(dim={dim})")


def disjoint_cliques_graph(copies: int, size: int) -> Graph:
    """Disjoint union of `copies` complete graphs K_size.

    This family maximizes codegrees for its degree, which makes it a useful
    stress case for the joint-degree bounds.
    """
    if copies < 1 or size < 2:
        raise GraphConstructionError("disjoint_cliques needs copies >= 1 and size >= 2")
    edges = []
    for c in range(copies):
        base = c * size
        edges.extend((base + u, base + v) for u in range(size) for v in range(u + 1, size))
    return _graph_from_edges(copies * size, size - 1, edges,
                             f"disjoint_cliques(copies={copies},size={size})")


def _pairing_attempt(n: int, d: int, rng) -> set | None:
    """One sequential uniform pairing of half-edges; None on first violation.

    Aborting at the first self-loop/duplicate and restarting is equivalent to
    completing the pairing and rejecting non-simple outcomes, so accepted
    graphs are exactly uniform over simple d-regular graphs.
    """
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    rng.shuffle(stubs)
    edges = set()
    it = iter(stubs)
    for a, b in zip(it, it):
        if a == b:
            return None
        e = (int(a), int(b)) if a < b else (int(b), int(a))
        if e in edges:
            return None
        edges.add(e)
    return edges


def _rematch_attempt(n: int, d: int, rng) -> set | None:
    """Stub rematching: keep legal pairs, reshuffle leftovers until done or stuck."""
    edges = set()
    stubs = list(np.repeat(np.arange(n, dtype=np.int64), d))
    while stubs:
        rng.shuffle(stubs)
        leftover = []
        it = iter(stubs)
        for a, b in zip(it, it):
            if a > b:
                a, b = b, a
            e = (int(a), int(b))
            if a != b and e not in edges:
                edges.add(e)
            else:
                leftover.extend((a, b))
        if len(leftover) == len(stubs):
            # no progress is possible only if every remaining pair is illegal
            pool = sorted(set(leftover))
            if all((min(s, t), max(s, t)) in edges or s == t
                   for i, s in enumerate(pool) for t in pool[i:]):
                return None
        stubs = leftover
    return edges


def random_regular_graph(n: int, d: int, seed: int, method: str = "auto") -> Graph:
    """Uniform-ish random simple d-regular graph on n vertices.

    method="rejection" is the pairing model with whole-graph restart on any
    self-loop or multi-edge: exactly uniform, but the acceptance probability
    decays like exp(-(d*d-1)/4), so it is only practical for small d.
    method="rematch" pairs stubs and reshuffles the illegal leftovers
    (asymptotically uniform, practical for larger d).  "auto" picks rejection
    for d <= REJECTION_MAX_DEGREE and rematch above.
    """
    if n * d % 2 != 0:
        raise GraphConstructionError(f"n*d must be even, got n={n}, d={d}")
    if not 0 < d < n:
        raise GraphConstructionError(f"need 0 < d < n, got n={n}, d={d}")
    if method not in ("auto", "rejection", "rematch"):
        raise GraphConstructionError(f"unknown method {method!r}")
    resolved = method
    if method == "auto":
        resolved = "rejection" if d <= REJECTION_MAX_DEGREE else "rematch"
    attempt = _pairing_attempt if resolved == "rejection" else _rematch_attempt
    rng = make_rng(seed, 0)
    for _ in range(PAIRING_RETRY_LIMIT):
        edges = attempt(n, d, rng)
        if edges is not None:
            return _graph_from_edges(
                n, d, edges, f"random_regular(n={n},d={d},seed={seed},method={resolved})")
    raise GraphConstructionError(
        f"random_regular(n={n}, d={d}): no simple graph in {PAIRING_RETRY_LIMIT} "
        f"{resolved} restarts (d too close to n for rejection sampling)")


def build_graph(spec: GraphFamilySpec) -> Graph:
    """Build a validated Graph from a family spec."""
    fam, p = spec.family, spec.parameters
    if fam == "complete":
        _expect_params(p, 1, "complete(n)")
        return complete_graph(p[0])
    if fam == "circulant":
        if len(p) < 2:
            raise GraphConstructionError("circulant needs (n, offset, ...)")
        return circulant_graph(p[0], p[1:])
    if fam == "complete_bipartite":
        _expect_params(p, 1, "complete_bipartite(m)")
        return complete_bipartite_graph(p[0])
    if fam == "hypercube":
        _expect_params(p, 1, "hypercube(dim)")
        return hypercube_graph(p[0])
    if fam == "disjoint_cliques":
        _expect_params(p, 2, "disjoint_cliques(copies, size)")
        return disjoint_cliques_graph(p[0], p[1])
    if fam == "random_regular":
        _expect_params(p, 2, "random_regular(n, d)")
        if spec.seed is None:
            raise GraphConstructionError("random_regular needs a seed")
        return random_regular_graph(p[0], p[1], spec.seed, spec.method)
    if fam == "from_file":
        if not spec.path:
            raise GraphConstructionError("from_file needs a path")
        return load_edge_list(spec.path)
    raise GraphConstructionError(f"unhandled family {fam!r}")


def _expect_params(p: tuple, count: int, signature: str) -> None:
    if len(p) != count:
        raise GraphConstructionError(f"expected {signature}, got parameters {p}")


def codegree(g: Graph, u: int, v: int) -> int:
    """Number of common neighbors of u and v; u must differ from v."""
    if u == v:
        raise ValueError("codegree requires u != v")
    return int(np.intersect1d(g.neighbors[u], g.neighbors[v], assume_unique=True).size)


def codegree_sum(g: Graph) -> int:
    """Sum of codegrees over ordered pairs u != v, computed by direct summation.

    Uses A@A of the adjacency matrix, whose (u,v) entry counts common
    neighbors; equals n*d*(d-1) for every d-regular graph.
    """
    a = g.adjacency_csr()
    s = a @ a
    return int(s.sum() - s.diagonal().sum())


# -- edge-list text format ----------------------------------------------------
# First line "n d"; one "u v" per line with 0 <= u < v < n; LF line endings.

def save_edge_list(g: Graph, path: str) -> None:
    lines = [f"{g.n} {g.d}\n"]
    lines.extend(f"{u} {v}\n" for u, v in g.edge_array())
    with open(path, "w", newline="\n") as fh:
        fh.writelines(lines)


def load_edge_list(path: str) -> Graph:
    """Load and validate a d-regular graph from the edge-list text format."""
    with open(path) as fh:
        raw = fh.read().split("\n")
    lines = [ln for ln in raw if ln.strip()]
    if not lines:
        raise GraphConstructionError(f"{path}: empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphConstructionError(f"{path}: header must be 'n d', got {lines[0]!r}")
    n, d = int(head[0]), int(head[1])
    if n * d % 2 != 0:
        raise GraphConstructionError(f"{path}: n*d is odd (n={n}, d={d})")
    edges = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise GraphConstructionError(f"{path}:{i}: expected 'u v', got {ln!r}")
        u, v = int(parts[0]), int(parts[1])
        if not 0 <= u < v < n:
            raise GraphConstructionError(f"{path}:{i}: edge ({u},{v}) violates 0 <= u < v < n")
        edges.append((u, v))
    if len(set(edges)) != len(edges):
        raise GraphConstructionError(f"{path}: duplicate edges present")
    if len(edges) != n * d // 2:
        raise GraphConstructionError(
            f"{path}: expected {n * d // 2} edges for a {d}-regular graph, got {len(edges)}")
    return _graph_from_edges(n, d, edges, f"from_file({path})")
