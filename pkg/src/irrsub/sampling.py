"""The irregular random subgraph construction and its degree statistics.

Each vertex v gets an i.i.d. uniform weight x(v); an edge (u,v) of G survives
into H exactly when x(u) + x(v) >= 1.  Weights are 64-bit floats drawn from
the half-open interval [0, 1), a measure-zero deviation from the closed
interval.  The keep test is evaluated in the symmetric form x(u) + x(v) >= 1
everywhere so both endpoints always agree about an edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .graphs import Graph
from .rng import make_rng


@dataclass(frozen=True)
class WeightAssignment:
    """Vertex weights in [0,1] plus the (master_seed, trial_index) provenance."""

    x: np.ndarray
    seed_info: tuple[int, int] | None = None

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("weights must be a nonempty 1-d vector")
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "x", x)

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class DegreeHistogram:
    """counts[k] = number of vertices of degree k in H, for k = 0..d."""

    counts: np.ndarray
    max_count: int

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def sample_weights(n: int, rng: np.random.Generator,
                   seed_info: tuple[int, int] | None = None) -> WeightAssignment:
    """n i.i.d. uniform [0,1) weights from the given stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return WeightAssignment(x=rng.random(n), seed_info=seed_info)


def sample_weights_for_trial(n: int, master_seed: int, trial: int) -> WeightAssignment:
    return sample_weights(n, make_rng(master_seed, trial), seed_info=(master_seed, trial))


def edge_kept(xu: float, xv: float) -> bool:
    """True exactly when x(u) + x(v) >= 1 (ties kept by convention)."""
    if not (0.0 <= xu <= 1.0 and 0.0 <= xv <= 1.0):
        raise ValueError("weights must lie in [0, 1]")
    return xu + xv >= 1.0


def subgraph_degrees(g: Graph, w: WeightAssignment | np.ndarray,
                     backend: str | None = None) -> np.ndarray:
    """Degree of every vertex in the surviving subgraph H.

    Direct O(n*d) scan: vertex v keeps a neighbor u when x(u) + x(v) >= 1.
    """
    x = w.x if isinstance(w, WeightAssignment) else np.ascontiguousarray(w, dtype=np.float64)
    if x.shape != (g.n,):
        raise ValueError(f"weight vector has length {x.shape}, graph has n={g.n}")
    kern = _backend.kernels(backend)
    if kern is not None:
        out = np.empty(g.n, dtype=np.int32)
        kern.subgraph_degrees(g.neighbors, x, out)
        return out
    return (x[g.neighbors] + x[:, None] >= 1.0).sum(axis=1).astype(np.int32)


def degree_histogram(degrees: np.ndarray, d: int) -> DegreeHistogram:
    """Histogram m(H, k) for k = 0..d of a degree vector."""
    degrees = np.asarray(degrees)
    if degrees.size and (degrees.min() < 0 or degrees.max() > d):
        raise ValueError(f"degree outside [0, {d}]")
    counts = np.bincount(degrees, minlength=d + 1)
    return DegreeHistogram(counts=counts, max_count=int(counts.max()))


def histogram_matrix(g: Graph, trials: int, master_seed: int,
                     backend: str | None = None) -> np.ndarray:
    """(trials, d+1) int64 matrix of m(H,k) counts, one row per trial stream."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = np.empty((trials, g.d + 1), dtype=np.int64)
    for t in range(trials):
        w = sample_weights_for_trial(g.n, master_seed, t)
        degs = subgraph_degrees(g, w, backend=backend)
        out[t] = np.bincount(degs, minlength=g.d + 1)
    return out
