"""Vertex placement by local search on the total mutual distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .graph import WeightedGraph

__all__ = [
    "METRICS",
    "DistanceOracle",
    "PlacementResult",
    "sssp",
    "total_mutual_distance",
    "local_search_placement",
]

METRICS = ("hop", "inverse-weight")


@dataclass(eq=False)
class DistanceOracle:
    """Single-source shortest-path distances, computed on demand and memoized.

    ``hop`` counts edges; ``inverse-weight`` gives each edge length ``1/w``.
    Unreachable vertices get ``inf`` and set :attr:`saw_unreachable`.
    """

    graph: WeightedGraph
    metric: str = "hop"
    saw_unreachable: bool = False
    _lengths: sp.csr_matrix = field(init=False, repr=False)
    _memo: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        a = self.graph.adjacency.copy()
        if self.metric == "inverse-weight":
            a.data = 1.0 / a.data
        self._lengths = a

    def sssp(self, source: int) -> np.ndarray:
        source = int(source)
        if not 0 <= source < self.graph.n:
            raise ValueError(f"source {source} out of range")
        row = self._memo.get(source)
        if row is None:
            row = shortest_path(
                self._lengths,
                method="D",
                directed=False,
                unweighted=self.metric == "hop",
                indices=source,
            )
            row.setflags(write=False)
            if np.isinf(row).any():
                self.saw_unreachable = True
            self._memo[source] = row
        return row

    def distance(self, u: int, v: int) -> float:
        return float(self.sssp(u)[v])


def sssp(o: DistanceOracle, source: int) -> np.ndarray:
    return o.sssp(source)


def total_mutual_distance(o: DistanceOracle, W) -> float:
    """Sum of ``d(v_i, v_j)`` over all ordered pairs in ``W``."""
    w = [int(v) for v in W]
    if len(set(w)) != len(w):
        raise ValueError("vertex set contains duplicates")
    return float(sum(o.sssp(v)[w].sum() for v in w))


@dataclass(frozen=True)
class PlacementResult:
    vertices: tuple[int, ...]
    objective: float
    passes: int
    converged: bool
    history: tuple[float, ...]


def local_search_placement(
    o: DistanceOracle, k: int, seed: int, max_passes: int = 1000
) -> PlacementResult:
    """Spread ``k`` vertices apart by first-improvement local moves.

    Starts from a uniformly random k-subset drawn with ``seed``.  Each pass
    visits the points in slot order and, for each, tries its neighbors in
    ascending id order, taking the first move onto an unoccupied vertex that
    strictly increases the total mutual distance.  Stops after a pass with
    no move (``converged=True``) or after ``max_passes`` passes.
    """
    g = o.graph
    n = g.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    slots = sorted(int(v) for v in rng.choice(n, size=k, replace=False))

    rows = np.vstack([o.sssp(v) for v in slots])
    if np.isinf(rows).any():
        raise ValueError("graph is disconnected under the chosen metric")
    # reach[x] = sum_j d(W_j, x)
    reach = rows.sum(axis=0)
    occupied = set(slots)
    objective = float(reach[slots].sum())
    history = [objective]

    passes = 0
    converged = k == n
    while not converged and passes < max_passes:
        passes += 1
        moved = False
        for i in range(k):
            v = slots[i]
            current = reach[v]
            ids, _ = g.neighbors(v)
            for u in ids:
                u = int(u)
                if u in occupied:
                    continue
                candidate = reach[u] - rows[i, u]
                if candidate > current:
                    rows[i] = o.sssp(u)
                    reach = rows.sum(axis=0)
                    occupied.remove(v)
                    occupied.add(u)
                    slots[i] = u
                    new_objective = float(reach[slots].sum())
                    assert new_objective > objective, "accepted move did not improve"
                    objective = new_objective
                    history.append(objective)
                    moved = True
                    break
        if not moved:
            converged = True
    return PlacementResult(tuple(sorted(slots)), objective, passes, converged, tuple(history))
