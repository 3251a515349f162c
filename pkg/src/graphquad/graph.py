"""Weighted graphs and the max-degree normalized diffusion operator.

The operator used throughout the package is

    P = Id + (A - D) / d_max

where ``A`` is the weighted adjacency matrix, ``D`` its degree matrix and
``d_max`` the largest weighted degree.  ``P`` is symmetric, stochastic and
lazy (nonnegative diagonal), so ``P^l delta_w`` is the distribution of an
``l``-step random walk started at ``w``.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GraphError",
    "WeightedGraph",
    "DiffusionOperator",
    "from_edge_list",
    "from_adjacency",
    "d_max",
    "apply_propagator",
    "apply_propagator_power",
    "is_connected",
]


class GraphError(ValueError):
    """Raised for malformed graph input."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with nonnegative edge weights, stored as symmetric CSR.

    Build instances with :func:`from_edge_list` or :func:`from_adjacency`;
    both validate and canonicalize the input.  Neighbor lists are sorted by
    vertex id, zero-weight edges are dropped.
    """

    n: int
    adjacency: sp.csr_matrix = field(repr=False)

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(ids, weights)`` of the neighbors of ``v``, ids ascending."""
        lo, hi = self.adjacency.indptr[v], self.adjacency.indptr[v + 1]
        return self.adjacency.indices[lo:hi], self.adjacency.data[lo:hi]

    def edges(self) -> list[tuple[int, int, float]]:
        """Canonical edge list ``(u, v, w)`` with ``u < v``, sorted."""
        coo = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[i]), int(coo.col[i]), float(coo.data[i])) for i in order
        ]

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def weight(self, u: int, v: int) -> float:
        ids, w = self.neighbors(u)
        pos = np.searchsorted(ids, v)
        if pos < len(ids) and ids[pos] == v:
            return float(w[pos])
        return 0.0

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray()


def _canonical_csr(n: int, rows, cols, vals) -> sp.csr_matrix:
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=float)
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    return a


def from_edge_list(n: int, edges: Iterable[tuple[int, int, float]]) -> WeightedGraph:
    """Build a graph from undirected edges ``(u, v, w)``.

    Each unordered pair may appear at most once.  Zero weights are accepted
    and dropped.  Raises :class:`GraphError` on out-of-range ids, self-loops,
    duplicate pairs, negative or non-finite weights, or when no weight is
    positive (for ``n > 1``).
    """
    n = int(n)
    if n < 1:
        raise GraphError(f"vertex count must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    rows, cols, vals = [], [], []
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"vertex id out of range in edge ({u}, {v}) for n={n}")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"duplicate edge {key}")
        seen.add(key)
        if not np.isfinite(w) or w < 0:
            raise GraphError(f"edge {key} has invalid weight {w}")
        if w > 0:
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
    if n > 1 and not vals:
        raise GraphError("graph has no positive edge weight")
    return WeightedGraph(n, _canonical_csr(n, rows, cols, vals))


def from_adjacency(a) -> WeightedGraph:
    """Build a graph from a symmetric (dense or sparse) adjacency matrix."""
    a = sp.csr_matrix(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise GraphError(f"adjacency must be square, got {a.shape}")
    if a.nnz and (not np.all(np.isfinite(a.data)) or a.data.min() < 0):
        raise GraphError("adjacency has negative or non-finite entries")
    if np.any(a.diagonal() != 0):
        raise GraphError("adjacency has nonzero diagonal (self-loops)")
    if (a != a.T).nnz:
        raise GraphError("adjacency is not symmetric")
    coo = a.tocoo()
    out = _canonical_csr(n, coo.row, coo.col, coo.data)
    if n > 1 and out.nnz == 0:
        raise GraphError("graph has no positive edge weight")
    return WeightedGraph(n, out)


def d_max(g: WeightedGraph) -> float:
    """Largest weighted degree (maximum row sum of the adjacency matrix)."""
    if g.n == 1:
        return 1.0
    return float(g.degrees().max())


@dataclass(frozen=True, eq=False)
class DiffusionOperator:
    """The lazy diffusion ``P = Id + (A - D) / d_max`` on a fixed graph.

    For a single vertex there are no edges and ``P`` is the 1x1 identity;
    ``d_max`` is then reported as 1 by convention.
    """

    graph: WeightedGraph
    d_max: float = field(init=False)
    degree_norm: np.ndarray = field(init=False, repr=False)
    _scaled: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        dm = d_max(self.graph)
        deg = self.graph.degrees() / dm
        object.__setattr__(self, "d_max", dm)
        object.__setattr__(self, "degree_norm", deg)
        object.__setattr__(self, "_scaled", (self.graph.adjacency / dm).tocsr())

    @property
    def n(self) -> int:
        return self.graph.n

    def apply(self, x) -> np.ndarray:
        """``P @ x`` for a vector of length n or an (n, k) block of columns."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n or x.ndim > 2:
            raise ValueError(f"expected leading dimension {self.n}, got shape {x.shape}")
        lazy = 1.0 - self.degree_norm
        if x.ndim == 2:
            lazy = lazy[:, None]
        return lazy * x + self._scaled @ x

    def apply_power(self, x, ell: int) -> np.ndarray:
        ell = int(ell)
        if ell < 0:
            raise ValueError(f"number of steps must be nonnegative, got {ell}")
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ValueError(f"expected leading dimension {self.n}, got shape {x.shape}")
        y = x.copy()
        for _ in range(ell):
            y = self.apply(y)
        return y

    def dense(self) -> np.ndarray:
        """Materialize ``P``; only meant for small graphs and tests."""
        return self._scaled.toarray() + np.diag(1.0 - self.degree_norm)


def apply_propagator(d: DiffusionOperator, x) -> np.ndarray:
    return d.apply(x)


def apply_propagator_power(d: DiffusionOperator, x, ell: int) -> np.ndarray:
    return d.apply_power(x, ell)


def is_connected(g: WeightedGraph) -> bool:
    """Breadth-first reachability from vertex 0 over positive-weight edges."""
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    while queue:
        v = queue.popleft()
        for u in indices[indptr[v]:indptr[v + 1]]:
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return bool(seen.all())
