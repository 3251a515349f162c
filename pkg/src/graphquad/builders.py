"""Benchmark graphs and k-nearest-neighbor Gaussian-kernel graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import WeightedGraph, from_adjacency, from_edge_list

__all__ = [
    "FAMILIES",
    "PointCloud",
    "gen_family",
    "gen_mcgee",
    "MCGEE_CHORDS",
    "gaussian_clusters",
    "knn_bandwidth",
    "knn_indices",
    "knn_gaussian_graph",
]

FAMILIES = ("cycle", "path", "complete", "star", "grid")

# 1-based chords of the McGee graph on top of the 24-cycle
MCGEE_CHORDS = (
    (1, 8), (2, 19), (3, 15), (4, 11), (5, 22), (6, 18),
    (7, 14), (9, 21), (10, 17), (13, 20), (16, 23), (12, 24),
)


def _cycle(n):
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    return n, [(i, (i + 1) % n, 1.0) for i in range(n)]


def _path(n):
    if n < 1:
        raise ValueError(f"path needs n >= 1, got {n}")
    return n, [(i, i + 1, 1.0) for i in range(n - 1)]


def _complete(n):
    if n < 1:
        raise ValueError(f"complete graph needs n >= 1, got {n}")
    return n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]


def _star(m):
    # vertex 0 is the center, leaves are 1..m
    if m < 1:
        raise ValueError(f"star needs m >= 1 leaves, got {m}")
    return m + 1, [(0, i, 1.0) for i in range(1, m + 1)]


def _grid(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs positive sides, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if r + 1 < rows:
                edges.append((v, v + cols, 1.0))
    return rows * cols, edges


def gen_family(name: str, *sizes: int) -> WeightedGraph:
    """Unit-weight standard graphs.

    ``cycle n`` and ``path n`` number vertices along the curve, ``complete n``
    is K_n, ``star m`` has center 0 and leaves 1..m, ``grid r c`` is
    numbered row-major.
    """
    builders = {"cycle": _cycle, "path": _path, "complete": _complete, "star": _star,
                "grid": _grid}
    if name not in builders:
        raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")
    expected = 2 if name == "grid" else 1
    if len(sizes) != expected:
        raise ValueError(f"family {name!r} takes {expected} size argument(s)")
    n, edges = builders[name](*(int(s) for s in sizes))
    return from_edge_list(n, edges)


def gen_mcgee() -> WeightedGraph:
    """The McGee graph, the (3,7)-cage: 24-cycle plus 12 chords, ids 0-based."""
    n = 24
    edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
    edges += [(u - 1, v - 1, 1.0) for u, v in MCGEE_CHORDS]
    return from_edge_list(n, edges)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError(f"points must be a nonempty 2-d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int).ravel()
            if len(lab) != len(pts):
                raise ValueError("labels and points differ in length")
            object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.points.shape[0]


def gaussian_clusters(counts, centers, std: float, seed: int) -> PointCloud:
    """Isotropic Gaussian blobs; label ``i`` marks points drawn around ``centers[i]``."""
    if std <= 0:
        raise ValueError("std must be positive")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    counts = [int(c) for c in counts]
    if len(counts) != len(centers):
        raise ValueError("need one count per center")
    rng = np.random.default_rng(seed)
    blocks = [c + std * rng.standard_normal((m, centers.shape[1]))
              for c, m in zip(centers, counts)]
    labels = np.repeat(np.arange(len(counts)), counts)
    return PointCloud(np.vstack(blocks), labels)


def knn_indices(points: np.ndarray, k: int, chunk: int = 256):
    """Indices and distances of each point's ``k`` nearest other points.

    Exact brute force; equal distances are broken by the smaller index.
    """
    x = np.asarray(points, dtype=float)
    m = len(x)
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < number of points ({m}), got k={k}")
    idx = np.empty((m, k), dtype=int)
    dist = np.empty((m, k))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        d2 = np.sum((x[lo:hi, None, :] - x[None, :, :]) ** 2, axis=-1)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        idx[lo:hi] = order
        dist[lo:hi] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return idx, dist


def knn_bandwidth(points: np.ndarray, k: int) -> float:
    """Mean distance from each point to its k-th nearest neighbor."""
    _, dist = knn_indices(points, k)
    return float(dist[:, -1].mean())


def knn_gaussian_graph(
    p: PointCloud | np.ndarray,
    k: int,
    bandwidth: str | float = "global-mean-knn",
    return_sigma: bool = False,
):
    """Symmetrized k-NN graph with Gaussian weights ``exp(-|x_i - x_j|^2 / sigma^2)``.

    ``bandwidth`` is ``"global-mean-knn"`` (sigma from :func:`knn_bandwidth`)
    or a positive number used as sigma directly.  The directed k-NN
    adjacency is averaged with its transpose.
    """
    x = p.points if isinstance(p, PointCloud) else np.asarray(p, dtype=float)
    idx, dist = knn_indices(x, k)
    if bandwidth == "global-mean-knn":
        sigma = float(dist[:, -1].mean())
    elif isinstance(bandwidth, (int, float)) and not isinstance(bandwidth, bool):
        sigma = float(bandwidth)
    else:
        raise ValueError(f"unknown bandwidth mode {bandwidth!r}")
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    m = len(x)
    w = np.exp(-(dist**2) / sigma**2)
    rows = np.repeat(np.arange(m), k)
    directed = sp.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(m, m))
    g: WeightedGraph = from_adjacency((directed + directed.T) * 0.5)
    return (g, sigma) if return_sigma else g
