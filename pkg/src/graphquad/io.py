"""Plain-text file formats.

All readers skip blank lines and lines starting with ``#``; writers put
configuration lines there.  Reals are written with 17 significant digits,
which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .builders import PointCloud
from .graph import WeightedGraph, from_edge_list
from .heatball import GramMatrix
from .spectral import Spectrum
from .weights import QuadratureRule

__all__ = [
    "FormatError",
    "format_edge_list",
    "parse_edge_list",
    "read_edge_list",
    "write_edge_list",
    "format_rule",
    "parse_rule",
    "read_rule",
    "write_rule",
    "format_vertices",
    "parse_vertices",
    "read_vertices",
    "format_spectrum",
    "parse_spectrum",
    "format_gram",
    "parse_gram",
    "format_vector",
    "read_vector",
    "read_point_cloud",
    "format_point_cloud",
]


class FormatError(ValueError):
    pass


def _real(x: float) -> str:
    return f"{x:.17g}"


def _header(comments) -> str:
    return "".join(f"# {c}\n" for c in comments or ())


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


# --- edge lists ---------------------------------------------------------------------


def format_edge_list(g: WeightedGraph, comments=None) -> str:
    lines = [f"n {g.n}"] + [f"{u} {v} {_real(w)}" for u, v, w in g.edges()]
    return _header(comments) + "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> WeightedGraph:
    lines = _content_lines(text)
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise FormatError("edge list is empty") from None
    head = first.split()
    if len(head) != 2 or head[0] != "n":
        raise FormatError(f"line {lineno}: expected header 'n <count>', got {first!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise FormatError(f"line {lineno}: bad vertex count {head[1]!r}") from None
    edges = []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 'u v w', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise FormatError(f"line {lineno}: cannot parse {line!r}") from None
    return from_edge_list(n, edges)


def read_edge_list(path) -> WeightedGraph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def write_edge_list(g: WeightedGraph, path, comments=None) -> None:
    Path(path).write_text(format_edge_list(g, comments), encoding="utf-8")


# --- quadrature rules and vertex sets -----------------------------------------------


def format_rule(rule: QuadratureRule, comments=None) -> str:
    body = "".join(f"{v} {_real(a)}\n" for v, a in zip(rule.vertices, rule.weights))
    return _header(comments) + body


def parse_rule(text: str) -> QuadratureRule:
    vertices, weights = [], []
    for lineno, line in _content_lines(text):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'vertex weight', got {line!r}")
        try:
            vertices.append(int(parts[0]))
            weights.append(float(parts[1]))
        except ValueError:
            raise FormatError(f"line {lineno}: cannot parse {line!r}") from None
    if not vertices:
        raise FormatError("rule file has no entries")
    return QuadratureRule(tuple(vertices), np.array(weights))


def read_rule(path) -> QuadratureRule:
    return parse_rule(Path(path).read_text(encoding="utf-8"))


def write_rule(rule: QuadratureRule, path, comments=None) -> None:
    Path(path).write_text(format_rule(rule, comments), encoding="utf-8")


def format_vertices(W, comments=None) -> str:
    return _header(comments) + "".join(f"{int(v)}\n" for v in W)


def parse_vertices(text: str) -> list[int]:
    out = []
    for lineno, line in _content_lines(text):
        try:
            out.append(int(line))
        except ValueError:
            raise FormatError(f"line {lineno}: expected a vertex id, got {line!r}") from None
    return out


def read_vertices(path) -> list[int]:
    return parse_vertices(Path(path).read_text(encoding="utf-8"))


# --- spectra and Gram matrices ------------------------------------------------------


def format_spectrum(s: Spectrum) -> str:
    return "".join(
        " ".join([_real(lam)] + [_real(c) for c in s.vectors[:, k]]) + "\n"
        for k, lam in enumerate(s.values)
    )


def parse_spectrum(text: str, complete: bool = True) -> Spectrum:
    rows = [[float(x) for x in line.split()] for _, line in _content_lines(text)]
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError("spectrum rows are empty or ragged")
    arr = np.array(rows)
    return Spectrum(arr[:, 0], arr[:, 1:].T.copy(), complete)


def format_gram(M: GramMatrix) -> str:
    head = f"W {','.join(map(str, M.vertices))} ell {M.ell}\n"
    body = "".join(" ".join(_real(x) for x in row) + "\n" for row in M.matrix)
    return head + body


def parse_gram(text: str, n: int) -> GramMatrix:
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError("Gram file is empty")
    head = lines[0][1].split()
    if len(head) != 4 or head[0] != "W" or head[2] != "ell":
        raise FormatError(f"bad Gram header {lines[0][1]!r}")
    vertices = tuple(int(v) for v in head[1].split(","))
    matrix = np.array([[float(x) for x in line.split()] for _, line in lines[1:]])
    if matrix.shape != (len(vertices), len(vertices)):
        raise FormatError(f"Gram body has shape {matrix.shape}, expected k={len(vertices)}")
    return GramMatrix(vertices, int(head[3]), matrix, n)


# --- vectors and point clouds -------------------------------------------------------


def format_vector(x, comments=None) -> str:
    return _header(comments) + "".join(_real(v) + "\n" for v in np.asarray(x, dtype=float))


def read_vector(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return np.array([float(line) for _, line in _content_lines(text)])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def format_point_cloud(p: PointCloud, labeled: bool = False) -> str:
    lines = []
    for i, row in enumerate(p.points):
        cells = [_real(x) for x in row]
        if labeled:
            cells.append(str(int(p.labels[i])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_point_cloud(path, labeled: bool = False) -> PointCloud:
    rows, labels = [], []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in _content_lines(text):
        cells = line.split(",")
        try:
            if labeled:
                labels.append(int(cells[-1]))
                cells = cells[:-1]
            rows.append([float(c) for c in cells])
        except ValueError:
            raise FormatError(f"line {lineno}: cannot parse {line!r}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError("point cloud is empty or ragged")
    return PointCloud(np.array(rows), np.array(labels) if labeled else None)
