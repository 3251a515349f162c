import numpy as np
import pytest

from graphquad import (
    DiffusionOperator,
    QuadratureRule,
    d_max,
    eigendecompose,
    gaussian_clusters,
    gen_mcgee,
    gram_matrix,
)
from graphquad import io as gio
from conftest import random_connected_graph


def test_edge_list_round_trip(tmp_path):
    g = random_connected_graph(np.random.default_rng(1), 30)
    path = tmp_path / "g.txt"
    gio.write_edge_list(g, path, comments=["made by a test"])
    h = gio.read_edge_list(path)
    assert h.edges() == g.edges()
    assert d_max(h) == d_max(g)
    np.testing.assert_array_equal(eigendecompose(DiffusionOperator(h)).values,
                                  eigendecompose(DiffusionOperator(g)).values)


@pytest.mark.parametrize(
    "text",
    ["", "0 1 1.0\n", "n x\n", "n 3\n0 1\n", "n 3\n0 1 heavy\n"],
)
def test_edge_list_format_errors(text):
    with pytest.raises(gio.FormatError):
        gio.parse_edge_list(text)


def test_rule_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    a = rng.dirichlet(np.ones(9))
    a[-1] = 1.0 - a[:-1].sum()
    rule = QuadratureRule(tuple(range(3, 12)), a)
    path = tmp_path / "r.txt"
    gio.write_rule(rule, path)
    back = gio.read_rule(path)
    assert back.vertices == rule.vertices
    assert back.weights.tobytes() == rule.weights.tobytes()


def test_rule_format_errors():
    with pytest.raises(gio.FormatError):
        gio.parse_rule("# only a comment\n")
    with pytest.raises(gio.FormatError):
        gio.parse_rule("0 0.5 extra\n")


def test_vertices_round_trip():
    assert gio.parse_vertices(gio.format_vertices([4, 1, 9], ["c"])) == [4, 1, 9]
    with pytest.raises(gio.FormatError):
        gio.parse_vertices("1.5\n")


def test_spectrum_round_trip():
    s = eigendecompose(DiffusionOperator(gen_mcgee()))
    back = gio.parse_spectrum(gio.format_spectrum(s))
    assert back.values.tobytes() == s.values.tobytes()
    assert np.array_equal(back.vectors, s.vectors)


def test_gram_round_trip(d_star3):
    M = gram_matrix(d_star3, [0, 1, 3], 2)
    text = gio.format_gram(M)
    assert text.startswith("W 0,1,3 ell 2\n")
    back = gio.parse_gram(text, 4)
    assert back.vertices == M.vertices and back.ell == 2
    assert np.array_equal(back.matrix, M.matrix)
    with pytest.raises(gio.FormatError):
        gio.parse_gram("W 0,1 ell 1\n1 0\n", 4)


def test_vector_and_cloud_round_trip(tmp_path):
    x = np.random.default_rng(3).standard_normal(7)
    (tmp_path / "f.txt").write_text(gio.format_vector(x, ["f"]))
    assert gio.read_vector(tmp_path / "f.txt").tobytes() == x.tobytes()
    p = gaussian_clusters((3, 4), ((0, 0), (5, 5)), 1.0, seed=1)
    (tmp_path / "p.csv").write_text(gio.format_point_cloud(p, labeled=True))
    q = gio.read_point_cloud(tmp_path / "p.csv", labeled=True)
    assert np.array_equal(q.points, p.points) and np.array_equal(q.labels, p.labels)
    (tmp_path / "bad.csv").write_text("1,2\n3\n")
    with pytest.raises(gio.FormatError):
        gio.read_point_cloud(tmp_path / "bad.csv")
