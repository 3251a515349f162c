import math

import numpy as np
import pytest

from graphquad import (
    DiffusionOperator,
    best_ell,
    energy,
    gen_family,
    gram_matrix,
    optimize_weights_qp,
    theorem_bound,
)
from graphquad.heatball import GRAM_MEMORY_CAP, gram_matrix_two_sided
from conftest import dense_propagator, random_connected_graph


def test_star_gram(d_star3):
    M = gram_matrix(d_star3, [1, 0], 1)
    assert M.vertices == (0, 1)
    np.testing.assert_allclose(M.matrix, [[1 / 3, 2 / 9], [2 / 9, 5 / 9]], atol=1e-15)


def test_ell_zero_is_identity(d_star3):
    np.testing.assert_array_equal(gram_matrix(d_star3, [0, 2, 3], 0).matrix, np.eye(3))


def test_c4_gram(d_c4):
    np.testing.assert_allclose(gram_matrix(d_c4, [0, 1], 1).matrix, np.eye(2) / 2, atol=1e-15)


def test_gram_is_read_only(d_c4):
    M = gram_matrix(d_c4, [0, 1], 1)
    with pytest.raises(ValueError):
        M.matrix[0, 0] = 3.0


@pytest.mark.parametrize("W", [[0, 0], [0, 4], [-1]])
def test_gram_rejects_bad_vertices(d_c4, W):
    with pytest.raises(ValueError):
        gram_matrix(d_c4, W, 1)


def test_gram_memory_cap(d_c4, monkeypatch):
    monkeypatch.setattr("graphquad.heatball.GRAM_MEMORY_CAP", 7)
    with pytest.raises(MemoryError):
        gram_matrix(d_c4, [0, 1], 1)
    assert GRAM_MEMORY_CAP == 2**26


@pytest.mark.parametrize("seed", range(6))
def test_gram_invariants_and_two_routes(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, int(rng.integers(8, 50)))
    d = DiffusionOperator(g)
    W = rng.choice(g.n, size=6, replace=False)
    P = dense_propagator(g)
    for ell in range(0, 5):
        M = gram_matrix(d, W, ell).matrix
        np.testing.assert_allclose(M, gram_matrix_two_sided(d, W, ell), atol=1e-12)
        Pl = np.linalg.matrix_power(P, ell)[:, np.sort(W)]
        np.testing.assert_allclose(M, Pl.T @ Pl, atol=1e-12)
        assert np.abs(M - M.T).max() <= 1e-12
        assert np.linalg.eigvalsh(M).min() >= -1e-10
        assert M.min() >= 0 and M.max() <= 1 + 1e-15


def test_energy_examples(d_c4, d_star3):
    assert abs(energy(gram_matrix(d_c4, [0, 1], 1), [0.5, 0.5])) <= 1e-15
    assert energy(gram_matrix(d_c4, [2], 0), [1.0]) == pytest.approx(0.75, abs=1e-15)
    e = energy(gram_matrix(d_star3, [0, 1], 1), [0.75, 0.25])
    assert e == pytest.approx(1 / 18, abs=1e-15)


def test_energy_rejects_unnormalized(d_c4):
    M = gram_matrix(d_c4, [0, 1], 1)
    with pytest.raises(ValueError, match="sum"):
        energy(M, [0.5, 0.6])
    with pytest.raises(ValueError):
        energy(M, [1.0])


@pytest.mark.parametrize("seed", range(6))
def test_squaring_out_dissipation_nonnegativity(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_connected_graph(rng, int(rng.integers(8, 64)))
    d = DiffusionOperator(g)
    k = int(rng.integers(1, 8))
    W = np.sort(rng.choice(g.n, size=k, replace=False))
    a = rng.standard_normal(k)
    a = a / a.sum() if abs(a.sum()) > 0.1 else np.full(k, 1 / k)
    prev = math.inf
    for ell in range(0, 9):
        M = gram_matrix(d, W, ell)
        e = energy(M, a)
        mu = np.zeros(g.n)
        mu[W] = a
        direct = np.sum((1 / g.n - d.apply_power(mu, ell)) ** 2)
        assert abs(direct - e) <= 1e-12 * max(1.0, np.abs(a).sum() ** 2)
        assert e >= -1e-12
        assert e <= prev + 1e-12
        prev = e


def test_bound_examples():
    assert theorem_bound(0.0, 0.3, 5, 7.0) == 0.0
    assert theorem_bound(1 / 18, 0.5, 1, 1.0) == pytest.approx(2 * math.sqrt(1 / 18), rel=1e-15)
    assert theorem_bound(0.2, 0.5, 3, 0.0) == 0.0
    assert theorem_bound(-1e-13, 0.5, 3, 1.0) == 0.0


def test_bound_log_space():
    assert theorem_bound(1e-300, 1e-6, 60, 2.0) == pytest.approx(2e210, rel=1e-10)
    assert theorem_bound(0.25, 1e-6, 60, 2.0) == math.inf
    assert theorem_bound(0.25, 0.5, 10, 2.0) == pytest.approx(2.0 * 1024 * 0.5, rel=1e-15)


@pytest.mark.parametrize("lam", [0.0, 1.0, -0.5, 1.5])
def test_bound_rejects_threshold(lam):
    with pytest.raises(ValueError):
        theorem_bound(0.1, lam, 1, 1.0)


def test_best_ell_c4(d_c4):
    res = best_ell(d_c4, [0, 1], 0.5, ell_max=5, weight_mode="uniform")
    assert res.ell == 1 and res.bound == 0.0


def test_best_ell_whole_vertex_set(d_star3):
    res = best_ell(d_star3, [0, 1, 2, 3], 0.5, ell_max=4, weight_mode="uniform")
    assert res.ell == 1
    assert max(res.bounds) <= 1e-7


def test_best_ell_star_matches_sweep(d_star3):
    res = best_ell(d_star3, [0, 1], 0.5, ell_max=4)
    sweep = []
    for ell in range(1, 5):
        M = gram_matrix(d_star3, [0, 1], ell).matrix
        t = np.linspace(0, 1, 200001)
        a = np.stack([t, 1 - t], axis=1)
        emin = np.min(np.einsum("ij,jk,ik->i", a, M, a)) - 0.25
        sweep.append(0.5 ** -ell * math.sqrt(max(emin, 0.0)))
    np.testing.assert_allclose(res.bounds, sweep, rtol=1e-6)
    assert res.ell == int(np.argmin(sweep)) + 1
    M = gram_matrix(d_star3, [0, 1], res.ell)
    np.testing.assert_allclose(res.weights, optimize_weights_qp(M).weights, atol=1e-12)


def test_best_ell_argument_checks(d_c4):
    with pytest.raises(ValueError):
        best_ell(d_c4, [0, 1], 0.5, ell_max=0)
    with pytest.raises(ValueError):
        best_ell(d_c4, [0, 1], 0.5, weight_mode="random")


def test_grid_2x2_behaves_like_c4():
    d = DiffusionOperator(gen_family("grid", 2, 2))
    np.testing.assert_allclose(gram_matrix(d, [0, 1], 1).matrix, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(gram_matrix(d, [0, 3], 1).matrix, np.full((2, 2), 0.5), atol=1e-15)
