import itertools

import numpy as np
import pytest

from graphquad import (
    DiffusionOperator,
    ExperimentResult,
    QuadratureRule,
    design_strength,
    eigendecompose,
    from_edge_list,
    gen_family,
    gen_mcgee,
    integrate,
    integration_error,
    optimize_weights_spectral,
    random_baseline,
    sharpness_check,
    sweep_dimension,
    sweep_ell,
    x_lambda_project,
)
from graphquad.evaluation import (
    check_theorem,
    eigenspace_residual_norms,
    relative_error,
    threshold_for_dimension,
)
from conftest import random_connected_graph

MCGEE_W = [4, 7, 8, 11, 16, 19, 20, 23]


def c4_rule():
    return QuadratureRule((0, 1), (0.5, 0.5))


def test_integrate_examples():
    rule = QuadratureRule((1, 3), (0.25, 0.75))
    assert integrate(rule, np.full(5, 2.5)) == pytest.approx(2.5, abs=1e-15)
    assert integrate(QuadratureRule((0,), (1.0,)), [7.0, 1.0, 2.0]) == 7.0
    assert integrate(c4_rule(), [1, -1, 1, -1]) == 0.0
    with pytest.raises(ValueError):
        integrate(rule, [1.0, 2.0])


def test_error_examples(d_c4):
    assert integration_error(c4_rule(), np.full(4, 3.0)) == 0.0
    assert integration_error(c4_rule(), [1.0, 0, -1, 0]) == -0.5
    s = eigendecompose(d_c4)
    res = optimize_weights_spectral(s, [0, 1], 0.5)
    assert res.objective <= 1e-12
    for k in (0, 1):
        assert abs(integration_error(res.rule, s.vectors[:, k])) <= 1e-8


def test_relative_error_flag():
    value, relative = relative_error(c4_rule(), [1.0, 0, -1, 0])
    assert (value, relative) == (-0.5, False)
    value, relative = relative_error(c4_rule(), [2.0, 2.0, 4.0, 4.0])
    assert relative and value == pytest.approx(1 / 3)


def test_design_strength_examples(d_c4):
    s = eigendecompose(d_c4)
    assert design_strength(s, QuadratureRule.uniform(range(4))) == 4
    assert design_strength(s, c4_rule(), tol=1e-10) == 3


def test_mcgee_eigenvector_count_is_21():
    s = eigendecompose(DiffusionOperator(gen_mcgee()))
    rule = QuadratureRule.uniform([w - 1 for w in MCGEE_W])
    assert design_strength(s, rule, tol=1e-8, count="eigenvector") == 21
    failing = [(dim, norm) for _, dim, norm in eigenspace_residual_norms(s, rule) if norm > 1e-8]
    assert [dim for dim, _ in failing] == [3]


def test_mcgee_rule_is_best_possible():
    s = eigendecompose(DiffusionOperator(gen_mcgee()))
    counts = [design_strength(s, QuadratureRule.uniform(W), count="eigenvector")
              for W in itertools.islice(itertools.combinations(range(24), 8), 0, None, 997)]
    assert max(counts) <= 21


def dft_oracle_strength(n, W, tol=1e-8):
    """Project the residual onto each C_n eigenspace spanned by cos/sin modes."""
    r = np.full(n, 1.0 / n)
    r[list(W)] -= 1.0 / len(W)
    t = np.arange(n)
    groups = {}
    for j in range(n // 2 + 1):
        modes = [np.cos(2 * np.pi * j * t / n)]
        if 0 < j < n - j:
            modes.append(np.sin(2 * np.pi * j * t / n))
        Q, _ = np.linalg.qr(np.column_stack(modes))
        groups[j] = np.linalg.norm(Q.T @ r)
    failing = {j for j, norm in groups.items() if norm > tol}
    return n - len(failing), failing


def test_equispaced_cycle_design():
    s = eigendecompose(DiffusionOperator(gen_family("cycle", 12)))
    rule = QuadratureRule.uniform([0, 3, 6, 9])
    expected, failing = dft_oracle_strength(12, [0, 3, 6, 9])
    assert all(j % 4 == 0 for j in failing) and failing
    assert design_strength(s, rule) == expected == 11


def test_strength_invariant_under_relabeling():
    rng = np.random.default_rng(23)
    g = gen_family("grid", 3, 4)
    perm = rng.permutation(12)
    h = from_edge_list(12, [(int(perm[u]), int(perm[v]), w) for u, v, w in g.edges()])
    W = [0, 5, 11]
    s, t = eigendecompose(DiffusionOperator(g)), eigendecompose(DiffusionOperator(h))
    rule, moved = QuadratureRule.uniform(W), QuadratureRule.uniform(perm[W])
    for count in ("eigenspace", "eigenvector"):
        assert design_strength(s, rule, count=count) == design_strength(t, moved, count=count)


def test_baseline_trivial_cases():
    f = np.random.default_rng(0).standard_normal(10)
    stats = random_baseline(10, f, 10, trials=50, seed=1)
    assert stats.mean <= 1e-15
    stats = random_baseline(gen_family("cycle", 10), np.full(10, 4.0), 3, trials=50, seed=1)
    assert stats.mean == 0.0 and stats.std == 0.0


def test_baseline_matches_enumeration():
    s = eigendecompose(DiffusionOperator(gen_family("cycle", 8)))
    f = s.vectors[:, 1]
    exact = np.mean([abs(f.mean() - f[list(c)].mean()) for c in itertools.combinations(range(8), 4)])
    stats = random_baseline(8, f, 4, trials=10_000, seed=2)
    assert abs(stats.mean - exact) <= 3 * stats.stderr


def test_baseline_is_seeded():
    f = np.arange(20.0)
    a = random_baseline(20, f, 5, trials=300, seed=9)
    b = random_baseline(20, f, 5, trials=300, seed=9)
    assert a == b


def test_sweep_ell_c4(d_c4):
    s = eigendecompose(d_c4)
    rng = np.random.default_rng(0)
    fs = [x_lambda_project(s, rng.standard_normal(4), 0.5)[0] for _ in range(3)]
    res = sweep_ell(d_c4, [0, 1], fs, 0.5, range(0, 4), spectrum=s)
    row1 = res.rows[1]
    assert row1[0] == 1 and row1[1] <= 1e-15
    for i in range(3):
        assert res.column(f"error_{i}")[1] <= 1e-15
    np.testing.assert_allclose(res.rules[0].weights, [0.5, 0.5], atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_sweep_ell_rows_respect_bound(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, 30)
    d = DiffusionOperator(g)
    s = eigendecompose(d)
    W = rng.choice(30, size=5, replace=False)
    fs = [x_lambda_project(s, rng.standard_normal(30), 0.6)[0] for _ in range(4)]
    res = sweep_ell(d, W, fs, 0.6, range(0, 7), spectrum=s)
    np.testing.assert_allclose(res.rules[0].weights, 0.2, atol=1e-12)
    for i in range(4):
        assert np.all(res.column(f"error_{i}") <= res.column(f"bound_{i}") + 1e-9)


def test_threshold_for_dimension_degenerate():
    s = eigendecompose(DiffusionOperator(gen_family("cycle", 8)))
    lam, dim = threshold_for_dimension(s, 2)
    assert dim == 2 and 0.71 < lam < 1
    assert threshold_for_dimension(s, 3)[1] == 2
    assert threshold_for_dimension(s, 4)[1] == 2
    assert threshold_for_dimension(s, 5)[1] == 6


def test_sweep_dimension_certificate():
    rng = np.random.default_rng(41)
    g = random_connected_graph(rng, 40)
    s = eigendecompose(DiffusionOperator(g))
    W = rng.choice(40, size=8, replace=False)
    res = sweep_dimension(s, W, [1, 3, 6, 8, 12], nonneg=False)
    assert res.columns[:4] == ["m", "dim", "lambda", "objective"]
    assert len(res.columns) == 4 + 40
    np.testing.assert_allclose(res.rules[0].weights, 1 / 8, atol=1e-12)
    for row in res.rows:
        m, dim, _, obj = row[:4]
        if obj <= 1e-10:
            assert np.all(np.abs(row[4:4 + int(dim)]) <= 1e-8)
    assert res.column("objective")[-1] > 1e-8


def test_phase_transition_is_monotone_in_subset_size():
    rng = np.random.default_rng(5)
    g = random_connected_graph(rng, 36)
    s = eigendecompose(DiffusionOperator(g))
    order = rng.permutation(36)
    dims = list(range(2, 20))
    first_fail = []
    for size in (4, 8, 12):
        res = sweep_dimension(s, order[:size], dims, nonneg=False)
        fails = [int(r[1]) for r in res.rows if r[3] > 1e-8]
        first_fail.append(min(fails) if fails else 99)
    assert first_fail == sorted(first_fail)


def test_sharpness_examples(d_c4):
    s = eigendecompose(d_c4)
    assert sharpness_check(s, QuadratureRule.uniform(range(4)), 0.5) == (0.0, 0.0, 0.0)
    sup, rhs, gap = sharpness_check(s, c4_rule(), 0.5)
    assert rhs <= 1e-15 and abs(gap) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_sharpness_random(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, 25)
    s = eigendecompose(DiffusionOperator(g))
    W = rng.choice(25, size=4, replace=False)
    sup, rhs, gap = sharpness_check(s, QuadratureRule(W, rng.dirichlet(np.ones(4))), 0.4)
    assert rhs > 0 and abs(gap) <= 1e-10


def test_check_theorem_has_no_violations():
    rng = np.random.default_rng(3)
    g = random_connected_graph(rng, 20)
    d = DiffusionOperator(g)
    s = eigendecompose(d)
    rules = [QuadratureRule.uniform([0, 5, 9]), QuadratureRule((1, 2), (1.5, -0.5))]
    res = check_theorem(d, s, rules, [0.3, 0.9], [1, 2, 3], functions=20, seed=1)
    assert len(res.rows) == 12
    assert res.column("violations").sum() == 0


def test_experiment_result_output():
    res = ExperimentResult({"seed": 1}, ["a", "b"])
    res.add_row([1, 0.1])
    with pytest.raises(ValueError):
        res.add_row([1, float("nan")])
    with pytest.raises(ValueError):
        res.add_row([1])
    text = res.to_text()
    assert text.splitlines()[:3] == ["# seed = 1", "# version = 0.1.0", "a\tb"]
    assert "timestamp" not in text
    assert res.to_csv() == "a,b\n1,0.10000000000000001\n"
    res.stamp()
    assert "# timestamp = " in res.to_text()
