"""Integration errors, baselines, design strength and parameter sweeps."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .graph import DiffusionOperator, WeightedGraph
from .heatball import energy, gram_matrix, theorem_bound
from .spectral import Spectrum, x_lambda_norm, x_lambda_project
from .weights import QuadratureRule, optimize_weights_qp, optimize_weights_spectral

__all__ = [
    "EIGENSPACE_TOL",
    "ExperimentResult",
    "BaselineStats",
    "integrate",
    "integration_error",
    "relative_error",
    "eigenspaces",
    "eigenspace_residual_norms",
    "design_strength",
    "random_baseline",
    "sweep_ell",
    "sweep_dimension",
    "threshold_for_dimension",
    "sharpness_check",
    "check_theorem",
]

EIGENSPACE_TOL = 1e-8


@dataclass
class ExperimentResult:
    """A table of metric rows plus the configuration that produced it."""

    config: dict
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    provenance: dict = field(default_factory=lambda: {"version": __version__})
    rules: list = field(default_factory=list, repr=False)

    def add_row(self, values) -> None:
        values = [float(v) for v in values]
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, expected {len(self.columns)}")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite metric in row {values}")
        self.rows.append(values)

    def stamp(self) -> None:
        self.provenance["timestamp"] = datetime.now(timezone.utc).isoformat()

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_text(self) -> str:
        out = io.StringIO()
        for key, value in self.config.items():
            out.write(f"# {key} = {value}\n")
        for key, value in self.provenance.items():
            out.write(f"# {key} = {value}\n")
        out.write("\t".join(self.columns) + "\n")
        for row in self.rows:
            out.write("\t".join(f"{v:.17g}" for v in row) + "\n")
        return out.getvalue()

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(f"{v:.17g}" for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def integrate(rule: QuadratureRule, f) -> float:
    """``sum_w a_w f(w)``."""
    f = np.asarray(f, dtype=float)
    if max(rule.vertices) >= len(f):
        raise ValueError(f"rule uses vertex {max(rule.vertices)} but f has length {len(f)}")
    return float(rule.weights @ f[list(rule.vertices)])


def integration_error(rule: QuadratureRule, f, n: int | None = None) -> float:
    """True mean minus the rule's estimate."""
    f = np.asarray(f, dtype=float)
    if n is not None and n != len(f):
        raise ValueError(f"f has length {len(f)}, expected {n}")
    return float(f.mean() - integrate(rule, f))


def relative_error(rule: QuadratureRule, f) -> tuple[float, bool]:
    """Error divided by ``|mean(f)|``; the flag is False when the mean is zero
    and the absolute error is returned instead."""
    err = integration_error(rule, f)
    mean = float(np.mean(f))
    if mean == 0.0:
        return err, False
    return err / abs(mean), True


def eigenspaces(s: Spectrum, tol: float = EIGENSPACE_TOL) -> list[np.ndarray]:
    """Group eigenpair indices whose signed eigenvalues chain within ``tol``."""
    order = np.argsort(s.values, kind="stable")
    vals = s.values[order]
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            groups.append(np.sort(order[start:i]))
            start = i
    return groups


def eigenspace_residual_norms(s: Spectrum, rule: QuadratureRule, tol: float = EIGENSPACE_TOL):
    """``(eigenvalue, dimension, ||projection of the residual||)`` per eigenspace."""
    if not s.complete:
        raise ValueError("design strength needs the full spectrum")
    r = rule.residual(s.n)
    out = []
    for idx in eigenspaces(s, tol):
        coeffs = s.vectors[:, idx].T @ r
        out.append((float(s.values[idx].mean()), len(idx), float(np.linalg.norm(coeffs))))
    return out


def design_strength(
    s: Spectrum,
    rule: QuadratureRule,
    tol: float = 1e-8,
    count: str = "eigenspace",
    cluster_tol: float = EIGENSPACE_TOL,
) -> int:
    """Number of eigenfunctions the rule integrates exactly.

    ``count="eigenspace"`` returns the largest dimension of a subspace
    spanned by eigenfunctions on which the rule is exact: every eigenspace
    the residual touches costs one dimension.  ``count="eigenvector"``
    counts members of an eigenbasis in general position, so a touched
    eigenspace costs its full dimension.  The two agree when no touched
    eigenspace is degenerate.
    """
    if count not in ("eigenspace", "eigenvector"):
        raise ValueError(f"unknown count mode {count!r}")
    failing = [(dim, norm) for _, dim, norm in eigenspace_residual_norms(s, rule, cluster_tol)
               if norm > tol]
    if count == "eigenspace":
        return s.n - len(failing)
    return s.n - sum(dim for dim, _ in failing)


@dataclass(frozen=True)
class BaselineStats:
    mean: float
    std: float
    trials: int
    k: int

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.trials)


def random_baseline(
    g: WeightedGraph | int, f, k: int, trials: int, seed: int, chunk: int = 1000
) -> BaselineStats:
    """|error| statistics of uniform weights on uniformly random k-subsets."""
    n = g if isinstance(g, int) else g.n
    f = np.asarray(f, dtype=float)
    if len(f) != n:
        raise ValueError(f"f has length {len(f)}, expected {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    mean = f.mean()
    errs = np.empty(trials)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        if k == n:
            picks = np.broadcast_to(np.arange(n), (hi - lo, n))
        else:
            picks = np.argpartition(rng.random((hi - lo, n)), k, axis=1)[:, :k]
        errs[lo:hi] = np.abs(mean - f[picks].mean(axis=1))
    return BaselineStats(float(errs.mean()), float(errs.std(ddof=1)) if trials > 1 else 0.0,
                         trials, k)


def sweep_ell(
    d: DiffusionOperator,
    W,
    f_list,
    lam: float,
    ell_range,
    nonneg: bool = True,
    spectrum: Spectrum | None = None,
) -> ExperimentResult:
    """Refit the heat-ball weights at each ``ell`` and tabulate energy, bound and errors.

    ``f_list`` should lie in ``X_lambda`` for the bound column to apply.  The
    norm in the bound is ``||f||_{X_lambda}`` when a spectrum is given and
    ``||f||_2`` otherwise (equal for functions inside the space).
    """
    ells = [int(e) for e in ell_range]
    if not ells:
        raise ValueError("ell range is empty")
    fs = [np.asarray(f, dtype=float) for f in f_list]
    norms = [x_lambda_norm(spectrum, f, lam) if spectrum is not None else float(np.linalg.norm(f))
             for f in fs]
    columns = ["ell", "energy", "unit_bound"]
    for i in range(len(fs)):
        columns += [f"error_{i}", f"bound_{i}"]
    result = ExperimentResult(
        config={"operation": "sweep-ell", "W": ",".join(map(str, sorted(W))), "lambda": lam,
                "ell": f"{ells[0]}..{ells[-1]}", "nonneg": nonneg},
        columns=columns,
    )
    for ell in ells:
        M = gram_matrix(d, W, ell)
        a = optimize_weights_qp(M, nonneg=nonneg).weights
        rule = QuadratureRule(M.vertices, a)
        e = energy(M, a)
        row = [ell, max(e, 0.0), theorem_bound(e, lam, ell, 1.0)]
        for f, norm in zip(fs, norms):
            row += [abs(integration_error(rule, f)), theorem_bound(e, lam, ell, norm)]
        result.add_row(row)
        result.rules.append(rule)
    return result


def threshold_for_dimension(s: Spectrum, m: int, gap_tol: float = 1e-12) -> tuple[float, int]:
    """A threshold ``lambda`` whose ``X_lambda`` has dimension ``m`` exactly.

    When ``|lambda_m| == |lambda_(m+1)|`` that is impossible; the nearest
    realizable dimension is used instead (the smaller one on a tie).
    Returns ``(lambda, dimension)``.
    """
    mags = np.abs(s.values)
    size = len(mags)
    if not 1 <= m <= size:
        raise ValueError(f"dimension must be in [1, {size}], got {m}")

    def realizable(j):
        if j < 1 or j > size:
            return False
        if j == size:
            return s.complete and mags[-1] > 0
        return mags[j - 1] - mags[j] > gap_tol

    if realizable(m):
        dim = m
    else:
        lower = next((j for j in range(m - 1, 0, -1) if realizable(j)), None)
        upper = next((j for j in range(m + 1, size + 1) if realizable(j)), None)
        cands = [j for j in (lower, upper) if j is not None]
        if not cands:
            raise ValueError(f"no realizable dimension near {m}")
        dim = min(cands, key=lambda j: (abs(j - m), j))
    lam = mags[dim - 1] / 2 if dim == size else 0.5 * (mags[dim - 1] + mags[dim])
    return float(lam), dim


def sweep_dimension(
    s: Spectrum, W, dims, nonneg: bool = True, n_eigs: int = 50
) -> ExperimentResult:
    """Fit spectral weights in ``X_lambda`` of each dimension in ``dims``.

    Each row records the requested and realized dimension, the threshold,
    the achieved objective and the signed integration error on each of the
    first ``min(n_eigs, n)`` eigenvectors.
    """
    q = min(n_eigs, len(s))
    columns = ["m", "dim", "lambda", "objective"] + [f"e{k}" for k in range(1, q + 1)]
    result = ExperimentResult(
        config={"operation": "sweep-dim", "W": ",".join(map(str, sorted(W))),
                "dims": ",".join(map(str, dims)), "nonneg": nonneg},
        columns=columns,
    )
    for m in dims:
        lam, dim = threshold_for_dimension(s, int(m))
        res = optimize_weights_spectral(s, W, lam, nonneg=nonneg)
        rule = res.rule
        errs = [integration_error(rule, s.vectors[:, k]) for k in range(q)]
        result.add_row([m, dim, lam, res.objective] + errs)
        result.rules.append(rule)
    return result


def sharpness_check(s: Spectrum, rule: QuadratureRule, lam: float) -> tuple[float, float, float]:
    """Compare the worst-case normalized error on ``X_lambda`` with its closed form.

    Returns ``(sup_ratio, rhs, gap)`` where ``rhs`` is the ``X_lambda`` norm of
    the residual and ``sup_ratio`` is the normalized error attained by the
    residual's own projection, the maximizer.
    """
    r = rule.residual(s.n)
    rhs = x_lambda_norm(s, r, lam)
    f_star, coeffs = x_lambda_project(s, r, lam)
    f_norm = float(np.linalg.norm(coeffs))
    if f_norm == 0.0:
        sup_ratio = 0.0
    else:
        sup_ratio = abs(integration_error(rule, f_star)) / f_norm
    return sup_ratio, rhs, rhs - sup_ratio


def check_theorem(
    d: DiffusionOperator,
    s: Spectrum,
    rules,
    lams,
    ells,
    functions: int,
    seed: int,
    slack: float = 1e-9,
) -> ExperimentResult:
    """Test the heat-ball error bound on random band-limited functions.

    For every rule, threshold and ``ell``, draws ``functions`` Gaussian
    vectors, projects them into ``X_lambda`` and records the largest
    ``|error| - bound``.  A positive ``excess`` beyond ``slack`` is a violation.
    """
    if functions < 1:
        raise ValueError("need at least one test function")
    rng = np.random.default_rng(seed)
    result = ExperimentResult(
        config={"operation": "check-theorem", "seed": seed, "functions": functions,
                "slack": slack},
        columns=["rule", "lambda", "ell", "energy", "max_error", "max_excess", "violations"],
    )
    for r_idx, rule in enumerate(rules):
        for lam in lams:
            fs = [x_lambda_project(s, rng.standard_normal(d.n), lam)[0] for _ in range(functions)]
            for ell in ells:
                M = gram_matrix(d, rule.vertices, ell)
                a = rule.weights[np.argsort(rule.vertices)]
                e = energy(M, a)
                worst_err, worst_excess, bad = 0.0, -math.inf, 0
                for f in fs:
                    err = abs(integration_error(rule, f))
                    bound = theorem_bound(e, lam, ell, x_lambda_norm(s, f, lam))
                    worst_err = max(worst_err, err)
                    worst_excess = max(worst_excess, err - bound)
                    bad += err > bound + slack
                result.add_row([r_idx, lam, ell, max(e, 0.0), worst_err, worst_excess, bad])
    return result
