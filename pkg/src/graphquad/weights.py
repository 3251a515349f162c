"""Quadrature weights: simplex-constrained QP and spectral least squares.

Both problems have the form ``min a^T M a`` subject to ``sum(a) == 1`` and,
optionally, ``a >= 0``.  The equality-constrained version is solved exactly
(minimum-norm solution when the minimizer is not unique); the nonnegative
version by projected gradient, periodically handed to an exact primal
active-set refinement that finishes the job once the support is close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .heatball import GramMatrix
from .spectral import Spectrum, x_lambda_space

__all__ = [
    "QuadratureRule",
    "QPResult",
    "SpectralResult",
    "project_to_simplex",
    "optimize_weights_qp",
    "optimize_weights_spectral",
    "kkt_residual",
    "spectral_residual_matrix",
]

SUM_TOL = 1e-10
SUPPORT_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Vertices ``W`` with weights summing to one."""

    vertices: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        v = tuple(int(x) for x in self.vertices)
        a = np.array(self.weights, dtype=float).ravel()
        if len(v) != len(a):
            raise ValueError(f"{len(v)} vertices but {len(a)} weights")
        if not v:
            raise ValueError("a rule needs at least one vertex")
        if len(set(v)) != len(v):
            raise ValueError("rule vertices must be distinct")
        if min(v) < 0:
            raise ValueError("negative vertex id")
        # relative: nearly singular fits can carry very large signed weights
        if abs(a.sum() - 1.0) > SUM_TOL * max(1.0, np.abs(a).sum()):
            raise ValueError(f"weights sum to {a.sum():.17g}, not 1")
        a.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "weights", a)

    @classmethod
    def uniform(cls, vertices) -> QuadratureRule:
        v = tuple(int(x) for x in vertices)
        return cls(v, np.full(len(v), 1.0 / len(v)))

    @property
    def k(self) -> int:
        return len(self.vertices)

    def measure(self, n: int) -> np.ndarray:
        """The vector ``sum_w a_w delta_w`` of length n."""
        if max(self.vertices) >= n:
            raise ValueError(f"rule uses vertex {max(self.vertices)} but n={n}")
        out = np.zeros(n)
        out[list(self.vertices)] = self.weights
        return out

    def residual(self, n: int) -> np.ndarray:
        """``1/n - sum_w a_w delta_w``; pairing it with f gives the error."""
        return np.full(n, 1.0 / n) - self.measure(n)


@dataclass(frozen=True)
class QPResult:
    weights: np.ndarray
    iterations: int
    kkt_residual: float
    converged: bool
    objective: float


@dataclass(frozen=True)
class SpectralResult:
    weights: np.ndarray
    objective: float
    vertices: tuple[int, ...]
    dim: int
    iterations: int
    kkt_residual: float
    converged: bool

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.vertices, self.weights)


def project_to_simplex(y) -> np.ndarray:
    """Euclidean projection onto ``{a : a >= 0, sum(a) = 1}`` (sort and threshold)."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("cannot project an empty vector")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(y) + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def kkt_residual(M, a, nonneg: bool = True) -> float:
    """Violation of first-order optimality for ``min a^T M a`` on the constraint set.

    Without the sign constraint the gradient ``2 M a`` must be a multiple of
    the all-ones vector.  With it, the gradient must be constant on the
    support and no smaller than that constant off the support.
    """
    M = _as_matrix(M)
    a = np.asarray(a, dtype=float)
    g = 2.0 * (M @ a)
    if not nonneg:
        return float(np.max(np.abs(g - g.mean())))
    support = a > SUPPORT_TOL
    mu = g[support].min()
    on = np.abs(g[support] - mu)
    off = np.maximum(0.0, mu - g[~support])
    return float(max(on.max(initial=0.0), off.max(initial=0.0)))


def _as_matrix(M) -> np.ndarray:
    if isinstance(M, GramMatrix):
        return M.matrix
    return np.asarray(M, dtype=float)


def _spectral_norm_estimate(M: np.ndarray, iters: int = 200) -> float:
    v = np.random.default_rng(0).standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est, v = nw, w / nw
    return est


def _equality_solve(B: np.ndarray) -> np.ndarray:
    """Minimum-norm minimizer of ``||B a||`` subject to ``sum(a) == 1``.

    Writes ``a = 1/k + Z y`` with ``Z`` an orthonormal basis of the
    sum-zero subspace, so the least-norm ``y`` gives the least-norm ``a``.
    """
    k = B.shape[1]
    a0 = np.full(k, 1.0 / k)
    if k == 1:
        return a0
    Z = null_space(np.ones((1, k)))
    scale = np.linalg.norm(B, 2)
    if scale == 0.0:
        return a0
    # numerical rank is judged against ||B||, not against the restricted block
    cutoff = max(B.shape) * np.finfo(float).eps * scale
    u, sv, vt = np.linalg.svd(B @ Z, full_matrices=False)
    keep = sv > cutoff
    y = vt[keep].T @ ((u[:, keep].T @ -(B @ a0)) / sv[keep])
    return a0 + Z @ y


def _factor(M: np.ndarray) -> np.ndarray:
    """A matrix ``B`` with ``B^T B = M`` for symmetric PSD ``M``."""
    s, V = np.linalg.eigh(M)
    s[s <= M.shape[0] * np.finfo(float).eps * max(s.max(), 0.0)] = 0.0
    return np.sqrt(s)[:, None] * V.T


def _solve(M, B, nonneg, tol, max_iters) -> QPResult:
    k = M.shape[0]

    def objective(a):
        return float(np.sum((B @ a) ** 2))

    if not nonneg:
        a = _equality_solve(B)
        a = a + (1.0 - a.sum()) / k
        r = kkt_residual(M, a, nonneg=False)
        return QPResult(a, 0, r, r <= tol, objective(a))

    a = np.full(k, 1.0 / k)
    obj = objective(a)
    r = kkt_residual(M, a, nonneg=True)
    if r <= tol:
        return QPResult(a, 0, r, True, obj)
    lip = 1.01 * _spectral_norm_estimate(M)
    eta = 1.0 / (2.0 * lip) if lip > 0 else 1.0
    it = 0
    for it in range(1, max_iters + 1):
        a_new = project_to_simplex(a - eta * 2.0 * (M @ a))
        obj_new = objective(a_new)
        # an underestimated Lipschitz constant is the only way to go uphill
        while obj_new > obj * (1 + 1e-12) + 1e-18:
            eta *= 0.5
            a_new = project_to_simplex(a - eta * 2.0 * (M @ a))
            obj_new = objective(a_new)
        assert obj_new <= obj * (1 + 1e-12) + 1e-18, "projected gradient went uphill"
        a, obj = a_new, obj_new
        if it % _CHECK_EVERY:
            continue
        r = kkt_residual(M, a, nonneg=True)
        if r <= tol:
            return QPResult(a, it, r, True, obj)
        if it % _REFINE_EVERY == 0:
            refined = _active_set(M, B, a, objective, tol)
            if refined is not None and objective(refined) <= obj * (1 + 1e-12) + 1e-18:
                a, obj = refined, objective(refined)
                r = kkt_residual(M, a, nonneg=True)
                if r <= tol:
                    return QPResult(a, it, r, True, obj)
    r = kkt_residual(M, a, nonneg=True)
    return QPResult(a, it, r, r <= tol, obj)


_CHECK_EVERY = 10
_REFINE_EVERY = 50


def _active_set(M, B, a, objective, tol, max_steps=None):
    """Primal active-set refinement on the simplex, started from feasible ``a``.

    Alternates exact solves on the current support with ratio-test steps
    back into the feasible set, adding the coordinate with the most
    negative reduced gradient once the support is optimal.  The objective
    never increases.  Returns None if the step budget runs out.
    """
    k = len(a)
    max_steps = 4 * k + 20 if max_steps is None else max_steps
    a = a.copy()
    support = a > SUPPORT_TOL
    a[~support] = 0.0
    a /= a.sum()
    for _ in range(max_steps):
        idx = np.flatnonzero(support)
        sub = _equality_solve(B[:, idx])
        step = sub - a[idx]
        neg = step < 0
        if np.all(sub >= -1e-14):
            a[:] = 0.0
            a[idx] = np.clip(sub, 0.0, None)
            a /= a.sum()
            g = 2.0 * (M @ a)
            mu = g[idx].mean()
            off = np.flatnonzero(~support)
            if off.size == 0:
                return a
            j = off[np.argmin(g[off])]
            if g[j] >= mu - tol:
                return a
            support[j] = True
            continue
        ratios = a[idx][neg] / -step[neg]
        t = min(1.0, float(ratios.min()))
        a[idx] = a[idx] + t * step
        blocking = idx[neg][ratios <= t]
        a[blocking] = 0.0
        a[a < 0] = 0.0
        a /= a.sum()
        support = a > SUPPORT_TOL
        if not support.any():
            return None
    return None


def optimize_weights_qp(
    M, nonneg: bool = True, tol: float = 1e-9, max_iters: int = 100_000
) -> QPResult:
    """Minimize ``a^T M a`` over weights summing to one.

    ``M`` is a :class:`GramMatrix` or a symmetric PSD array.  Weights are
    returned in the row order of ``M`` (ascending vertex id for a Gram
    matrix).  ``converged`` is False when ``max_iters`` ran out before the
    KKT residual dropped below ``tol``; the best iterate is still returned.
    """
    M = _as_matrix(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
        raise ValueError("matrix is not symmetric")
    M = 0.5 * (M + M.T)
    lo = np.linalg.eigvalsh(M)[0]
    if lo < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
    return _solve(M, _factor(M), nonneg, tol, max_iters)


def spectral_residual_matrix(s: Spectrum, W, lam: float) -> np.ndarray:
    """Matrix ``R`` with ``R @ a`` = X_lambda coefficients of ``1/n - sum a_w delta_w``.

    Valid whenever ``sum(a) == 1``: column ``w`` holds the coefficients of
    ``1/n - delta_w``.
    """
    space = x_lambda_space(s, lam)
    basis = space.basis
    n = s.n
    target = basis.T @ np.full(n, 1.0 / n)
    return target[:, None] - basis[np.asarray(W, dtype=int), :].T


def optimize_weights_spectral(
    s: Spectrum,
    W,
    lam: float,
    nonneg: bool = True,
    tol: float = 1e-9,
    max_iters: int = 100_000,
) -> SpectralResult:
    """Weights minimizing ``|| 1/n - sum_w a_w delta_w ||_{X_lambda}``.

    The returned ``objective`` is that norm (not its square), evaluated
    directly from the residual coefficients.  Vertices are sorted ascending
    and the weights follow that order.
    """
    w = np.sort(np.asarray(W, dtype=int).ravel())
    if len(np.unique(w)) != len(w) or w.size == 0:
        raise ValueError("vertex set must be nonempty and distinct")
    if w.min() < 0 or w.max() >= s.n:
        raise ValueError(f"vertex id out of range for n={s.n}")
    R = spectral_residual_matrix(s, w, lam)
    lead = s.vectors[:, 0]
    if np.allclose(lead, 1.0 / np.sqrt(s.n), atol=1e-10):
        # the constant eigenvector contributes nothing once sum(a) == 1
        assert np.max(np.abs(R[0])) <= 1e-10, "constant mode not cancelled"
        R[0] = 0.0
    M = R.T @ R
    res = _solve(M, R, nonneg, tol, max_iters)
    a = res.weights
    obj = float(np.linalg.norm(R @ a))
    return SpectralResult(
        a, obj, tuple(int(v) for v in w), R.shape[0], res.iterations, res.kkt_residual,
        res.converged,
    )
