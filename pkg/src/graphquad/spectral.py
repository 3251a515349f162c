"""Eigenpairs of the diffusion operator and the band-limited spaces X_lambda.

``X_lambda`` is the span of the eigenvectors of ``P`` whose eigenvalue has
magnitude at least ``lambda``.  Eigenpairs are kept sorted by ``|lambda|``
descending; ties are broken by signed value descending (so +1 precedes -1
on bipartite graphs) and then by solver order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import DiffusionOperator, is_connected

__all__ = [
    "DENSE_CAP",
    "ConvergenceError",
    "Spectrum",
    "XLambdaSpace",
    "eigendecompose",
    "top_k_eigenpairs",
    "x_lambda_space",
    "x_lambda_project",
    "x_lambda_norm",
]

DENSE_CAP = 4096

# magnitudes closer than this are treated as tied when ordering
_TIE_DECIMALS = 12


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of ``P`` in ``|lambda|``-descending order.

    ``vectors[:, i]`` is the unit eigenvector for ``values[i]``.  A partial
    spectrum (``complete=False``) holds only the leading pairs.
    """

    values: np.ndarray
    vectors: np.ndarray
    complete: bool

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return len(self.values)

    def coefficients(self, f) -> np.ndarray:
        """Inner products ``<f, phi_k>`` for every stored eigenvector."""
        return self.vectors.T @ np.asarray(f, dtype=float)


def _order(values: np.ndarray) -> np.ndarray:
    mag = np.round(np.abs(values), _TIE_DECIMALS)
    idx = np.arange(len(values))
    return np.lexsort((idx, -values, -mag))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each eigenvector made positive (first on ties)
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _sorted_spectrum(values, vectors, complete: bool) -> Spectrum:
    order = _order(values)
    values = np.ascontiguousarray(values[order])
    vectors = _fix_signs(np.ascontiguousarray(vectors[:, order]))
    values.setflags(write=False)
    vectors.setflags(write=False)
    return Spectrum(values, vectors, complete)


def _warn_if_disconnected(d: DiffusionOperator) -> None:
    if not is_connected(d.graph):
        warnings.warn(
            "graph is disconnected: eigenvalue 1 is repeated and the leading "
            "eigenvector is not the normalized constant",
            RuntimeWarning,
            stacklevel=3,
        )


def eigendecompose(d: DiffusionOperator, cap: int = DENSE_CAP) -> Spectrum:
    """Full spectrum of ``P`` by dense symmetric eigendecomposition.

    LAPACK's symmetric driver (tridiagonal reduction followed by an implicit
    QR-type iteration) does the work.  Raises ``ValueError`` above ``cap``
    vertices; use :func:`top_k_eigenpairs` for larger graphs.
    """
    if d.n > cap:
        raise ValueError(
            f"graph has {d.n} vertices, above the dense cap {cap}; "
            "use top_k_eigenpairs for the leading eigenpairs"
        )
    _warn_if_disconnected(d)
    values, vectors = np.linalg.eigh(d.dense())
    return _sorted_spectrum(values, vectors, complete=True)


def top_k_eigenpairs(
    d: DiffusionOperator,
    k: int,
    tol: float = 1e-10,
    max_iters: int = 20_000,
    seed: int = 0,
    oversample: int | None = None,
) -> Spectrum:
    """Leading ``k`` eigenpairs (largest ``|lambda|``) by block orthogonal iteration.

    The block carries ``oversample`` extra columns (default ``max(k, 8)``,
    capped at n) and is Rayleigh-Ritz refined every sweep.  Converged when
    every returned pair satisfies ``||P phi - lambda phi|| <= tol``.
    """
    n = d.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    _warn_if_disconnected(d)
    extra = max(k, 8) if oversample is None else int(oversample)
    p = min(n, k + extra)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    worst = np.inf
    for _ in range(max_iters):
        z = d.apply(q)
        h = q.T @ z
        theta, y = np.linalg.eigh(0.5 * (h + h.T))
        order = _order(theta)
        theta, y = theta[order], y[:, order]
        x = q @ y
        pz = z @ y
        res = np.linalg.norm(pz[:, :k] - x[:, :k] * theta[:k], axis=0)
        worst = float(res.max())
        if worst <= tol:
            return _sorted_spectrum(theta[:k], x[:, :k], complete=(k == n))
        q, _ = np.linalg.qr(pz)
    raise ConvergenceError(
        f"block iteration did not converge in {max_iters} sweeps "
        f"(worst residual {worst:.3e} > {tol:.1e})",
        residual=worst,
    )


@dataclass(frozen=True, eq=False)
class XLambdaSpace:
    """Index set ``K = {k : |lambda_k| >= threshold}`` over a spectrum."""

    spectrum: Spectrum
    threshold: float
    indices: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def basis(self) -> np.ndarray:
        return self.spectrum.vectors[:, self.indices]


def x_lambda_space(s: Spectrum, lam: float) -> XLambdaSpace:
    if not 0 < lam <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {lam}")
    mags = np.abs(s.values)
    count = int(np.count_nonzero(mags >= lam))
    # sorted by magnitude, so the retained set is a prefix
    if not s.complete and count == len(s):
        raise ValueError(
            f"partial spectrum with {len(s)} pairs does not resolve X_lambda "
            f"at threshold {lam}; compute more eigenpairs"
        )
    return XLambdaSpace(s, float(lam), np.arange(count))


def x_lambda_project(s: Spectrum, f, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projection of ``f`` onto ``X_lambda`` and its coefficients."""
    space = x_lambda_space(s, lam)
    coeffs = space.basis.T @ np.asarray(f, dtype=float)
    return space.basis @ coeffs, coeffs


def x_lambda_norm(s: Spectrum, f, lam: float) -> float:
    """The ``X_lambda`` semi-norm: l2 norm of the retained coefficients."""
    space = x_lambda_space(s, lam)
    return float(np.linalg.norm(space.basis.T @ np.asarray(f, dtype=float)))
