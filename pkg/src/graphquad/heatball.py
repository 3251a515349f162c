"""Heat-ball packing energy, Gram matrices of diffused Diracs, error bounds.

For a rule ``(W, a)`` with ``sum(a) == 1`` the packing energy is

    E_l(W, a) = || P^l sum_w a_w delta_w ||^2 - 1/n = a^T M a - 1/n,

with ``M[i, j] = <P^l delta_{w_i}, P^l delta_{w_j}>``.  Every ``f`` in
``X_lambda`` then satisfies

    |mean(f) - sum_w a_w f(w)| <= ||f||_{X_lambda} * lambda^(-l) * sqrt(E_l).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .graph import DiffusionOperator

__all__ = [
    "GRAM_MEMORY_CAP",
    "ELL_CAP",
    "GramMatrix",
    "diffused_diracs",
    "gram_matrix",
    "gram_matrix_two_sided",
    "energy",
    "theorem_bound",
    "best_ell",
    "BestEll",
]

GRAM_MEMORY_CAP = 2**26
ELL_CAP = 64
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GramMatrix:
    vertices: tuple[int, ...]
    ell: int
    matrix: np.ndarray
    n: int

    @property
    def k(self) -> int:
        return len(self.vertices)


def _check_vertices(n: int, W) -> np.ndarray:
    w = np.asarray(W, dtype=int).ravel()
    if w.size == 0:
        raise ValueError("vertex set is empty")
    if w.min() < 0 or w.max() >= n:
        raise ValueError(f"vertex id out of range for n={n}")
    if len(np.unique(w)) != len(w):
        raise ValueError("vertex set contains duplicates")
    return w


def diffused_diracs(d: DiffusionOperator, W, ell: int) -> np.ndarray:
    """The (n, k) block whose columns are ``P^ell delta_w``."""
    w = _check_vertices(d.n, W)
    if d.n * len(w) > GRAM_MEMORY_CAP:
        raise MemoryError(
            f"{d.n} x {len(w)} diffused columns exceed the cap of {GRAM_MEMORY_CAP} reals"
        )
    block = np.zeros((d.n, len(w)))
    block[w, np.arange(len(w))] = 1.0
    return d.apply_power(block, ell)


def gram_matrix(d: DiffusionOperator, W, ell: int) -> GramMatrix:
    """Gram matrix of the diffused Diracs, vertices sorted ascending."""
    w = np.sort(_check_vertices(d.n, W))
    cols = diffused_diracs(d, w, ell)
    m = cols.T @ cols
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return GramMatrix(tuple(int(v) for v in w), int(ell), m, d.n)


def gram_matrix_two_sided(d: DiffusionOperator, W, ell: int) -> np.ndarray:
    """Same matrix via ``M[i, j] = (P^(2 ell) delta_{w_j})(w_i)``."""
    w = np.sort(_check_vertices(d.n, W))
    cols = diffused_diracs(d, w, 2 * ell)
    return cols[w, :]


def energy(M: GramMatrix, a, n: int | None = None) -> float:
    """Packing energy ``a^T M a - 1/n``; weights must sum to one."""
    a = np.asarray(a, dtype=float)
    if a.shape != (M.k,):
        raise ValueError(f"expected {M.k} weights, got shape {a.shape}")
    if abs(a.sum() - 1.0) > WEIGHT_SUM_TOL * max(1.0, np.abs(a).sum()):
        raise ValueError(f"weights sum to {a.sum():.17g}, not 1")
    n = M.n if n is None else n
    return float(a @ M.matrix @ a - 1.0 / n)


def theorem_bound(energy_value: float, lam: float, ell: int, f_norm: float) -> float:
    """``f_norm * lam^(-ell) * sqrt(max(energy, 0))``.

    Roundoff can leave the energy slightly negative; it is clamped.  The
    product is formed in log space once ``lam^(-ell)`` would exceed 1e300,
    and saturates to ``inf`` if even the product is out of range.
    """
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if ell < 0:
        raise ValueError(f"ell must be nonnegative, got {ell}")
    if f_norm < 0:
        raise ValueError("f_norm must be nonnegative")
    if energy_value < -1e-12:
        raise ValueError(f"energy {energy_value} is negative beyond roundoff")
    e = max(energy_value, 0.0)
    if e == 0.0 or f_norm == 0.0:
        return 0.0
    log_amp = -ell * math.log(lam)
    if log_amp > math.log(1e300):
        log_b = math.log(f_norm) + log_amp + 0.5 * math.log(e)
        return math.exp(log_b) if log_b < math.log(sys.float_info.max) else math.inf
    return f_norm * lam ** (-ell) * math.sqrt(e)


@dataclass(frozen=True)
class BestEll:
    ell: int
    weights: np.ndarray
    bound: float
    bounds: tuple[float, ...]


def best_ell(
    d: DiffusionOperator,
    W,
    lam: float,
    ell_max: int = ELL_CAP,
    weight_mode: str = "optimized",
    nonneg: bool = True,
) -> BestEll:
    """Sweep ``ell = 1..ell_max`` and keep the smallest unit-norm bound.

    With ``weight_mode="optimized"`` the weights are re-fitted at every
    ``ell``; ``"uniform"`` keeps ``1/k``.  Ties go to the smallest ``ell``.
    """
    from .weights import optimize_weights_qp

    if ell_max < 1:
        raise ValueError("ell_max must be at least 1")
    if weight_mode not in ("uniform", "optimized"):
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    ell_max = min(int(ell_max), ELL_CAP)
    best = None
    bounds = []
    for ell in range(1, ell_max + 1):
        M = gram_matrix(d, W, ell)
        if weight_mode == "uniform":
            a = np.full(M.k, 1.0 / M.k)
        else:
            a = optimize_weights_qp(M, nonneg=nonneg).weights
        b = theorem_bound(energy(M, a), lam, ell, 1.0)
        bounds.append(b)
        if best is None or b < best[2]:
            best = (ell, a, b)
    return BestEll(best[0], best[1], best[2], tuple(bounds))
