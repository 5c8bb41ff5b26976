"""
Measure — Parameter-exclusion scans over an interval of coefficients a.

Both scans share one deterministic jittered grid a_k = lo + (k + U_k)h,
so the exclusion sets are nested in γ and the fitted slope is
reproducible under a seed. Work is split in contiguous chunks over a
thread pool and reassembled in grid order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla
from scipy import stats

from pyda_models.models import MeasureRow
from src.divisors.melnikov import spectrum_table, weighted_min_divisor
from src.solver.assemble import assemble_linearized
from src.spectral.lattice import BasisDescriptor, SpectralField

logger = logging.getLogger(__name__)

MIN_GRID = 100


@dataclass
class MeasureScanResult:
    """Rejected fraction per γ plus the linear fit of fraction against γ."""
    rows: List[MeasureRow]
    a_values: np.ndarray
    margins: np.ndarray
    slope: float
    intercept: float
    r_squared: float

    def rejected_mask(self, gamma: float) -> np.ndarray:
        return self.margins < gamma


def jittered_grid(a_interval: Tuple[float, float], grid_count: int, seed: int) -> np.ndarray:
    """One point per cell of width h, uniformly placed inside its cell."""
    if grid_count < MIN_GRID:
        raise ValueError(f"grid_count must be >= {MIN_GRID}, got {grid_count}")
    lo, hi = a_interval
    h = (hi - lo) / grid_count
    rng = np.random.default_rng(seed)
    return lo + (np.arange(grid_count) + rng.random(grid_count)) * h


def _chunked(fn: Callable[[np.ndarray], np.ndarray], a_values: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1 or a_values.size < 2 * threads:
        return fn(a_values)
    chunks = np.array_split(a_values, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts)


def linear_fit(gammas: Sequence[float], fractions: Sequence[float]) -> Tuple[float, float, float]:
    """(slope, intercept, R²); a constant series has R² = 1 only when it is exactly fitted."""
    x = np.asarray(gammas, dtype=float)
    y = np.asarray(fractions, dtype=float)
    if np.ptp(y) == 0.0:
        return 0.0, float(y[0]), 1.0 if len(y) > 1 else 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def _tabulate(
    margins: np.ndarray, gammas: Sequence[float], N: int, epsilon: float, rho: int
) -> Tuple[List[MeasureRow], float, float, float]:
    rows = []
    for g in sorted(gammas):
        frac = float(np.mean(margins < g))
        rows.append(MeasureRow(gamma=g, rejected_fraction=frac, N=N, epsilon=epsilon, rho=rho))
    slope, intercept, r2 = linear_fit([r.gamma for r in rows], [r.rejected_fraction for r in rows])
    return rows, slope, intercept, r2


def measure_scan(
    a_interval: Tuple[float, float],
    grid_count: int,
    epsilon: float,
    rho: int,
    N: int,
    gammas: Sequence[float],
    tau: float,
    seed: int,
    basis: Optional[BasisDescriptor] = None,
    threads: int = 1,
) -> MeasureScanResult:
    """
    Fraction of grid points failing the Melnikov condition, per γ.

    A point fails at γ iff min_j |D_j|·max(1, shift)^τ < γ; the margin is
    computed once per point and thresholded for every γ.
    """
    basis = basis or BasisDescriptor.torus(1)
    a_values = jittered_grid(a_interval, grid_count, seed)
    margins = _chunked(lambda chunk: weighted_min_divisor(chunk, epsilon, rho, N, tau, basis), a_values, threads)
    rows, slope, intercept, r2 = _tabulate(margins, gammas, N, epsilon, rho)
    logger.info("measure scan: %d points, slope=%.4g, R^2=%.4f", grid_count, slope, r2)
    return MeasureScanResult(rows, a_values, margins, slope, intercept, r2)


# ── Operator (good-parameter) exclusion ──────────────────

def _diagonal_margins(a_values: np.ndarray, epsilon: float, rho: int, N: int, kappa: float,
                      basis: BasisDescriptor) -> np.ndarray:
    lam, shift, _ = spectrum_table(basis, N, 0.0)
    order = np.argsort(shift, kind="stable")
    lam, shift = lam[order], shift[order]
    d = np.abs((lam + 1.0)[None, :] - epsilon * a_values[:, None] * (lam ** rho)[None, :])
    running = np.minimum.accumulate(d, axis=1)
    out = np.full(a_values.shape, np.inf)
    for r in range(1, N + 1):
        k = int(np.searchsorted(shift, r, side="right")) - 1
        out = np.minimum(out, 4.0 * r ** kappa * running[:, k])
    return out


def operator_exclusion_scan(
    a_interval: Tuple[float, float],
    grid_count: int,
    epsilon: float,
    rho: int,
    N: int,
    gamma1s: Sequence[float],
    kappa: float,
    seed: int,
    problem_factory: Optional[Callable[[float], object]] = None,
    background: Optional[SpectralField] = None,
    basis: Optional[BasisDescriptor] = None,
    threads: int = 1,
) -> MeasureScanResult:
    """
    Fraction of grid points where ‖(L_a^(r))^{-1}‖₀ > 4r^κ/γ1 for some 1 ≤ r ≤ N.

    Without ``problem_factory`` the operator is the diagonal D and the
    smallest singular value is min |D_j| over J_r^+. Otherwise
    ``problem_factory(a)`` returns the problem at coefficient a, its
    operator is linearized at ``background`` (zero by default) and dense
    singular values are used.
    """
    basis = basis or BasisDescriptor.torus(1)
    a_values = jittered_grid(a_interval, grid_count, seed)

    if problem_factory is None:
        margins = _chunked(lambda chunk: _diagonal_margins(chunk, epsilon, rho, N, kappa, basis), a_values, threads)
    else:
        background = background if background is not None else SpectralField.zeros(basis)

        def one(a: float) -> float:
            problem = problem_factory(a)
            best = np.inf
            for r in range(1, N + 1):
                op = assemble_linearized(problem, background, r)
                smin = float(sla.svdvals(op.to_dense()).min())
                best = min(best, 4.0 * r ** kappa * smin)
            return best

        def chunk_fn(chunk: np.ndarray) -> np.ndarray:
            return np.array([one(float(a)) for a in chunk])

        margins = _chunked(chunk_fn, a_values, threads)

    rows, slope, intercept, r2 = _tabulate(margins, gamma1s, N, epsilon, rho)
    logger.info("operator exclusion scan: %d points, slope=%.4g, R^2=%.4f", grid_count, slope, r2)
    return MeasureScanResult(rows, a_values, margins, slope, intercept, r2)
