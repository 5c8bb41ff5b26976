"""
Melnikov — First-order nonresonance of the small divisors D_j.

The condition is |D_j| ≥ γ/max(1, |j+ρ⃗|)^τ on J_N^+. A failure is a
value (the worst index and its margin), not an exception.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.solver.assemble import divisor
from src.spectral.lattice import BasisDescriptor, EigenIndex, build_index_set

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MelnikovResult:
    """``ratio`` = min_j |D_j|·max(1, shift)^τ/γ; pass iff ratio ≥ 1."""
    passed: bool
    worst_index: Optional[EigenIndex]
    ratio: float
    divisor: float


def melnikov_weight(idx: EigenIndex, tau: float) -> float:
    return max(1.0, idx.shift_norm) ** tau


def melnikov_check(
    a: float,
    epsilon: float,
    rho: int,
    N: float,
    gamma: float,
    tau: float,
    basis: Optional[BasisDescriptor] = None,
) -> MelnikovResult:
    """Enumerate every D_j on J_N^+ and report the tightest one."""
    basis = basis or BasisDescriptor.torus(1)
    worst: Optional[EigenIndex] = None
    worst_ratio = float("inf")
    worst_d = 0.0
    for idx in build_index_set(basis, N):
        d = divisor(idx, a, epsilon, rho)
        ratio = abs(d) * melnikov_weight(idx, tau) / gamma
        if ratio < worst_ratio:
            worst, worst_ratio, worst_d = idx, ratio, d
    result = MelnikovResult(worst_ratio >= 1.0, worst, worst_ratio, worst_d)
    if not result.passed:
        logger.debug("Melnikov fails at %s: D=%.3e, ratio=%.3e", worst, worst_d, worst_ratio)
    return result


def spectrum_table(basis: BasisDescriptor, N: float, tau: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Distinct eigenvalues on J_N^+ with their shift norms and Melnikov weights.

    D_j depends on j only through λ_j, and the shift norm is a function of
    λ_j on both bases, so the distinct eigenvalues suffice for scans.
    Sorted by eigenvalue.
    """
    seen = {}
    for idx in build_index_set(basis, N):
        seen.setdefault(idx.eigenvalue, idx)
    lam = np.array(sorted(seen), dtype=float)
    shift = np.array([seen[k].shift_norm for k in sorted(seen)])
    weight = np.maximum(1.0, shift) ** tau
    return lam, shift, weight


def weighted_min_divisor(
    a_values: np.ndarray,
    epsilon: float,
    rho: int,
    N: float,
    tau: float,
    basis: Optional[BasisDescriptor] = None,
) -> np.ndarray:
    """min_j |D_j(a)|·max(1, shift)^τ for each a; a point fails at γ iff the value is < γ."""
    basis = basis or BasisDescriptor.torus(1)
    lam, _, weight = spectrum_table(basis, N, tau)
    a = np.asarray(a_values, dtype=float)[:, None]
    d = (lam + 1.0)[None, :] - epsilon * a * (lam ** rho)[None, :]
    return np.min(np.abs(d) * weight[None, :], axis=1)
