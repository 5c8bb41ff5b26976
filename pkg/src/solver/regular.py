"""
Regular — Neumann-series inversion on the regular sites.

On R every |D_j| ≥ ς, so L_R = D_R(I + εD_R^{-1}T_R) is inverted by the
series Σ(−εD_R^{-1}T_R)^m D_R^{-1}. The generic ``neumann_series`` is
shared with the cluster stage of the Schur solve.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from pyda_models.models import SolverReport
from src.core.errors import NeumannDivergedError
from src.solver.block_matrix import BlockMatrix

logger = logging.getLogger(__name__)

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeriesResult:
    value: np.ndarray
    terms: int
    contraction: float
    residual: float


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def neumann_series(
    precond_inverse: Operator,
    coupling: Operator,
    rhs: np.ndarray,
    tol: float,
    max_terms: int = 200,
    window: int = 3,
) -> SeriesResult:
    """
    Solve (P + C)x = rhs by x = Σ_m (−P^{-1}C)^m P^{-1} rhs.

    After each partial sum S the residual (P + C)S − rhs equals C applied
    to the last term, so the stopping test ‖C t_m‖ ≤ tol·‖rhs‖ is the true
    residual at no extra cost. Works column-wise for matrix right-hand
    sides (Frobenius norms).

    Raises:
        NeumannDivergedError: residuals grew ``window`` times in a row or
            the term cap was reached.
    """
    scale = _norm(rhs)
    term = precond_inverse(rhs)
    total = term.copy()
    terms = 1
    if scale == 0.0:
        return SeriesResult(total, terms, 0.0, 0.0)

    history = []
    growing = 0
    while True:
        pushed = coupling(term)
        residual = _norm(pushed)
        history.append(residual)
        if residual <= tol * scale:
            break
        contraction = history[-1] / history[-2] if len(history) > 1 and history[-2] > 0 else 0.0
        growing = growing + 1 if len(history) > 1 and history[-1] > history[-2] else 0
        if growing >= window:
            raise NeumannDivergedError(contraction, terms, f"{window} consecutive growing increments")
        if terms >= max_terms:
            raise NeumannDivergedError(contraction, terms, f"term cap {max_terms} reached")
        term = -precond_inverse(pushed)
        total = total + term
        terms += 1

    contraction = history[-1] / history[-2] if len(history) > 1 and history[-2] > 0 else 0.0
    return SeriesResult(total, terms, float(contraction), residual)


def invert_regular(
    D_R: np.ndarray,
    T_R: Union[np.ndarray, BlockMatrix],
    epsilon: float,
    rhs_R: np.ndarray,
    tol: float = 1e-12,
    max_terms: int = 200,
    window: int = 3,
):
    """
    Solve (D_R + εT_R)u = rhs_R by the preconditioned Neumann series.

    Args:
        D_R: Divisors repeated per dof (all |D_j| ≥ ς).
        T_R: Coupling restricted to R × R.
        epsilon: Coupling strength ε.
        rhs_R: Vector, or matrix whose columns are solved together.
        tol: Relative residual target.

    Returns:
        ``(u_R, SolverReport)``.
    """
    T = T_R.to_dense() if isinstance(T_R, BlockMatrix) else np.asarray(T_R)
    d = np.asarray(D_R, dtype=float)
    d_col = d if np.ndim(rhs_R) == 1 else d[:, None]

    def precond_inverse(v: np.ndarray) -> np.ndarray:
        return v / d_col

    def coupling(v: np.ndarray) -> np.ndarray:
        return epsilon * (T @ v)

    if epsilon == 0.0 or not np.any(T):
        result = SeriesResult(precond_inverse(np.asarray(rhs_R, dtype=complex)), 1, 0.0, 0.0)
    else:
        result = neumann_series(precond_inverse, coupling, np.asarray(rhs_R, dtype=complex), tol, max_terms, window)

    logger.debug("regular inversion: %d terms, contraction %.3g", result.terms, result.contraction)
    report = SolverReport(
        neumann_terms_used=result.terms,
        contraction_estimate=result.contraction,
        residual_norm=result.residual,
    )
    return result.value, report
