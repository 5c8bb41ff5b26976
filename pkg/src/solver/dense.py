"""Dense oracle: materialize D + εT and solve by pivoted LU."""

import logging
import warnings
from typing import Mapping, Tuple

import numpy as np
from scipy import linalg as sla

from src.core.errors import DimensionCapError, ParameterExcludedError
from src.solver.block_matrix import BlockMatrix
from src.spectral.lattice import EigenIndex

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 4096


def dense_operator(D: Mapping[EigenIndex, float], T: BlockMatrix, epsilon: float) -> np.ndarray:
    return np.diag(T.rows.diagonal(D)).astype(complex) + epsilon * T.to_dense()


def dense_solve(
    D: Mapping[EigenIndex, float],
    T: BlockMatrix,
    epsilon: float,
    rhs: np.ndarray,
    cap: int = DEFAULT_DENSE_CAP,
    tol: float = 1e-12,
) -> Tuple[np.ndarray, float]:
    """
    Solve (D + εT)u = rhs directly.

    Returns:
        ``(u, condition)`` with the 1-norm condition number of the operator.

    Raises:
        DimensionCapError: more than ``cap`` unknowns.
        ParameterExcludedError: condition number above 1/tol.
    """
    size = T.rows.size
    if size > cap:
        raise DimensionCapError(f"dense solve refused: {size} unknowns exceed the cap of {cap}")
    if size == 0:
        return np.zeros(0, dtype=complex), 1.0
    A = dense_operator(D, T, epsilon)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(A)
        pivots = np.abs(np.diag(lu[0]))
        if np.min(pivots) == 0.0:
            raise ParameterExcludedError(float("inf"))
        inverse = sla.lu_solve(lu, np.eye(size, dtype=complex))
    condition = float(np.linalg.norm(A, 1) * np.linalg.norm(inverse, 1))
    if not np.isfinite(condition) or condition > 1.0 / tol:
        raise ParameterExcludedError(condition)
    u = sla.lu_solve(lu, np.asarray(rhs, dtype=complex))
    logger.debug("dense solve: %d unknowns, condition %.3g", size, condition)
    return u, condition
