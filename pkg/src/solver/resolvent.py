"""
Resolvent — Solve (D + εT)u = rhs through the regular/singular block factorisation.

    u_S = 𝓛^{-1}(rhs_S − L_S^R L_R^{-1} rhs_R)
    u_R = L_R^{-1}(rhs_R − L_R^S u_S)

The final residual is recomputed and checked; Neumann divergence or a
failed check falls back to the dense oracle when configured. A singular
cluster means the parameter a must be excluded and always propagates.
"""

import logging
from typing import Mapping, Optional, Tuple

import numpy as np

from pyda_models.models import SolverConfig, SolverPath, SolverReport
from src.core.errors import NeumannDivergedError, ResidualCheckError
from src.divisors.partition import SitePartition
from src.solver.assemble import LinearizedOperator
from src.solver.block_matrix import BlockMatrix
from src.solver.dense import dense_solve
from src.solver.regular import invert_regular
from src.solver.schur import invert_schur, schur_complement, split_blocks
from src.spectral.lattice import EigenIndex, SpectralField, enforce_reality

logger = logging.getLogger(__name__)


def _residual(D: Mapping[EigenIndex, float], T: BlockMatrix, epsilon: float, u: np.ndarray, rhs: np.ndarray) -> float:
    applied = T.rows.diagonal(D) * u + epsilon * T.matvec(u)
    return float(np.linalg.norm(applied - rhs))


def _resolvent(
    D: Mapping[EigenIndex, float],
    T: BlockMatrix,
    epsilon: float,
    partition: SitePartition,
    rhs: np.ndarray,
    cfg: SolverConfig,
    threads: int,
) -> Tuple[np.ndarray, SolverReport]:
    d_R, _, T_RR, T_RS, T_SR, _, dofs_R, dofs_S = split_blocks(D, T, partition)
    rhs_R, rhs_S = rhs[dofs_R], rhs[dofs_S]
    u = np.zeros(T.rows.size, dtype=complex)
    args = (cfg.tol, cfg.neumann_max_terms, cfg.divergence_window)

    if dofs_S.size == 0:
        u_R, report = invert_regular(d_R, T_RR, epsilon, rhs_R, *args)
        u[dofs_R] = u_R
        return u, report

    schur = schur_complement(D, T, epsilon, partition, *args, threads=threads)
    y_R, first = invert_regular(d_R, T_RR, epsilon, rhs_R, *args)
    u_S, schur_report = invert_schur(schur, partition.clusters, rhs_S - epsilon * (T_SR @ y_R), *args)
    u_R, second = invert_regular(d_R, T_RR, epsilon, rhs_R - epsilon * (T_RS @ u_S), *args)
    u[dofs_R] = u_R
    u[dofs_S] = u_S
    report = SolverReport(
        neumann_terms_used=first.neumann_terms_used + second.neumann_terms_used + schur_report.neumann_terms_used,
        contraction_estimate=max(first.contraction_estimate, second.contraction_estimate,
                                 schur_report.contraction_estimate),
        schur_dim=schur_report.schur_dim,
        n_clusters=schur_report.n_clusters,
        condition_estimate=schur_report.condition_estimate,
    )
    return u, report


def solve(
    D: Mapping[EigenIndex, float],
    T: BlockMatrix,
    epsilon: float,
    partition: SitePartition,
    rhs: np.ndarray,
    cfg: Optional[SolverConfig] = None,
    threads: int = 1,
) -> Tuple[np.ndarray, SolverReport]:
    """
    Invert L^(N) = D + εT on the layout of T.

    Args:
        D: Divisor per eigenspace.
        T: Coupling block matrix (carries −∂_u f).
        epsilon: ε.
        partition: Regular/singular split with clusters of S.
        rhs: Right-hand side over ``T.rows``.
        cfg: Solver tolerances and fallback policy.

    Returns:
        ``(u, SolverReport)``; ``report.residual_norm`` is ‖(D + εT)u − rhs‖₀.
    """
    cfg = cfg or SolverConfig()
    rhs = np.asarray(rhs, dtype=complex)
    bound = cfg.residual_factor * cfg.tol * float(np.linalg.norm(rhs))
    try:
        u, report = _resolvent(D, T, epsilon, partition, rhs, cfg, threads)
        residual = _residual(D, T, epsilon, u, rhs)
        if residual > bound:
            raise ResidualCheckError(residual, bound)
        return u, report.model_copy(update={"residual_norm": residual, "path": SolverPath.RESOLVENT})
    except (NeumannDivergedError, ResidualCheckError) as exc:
        if not cfg.dense_fallback:
            raise
        logger.warning("resolvent solve failed (%s); falling back to dense factorisation", exc)
        contraction = getattr(exc, "contraction", 0.0)

    u, condition = dense_solve(D, T, epsilon, rhs, cfg.dense_cap, cfg.tol)
    residual = _residual(D, T, epsilon, u, rhs)
    report = SolverReport(
        contraction_estimate=contraction,
        schur_dim=len(partition.singular),
        n_clusters=len(partition.clusters),
        residual_norm=residual,
        condition_estimate=condition,
        path=SolverPath.DENSE_FALLBACK,
    )
    return u, report


def solve_field(
    op: LinearizedOperator,
    partition: SitePartition,
    rhs: SpectralField,
    cfg: Optional[SolverConfig] = None,
    threads: int = 1,
) -> Tuple[SpectralField, SolverReport]:
    """``solve`` for spectral fields supported in the operator's index set."""
    vec = rhs.to_vector(op.layout)
    u, report = solve(op.D, op.T, op.epsilon, partition, vec, cfg, threads)
    field = SpectralField.from_vector(rhs.basis, op.layout, u)
    return (enforce_reality(field) if rhs.declared_real else field), report


def relative_error(u: np.ndarray, reference: np.ndarray) -> float:
    scale = float(np.linalg.norm(reference))
    diff = float(np.linalg.norm(u - reference))
    return diff / scale if scale > 0 else diff

