"""
Schur — The reduced operator 𝓛 = L_S − L_S^R L_R^{-1} L_R^S and its clustered inversion.

𝓛 is split into its cluster-diagonal part 𝓓 (dense LU per cluster) and
the off-cluster remainder 𝓣; 𝓛^{-1} = (I + 𝓓^{-1}𝓣)^{-1}𝓓^{-1} is then
summed as a Neumann series.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Mapping, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from pyda_models.models import SolverReport
from src.core.errors import LinearSolverError, SingularClusterError
from src.divisors.partition import Cluster, SitePartition
from src.solver.block_matrix import BlockMatrix
from src.solver.regular import invert_regular, neumann_series
from src.spectral.lattice import EigenIndex

logger = logging.getLogger(__name__)

SCHUR_ADJOINT_TOL = 1e-10


def split_blocks(
    D: Mapping[EigenIndex, float], T: BlockMatrix, partition: SitePartition
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Dense pieces (d_R, d_S, T_RR, T_RS, T_SR, T_SS, dofs_R, dofs_S) of D + εT."""
    layout = T.rows
    dofs_R = layout.dofs(partition.regular)
    dofs_S = layout.dofs(partition.singular)
    d = layout.diagonal(D)
    dense = T.to_dense()
    return (
        d[dofs_R], d[dofs_S],
        dense[np.ix_(dofs_R, dofs_R)], dense[np.ix_(dofs_R, dofs_S)],
        dense[np.ix_(dofs_S, dofs_R)], dense[np.ix_(dofs_S, dofs_S)],
        dofs_R, dofs_S,
    )


def schur_complement(
    D: Mapping[EigenIndex, float],
    T: BlockMatrix,
    epsilon: float,
    partition: SitePartition,
    tol: float = 1e-12,
    max_terms: int = 200,
    window: int = 3,
    threads: int = 1,
) -> BlockMatrix:
    """
    𝓛 on the singular sites, column block by column block.

    Each column block of L_R^{-1}L_R^S comes from the regular Neumann
    solve; NeumannDivergedError propagates.
    """
    S = partition.singular
    if not S:
        return BlockMatrix((), {}, self_adjoint=True)
    d_R, d_S, T_RR, T_RS, T_SR, T_SS, _, _ = split_blocks(D, T, partition)
    L_RS = epsilon * T_RS
    L_SR = epsilon * T_SR

    if L_RS.shape[0] == 0 or not np.any(L_RS):
        X = np.zeros(L_RS.shape, dtype=complex)
    else:
        columns = np.array_split(np.arange(L_RS.shape[1]), max(1, min(threads, L_RS.shape[1])))

        def solve_columns(cols: np.ndarray) -> np.ndarray:
            return invert_regular(d_R, T_RR, epsilon, L_RS[:, cols], tol, max_terms, window)[0]

        if threads > 1 and len(columns) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                X = np.concatenate(list(pool.map(solve_columns, columns)), axis=1)
        else:
            X = np.concatenate([solve_columns(c) for c in columns], axis=1)

    schur = np.diag(d_S).astype(complex) + epsilon * T_SS - L_SR @ X
    defect = float(np.max(np.abs(schur - schur.conj().T))) if schur.size else 0.0
    scale = max(1.0, float(np.max(np.abs(schur))))
    if T.self_adjoint and defect > SCHUR_ADJOINT_TOL * scale:
        raise LinearSolverError(f"Schur complement lost self-adjointness: defect {defect:.3e}")
    if T.self_adjoint:
        schur = 0.5 * (schur + schur.conj().T)
    return BlockMatrix.from_dense(S, schur, self_adjoint=T.self_adjoint)


def invert_schur(
    L: BlockMatrix,
    clusters: Sequence[Cluster],
    rhs_S: np.ndarray,
    tol: float = 1e-12,
    max_terms: int = 200,
    window: int = 3,
):
    """
    Solve 𝓛u_S = rhs_S with dense cluster blocks and an off-cluster Neumann series.

    Raises:
        SingularClusterError: a cluster block has condition number above 1/tol.
        NeumannDivergedError: the off-cluster series stopped contracting.
    """
    layout = L.rows
    dense = L.to_dense()
    covered = sum(len(cl) for cl in clusters)
    if covered != len(layout):
        raise LinearSolverError(f"clusters cover {covered} of {len(layout)} singular sites")

    factors: List[Tuple[np.ndarray, tuple]] = []
    diag_part = np.zeros_like(dense)
    worst_cond = 0.0
    for k, cl in enumerate(clusters):
        dofs = layout.dofs(cl.members)
        block = dense[np.ix_(dofs, dofs)]
        cond = float(np.linalg.cond(block))
        worst_cond = max(worst_cond, cond)
        if not np.isfinite(cond) or cond > 1.0 / tol:
            raise SingularClusterError(k, cond)
        factors.append((dofs, sla.lu_factor(block)))
        diag_part[np.ix_(dofs, dofs)] = block
    off = dense - diag_part

    def precond_inverse(v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=complex)
        for dofs, lu in factors:
            out[dofs] = sla.lu_solve(lu, v[dofs])
        return out

    def coupling(v: np.ndarray) -> np.ndarray:
        return off @ v

    rhs = np.asarray(rhs_S, dtype=complex)
    if not np.any(off):
        value, terms, contraction, residual = precond_inverse(rhs), 0, 0.0, 0.0
    else:
        result = neumann_series(precond_inverse, coupling, rhs, tol, max_terms, window)
        value, terms, contraction, residual = result.value, result.terms, result.contraction, result.residual

    logger.debug("Schur inversion: %d clusters, %d off-cluster terms, cond<=%.3g", len(clusters), terms, worst_cond)
    report = SolverReport(
        neumann_terms_used=terms,
        contraction_estimate=contraction,
        schur_dim=layout.size,
        n_clusters=len(clusters),
        residual_norm=residual,
        condition_estimate=worst_cond,
    )
    return value, report

