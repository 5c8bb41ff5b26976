"""
Diagnostics — Measured constants of the linear theory.

Nothing here is enforced: the inverse-norm profile and the tame-bound
witness are logged and reported so experiments can see where the
smallness assumptions hold.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np
from scipy import linalg as sla

from pyda_models.models import SolverConfig
from src.divisors.partition import cluster_singular, partition_sites
from src.solver.assemble import assemble_linearized
from src.solver.resolvent import solve_field
from src.spectral.lattice import SpectralField

if TYPE_CHECKING:  # pragma: no cover
    from src.iteration.problem import ProblemSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InverseNormRow:
    r: float
    norm: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.norm <= self.bound


def inverse_norm_profile(
    problem: "ProblemSpec",
    u: SpectralField,
    scales: Sequence[float],
    kappa: float,
    gamma1: float,
) -> List[InverseNormRow]:
    """‖(L^(r))^{-1}‖₀ linearized at u against 4r^κ/γ1, per scale r."""
    rows = []
    for r in scales:
        op = assemble_linearized(problem, u, r)
        smin = float(sla.svdvals(op.to_dense()).min())
        norm = float("inf") if smin == 0.0 else 1.0 / smin
        row = InverseNormRow(float(r), norm, 4.0 * r ** kappa / gamma1)
        rows.append(row)
        if not row.ok:
            logger.info("inverse-norm bound fails at r=%g: %.4g > %.4g", r, row.norm, row.bound)
    return rows


def tame_witness(
    problem: "ProblemSpec",
    u: SpectralField,
    N: float,
    s1: float,
    s2: float,
    rhs: SpectralField,
    tau: float,
    kappa0: float,
    varsigma: float = 0.5,
    lambda_target: float = 0.5,
    cluster_c: float = 1.0,
    cfg: Optional[SolverConfig] = None,
) -> float:
    """Measured C = ‖L^{-1}rhs‖_{s1} / (N^{τ+κ0}‖rhs‖_{s2}) for s1 < s2."""
    if not s1 < s2:
        raise ValueError(f"tame witness needs s1 < s2, got {s1} and {s2}")
    op = assemble_linearized(problem, u, N)
    partition = cluster_singular(partition_sites(op.D, varsigma), lambda_target, cluster_c)
    solution, _ = solve_field(op, partition, rhs, cfg)
    c = tame_ratio(solution, rhs, N, s1, s2, tau, kappa0)
    logger.debug("tame witness at N=%g: C=%.4g", N, c)
    return c


def tame_ratio(
    solution: SpectralField, rhs: SpectralField, N: float, s1: float, s2: float, tau: float, kappa0: float
) -> float:
    denom = N ** (tau + kappa0) * rhs.norm(s2)
    return float(solution.norm(s1) / denom) if denom > 0 else 0.0


def witness_growth(constants: Sequence[float]) -> float:
    """Largest ratio between consecutive witnesses; bounded growth keeps this near or below 1."""
    arr = np.asarray(constants, dtype=float)
    if arr.size < 2 or np.any(arr[:-1] == 0):
        return 0.0
    return float(np.max(arr[1:] / arr[:-1]))
