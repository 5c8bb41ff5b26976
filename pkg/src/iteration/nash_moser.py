"""
Nash–Moser — Newton steps on growing truncations with independent residual checks.

Step i (N_i from the schedule, U_{i−1} = Σ_{k<i} u_k):

    u_i = −(L^(N_i) at U_{i−1})^{-1} Π^(N_i)𝓙(U_{i−1})
    E_i = Π^(N_i)𝓙(U_{i−1} + u_i)

E_i is always evaluated directly. Its Taylor-remainder form
−εΠ^(N_i)(f(U+u) − f(U) − ∂_u f(U)u) is stored next to it and the two
differ exactly by the linear-solve residual.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

from pyda_models.models import (
    DivisorsConfig,
    IterationParams,
    SolverConfig,
    SolverReport,
    StepRecord,
    kappa_lower_bound,
)
from src.core.errors import IterationStepError, NMSpectralError, NormOverflowError
from src.divisors.partition import SitePartition, cluster_singular, partition_sites
from src.iteration.convergence import ConvergenceOrder, convergence_order
from src.iteration.problem import ProblemSpec
from src.solver.assemble import assemble_linearized
from src.solver.diagnostics import inverse_norm_profile, tame_ratio
from src.solver.resolvent import solve_field
from src.spectral.lattice import SpectralField, project

logger = logging.getLogger(__name__)

FULL_RESIDUAL_FACTOR = 10.0


@dataclass
class StepOutcome:
    """Everything one step produced."""
    correction: SpectralField
    accumulated: SpectralField
    residual: SpectralField
    taylor_remainder: SpectralField
    partition: SitePartition
    report: SolverReport
    record: StepRecord


@dataclass
class IterationReport:
    """History and result of one run."""
    history: List[StepRecord] = field(default_factory=list)
    iterates: List[SpectralField] = field(default_factory=list)
    u: Optional[SpectralField] = None
    converged: bool = False
    order: ConvergenceOrder = field(default_factory=lambda: convergence_order([]))
    full_residual: Optional[float] = None
    N_final: int = 0
    failure: Optional[str] = None

    @property
    def steps(self) -> int:
        return len(self.history) - 1

    @property
    def residuals(self) -> List[float]:
        return [rec.res_norm for rec in self.history]

    def to_dict(self) -> dict:
        """JSON-ready summary; the solution is reported by norms and support."""
        u = self.u
        return {
            "converged": self.converged,
            "steps": self.steps,
            "N_final": self.N_final,
            "full_residual": self.full_residual,
            "order": self.order.to_dict(),
            "failure": self.failure,
            "solution": None if u is None else {
                "l2_norm": u.norm(0),
                "modes": len(u.support()),
                "max_shift_norm": u.max_shift_norm(),
            },
            "history": [rec.model_dump(exclude={"seconds"}) for rec in self.history],
        }


def full_residual(problem: ProblemSpec, u: SpectralField, N_check: float) -> float:
    """‖L_a u − εf(x, u)‖₀ on J_{N_check}^+, the check against truncation artifacts."""
    needed = 2.0 * u.max_shift_norm()
    if N_check < needed:
        logger.warning("full residual cutoff %g below twice the active band; using %g", N_check, needed)
        N_check = needed
    return problem.residual(u, N_check).norm(0)


def _clustered(op, params: IterationParams, divisors: DivisorsConfig) -> SitePartition:
    partition = partition_sites(op.D, params.varsigma)
    return cluster_singular(partition, divisors.lambda_target, divisors.cluster_c, divisors.strict_clusters)


def initial_record(problem: ProblemSpec, u0: SpectralField, params: IterationParams) -> StepRecord:
    """Step 0: E_0 = Π^(N_0)𝓙(u_0)."""
    N = params.scale(0)
    sigma = params.sigma_at(0)
    E = problem.residual(u0, N)
    return StepRecord(
        i=0, N=N, sigma_i=sigma,
        res_norm=E.norm(sigma), res_l2=E.norm(0),
        sol_norm=u0.norm(sigma),
    )


def step(
    problem: ProblemSpec,
    u_accum: SpectralField,
    i: int,
    params: IterationParams,
    solver_cfg: Optional[SolverConfig] = None,
    divisors: Optional[DivisorsConfig] = None,
    threads: int = 1,
) -> StepOutcome:
    """
    One Newton correction on J_{N_i}^+.

    Raises:
        IterationStepError: the linear solve or the clustering failed; the
            underlying error is attached as ``cause``.
    """
    if i < 1:
        raise ValueError(f"steps are numbered from 1, got {i}")
    solver_cfg = solver_cfg or SolverConfig()
    divisors = divisors or DivisorsConfig()
    N = params.scale(i)
    sigma = params.sigma_at(i)
    started = time.perf_counter()

    rhs = -problem.residual(u_accum, N)
    try:
        op = assemble_linearized(problem, u_accum, N)
        partition = _clustered(op, params, divisors)
        correction, report = solve_field(op, partition, rhs, solver_cfg, threads)
    except NMSpectralError as exc:
        raise IterationStepError(i, exc) from exc

    correction = project(correction, N)
    accumulated = u_accum + correction
    E = problem.residual(accumulated, N)

    if problem.epsilon == 0.0:
        taylor = SpectralField.zeros(problem.descriptor)
    else:
        basis, f = problem.basis, problem.nonlinearity
        delta_f = basis.apply_nonlinearity(f, accumulated, N) - basis.apply_nonlinearity(f, u_accum, N)
        coupled = op.T.matvec(correction.to_vector(op.layout))
        # εT carries −ε∂_u f(U)·u restricted to J_N
        linear = SpectralField.from_vector(problem.descriptor, op.layout, coupled)
        taylor = delta_f.scale(-problem.epsilon) - linear.scale(problem.epsilon)
    taylor_gap = (E - taylor).norm(0)

    record = StepRecord(
        i=i,
        N=N,
        sigma_i=sigma,
        res_norm=E.norm(sigma),
        res_l2=E.norm(0),
        sol_norm=accumulated.norm(sigma),
        correction_norm=correction.norm(sigma),
        taylor_gap=taylor_gap,
        path=report.path.value,
        neumann_terms=report.neumann_terms_used,
        schur_dim=report.schur_dim,
        seconds=time.perf_counter() - started,
    )
    logger.info(
        "step %d: N=%d |E|=%.3e |u_i|=%.3e path=%s singular=%d",
        i, N, record.res_norm, record.correction_norm, record.path, report.schur_dim,
    )

    if solver_cfg.diagnostics:
        _log_measured_constants(problem, u_accum, correction, rhs, N, params, divisors, solver_cfg)

    return StepOutcome(correction, accumulated, E, taylor, partition, report, record)


def _log_measured_constants(
    problem: ProblemSpec,
    u_accum: SpectralField,
    correction: SpectralField,
    rhs: SpectralField,
    N: int,
    params: IterationParams,
    divisors: DivisorsConfig,
    solver_cfg: SolverConfig,
) -> None:
    basis_cfg = problem.descriptor.to_config()
    kappa0 = params.resolved_kappa0(basis_cfg)
    C = tame_ratio(correction, rhs, N, params.sigma_bar, params.sigma, params.tau, kappa0)
    logger.debug("measured tame constant at N=%d: %.4g", N, C)
    if len(problem.basis.index_set(N)) > solver_cfg.dense_cap:
        return
    kappa = divisors.kappa or kappa_lower_bound(params.tau, problem.rho, basis_cfg)
    for row in inverse_norm_profile(problem, u_accum, [N], kappa, params.gamma1):
        logger.debug("inverse norm at r=%g: %.4g (bound %.4g)", row.r, row.norm, row.bound)


def _finite(rec: StepRecord) -> bool:
    return math.isfinite(rec.res_norm) and math.isfinite(rec.sol_norm)


def run(
    problem: ProblemSpec,
    params: IterationParams,
    solver_cfg: Optional[SolverConfig] = None,
    divisors: Optional[DivisorsConfig] = None,
    u0: Optional[SpectralField] = None,
    threads: int = 1,
) -> IterationReport:
    """
    Iterate until ‖E_i‖_{σ_i} < stop_tol and the full residual at 2N_i
    is at most 10·stop_tol, or until max_steps.

    Non-convergence is reported, not raised. A failed step ends the run
    with ``failure`` set to the error message.
    """
    solver_cfg = solver_cfg or SolverConfig()
    divisors = divisors or DivisorsConfig()
    real = problem.nonlinearity.is_real
    U = u0 if u0 is not None else SpectralField.zeros(problem.descriptor, declared_real=real)
    report = IterationReport()

    record = initial_record(problem, U, params)
    report.history.append(record)
    report.iterates.append(U)
    N = record.N

    for i in range(0, params.max_steps + 1):
        if i > 0:
            try:
                outcome = step(problem, U, i, params, solver_cfg, divisors, threads)
            except IterationStepError as exc:
                logger.warning("iteration stopped: %s", exc)
                report.failure = str(exc)
                break
            except NormOverflowError as exc:
                logger.warning("iteration stopped at step %d: %s", i, exc)
                report.failure = f"step {i}: {exc}"
                break
            record, U, N = outcome.record, outcome.accumulated, outcome.record.N
            report.history.append(record)
            report.iterates.append(U)
            if not _finite(record):
                report.failure = f"step {i}: non-finite residual"
                logger.warning("iteration stopped: %s", report.failure)
                break

        if record.res_norm < params.stop_tol:
            check = full_residual(problem, U, 2 * N)
            report.full_residual = check
            if check <= FULL_RESIDUAL_FACTOR * params.stop_tol:
                report.converged = True
                break
            logger.info("step %d: truncated residual small but full residual %.3e; refining", i, check)

    report.u = U
    report.N_final = N
    report.order = convergence_order(report.residuals)
    if report.full_residual is None or not report.converged:
        try:
            report.full_residual = full_residual(problem, U, 2 * N)
        except NormOverflowError:
            report.full_residual = float("inf")
    if report.converged:
        logger.info("converged after %d steps at N=%d (order %.3g)", report.steps, N, report.order.order)
    else:
        logger.warning("no convergence after %d steps (last residual %.3e)", report.steps, record.res_norm)
    return report
