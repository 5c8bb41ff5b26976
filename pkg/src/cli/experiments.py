"""
Experiments — One runner per experiment kind.

A runner takes the validated config, an artifact writer and the thread
count, writes its files, and returns an ``ExperimentOutcome`` whose exit
code the gateway passes on: 0 success, 2 honest non-convergence,
3 numerical failure.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from pyda_models.models import (
    BasisKind,
    ExperimentConfig,
    ExperimentKind,
    ScanMode,
    kappa_lower_bound,
)
from src.cli.artifacts import ArtifactWriter
from src.core.errors import LinearSolverError
from src.divisors.diophantine import diophantine_constant, lagrange_tail_estimate
from src.divisors.measure import measure_scan, operator_exclusion_scan
from src.divisors.melnikov import melnikov_check
from src.divisors.partition import cluster_singular, partition_sites
from src.iteration.nash_moser import IterationReport, run
from src.iteration.problem import ProblemSpec
from src.iteration.uniqueness import uniqueness_probe
from src.solver.assemble import divisor_map
from src.solver.dense import dense_solve
from src.solver.resolvent import relative_error, solve
from src.spectral.basis_factory import BasisFactory
from src.spectral.lattice import BasisDescriptor, random_field
from src.spectral.nonlinearity import Monomial, NonlinearitySpec, constant_field

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_NUMERICAL = 3

BENCH_TOLERANCE = 1e-8
BENCH_A_INTERVAL = (1.0, 2.0)


@dataclass
class ExperimentOutcome:
    exit_code: int
    summary: str


Runner = Callable[[ExperimentConfig, ArtifactWriter, int], ExperimentOutcome]


def _run_exit(report: IterationReport) -> int:
    if report.converged:
        return EXIT_OK
    return EXIT_NUMERICAL if report.failure else EXIT_NOT_CONVERGED


def _amplitude(report: IterationReport, epsilon: float) -> Optional[float]:
    if report.u is None or epsilon == 0.0:
        return None
    return report.u.norm(0) / epsilon


def _parameter_checks(cfg: ExperimentConfig, problem: ProblemSpec, N: int) -> Dict[str, object]:
    """Small-divisor facts about the chosen a, for the report."""
    params, divisors = cfg.params, cfg.divisors
    mel = melnikov_check(problem.a, problem.epsilon, problem.rho, N, params.gamma, params.tau, problem.descriptor)
    checks: Dict[str, object] = {
        "melnikov": {
            "passed": mel.passed,
            "ratio": mel.ratio,
            "worst_index": None if mel.worst_index is None else list(mel.worst_index.j),
        },
    }
    if problem.descriptor.kind == BasisKind.TORUS:
        checks["diophantine_constant"] = diophantine_constant(problem.a, divisors.n_max, divisors.tau0)
        checks["continued_fraction_tail"] = lagrange_tail_estimate(problem.a)
    return checks


def run_solve(cfg: ExperimentConfig, writer: ArtifactWriter, threads: int) -> ExperimentOutcome:
    problem = ProblemSpec.from_config(cfg.problem, p=cfg.params.p)
    started = time.perf_counter()
    report = run(problem, cfg.params, cfg.solver, cfg.divisors, threads=threads)
    elapsed = time.perf_counter() - started

    result = report.to_dict()
    result["epsilon"] = problem.epsilon
    result["amplitude_ratio"] = _amplitude(report, problem.epsilon)
    result["checks"] = _parameter_checks(cfg, problem, report.N_final)
    writer.history(report.history)
    # wall times live with the other timing fields
    writer.report(result, timing={"seconds": elapsed, "step_seconds": [rec.seconds for rec in report.history]})
    summary = (
        f"solve: converged={report.converged} steps={report.steps} "
        f"N_final={report.N_final} full_residual={report.full_residual:.3e}"
    )
    return ExperimentOutcome(_run_exit(report), summary)


def run_measure_scan(cfg: ExperimentConfig, writer: ArtifactWriter, threads: int) -> ExperimentOutcome:
    scan, problem_cfg = cfg.scan, cfg.problem
    epsilon = problem_cfg.resolved_epsilon()
    descriptor = BasisDescriptor.from_config(problem_cfg.basis)
    started = time.perf_counter()
    if scan.mode == ScanMode.MELNIKOV:
        result = measure_scan(
            scan.a_interval, scan.grid_count, epsilon, problem_cfg.rho, scan.N,
            scan.gammas, cfg.params.tau, cfg.seed, descriptor, threads,
        )
    else:
        kappa = cfg.divisors.kappa or kappa_lower_bound(cfg.params.tau, problem_cfg.rho, problem_cfg.basis)
        template = ProblemSpec.from_config(problem_cfg, p=cfg.params.p, a=scan.a_interval[0])
        coupled = not template.nonlinearity.coefficient(1).is_zero()
        factory = (lambda a: template.with_a(a)) if coupled else None
        result = operator_exclusion_scan(
            scan.a_interval, scan.grid_count, epsilon, problem_cfg.rho, scan.N,
            scan.gammas, kappa, cfg.seed, factory, None, descriptor, threads,
        )
    elapsed = time.perf_counter() - started

    fractions = [r.rejected_fraction for r in result.rows]
    monotone = all(b >= a for a, b in zip(fractions, fractions[1:]))
    writer.measure(result.rows, scan.mode)
    writer.report(
        {
            "mode": scan.mode.value,
            "rows": [r.model_dump() for r in result.rows],
            "slope": result.slope,
            "intercept": result.intercept,
            "r_squared": result.r_squared,
            "monotone": monotone,
        },
        timing={"seconds": elapsed},
    )
    summary = f"measure_scan ({scan.mode.value}): slope={result.slope:.4g} R^2={result.r_squared:.4f}"
    return ExperimentOutcome(EXIT_OK, summary)


def run_uniqueness(cfg: ExperimentConfig, writer: ArtifactWriter, threads: int) -> ExperimentOutcome:
    problem = ProblemSpec.from_config(cfg.problem, p=cfg.params.p)
    started = time.perf_counter()
    base = run(problem, cfg.params, cfg.solver, cfg.divisors, threads=1)
    probe = uniqueness_probe(
        problem, cfg.params, cfg.uniqueness.k_perturbations, cfg.uniqueness.magnitude,
        cfg.seed, cfg.solver, cfg.divisors, threads, base=base,
    )
    elapsed = time.perf_counter() - started
    writer.history(base.history)
    writer.report({"base": base.to_dict(), "probe": probe.to_dict()}, timing={"seconds": elapsed})

    if not base.converged:
        return ExperimentOutcome(_run_exit(base), "uniqueness: base run did not converge")
    code = EXIT_OK if not probe.failures else EXIT_NOT_CONVERGED
    summary = (
        f"uniqueness: max distance {probe.max_distance:.3e}, "
        f"{len(probe.failures)} of {len(probe.runs)} reruns failed"
    )
    return ExperimentOutcome(code, summary)


def bench_instance(cfg: ExperimentConfig, k: int, rng: np.random.Generator) -> tuple:
    """One randomized resolvent-vs-dense comparison; returns a bench.csv row."""
    bench = cfg.bench
    dim = int(rng.choice(bench.torus_dims))
    N = int(rng.integers(2, bench.N_max + 1))
    epsilon = float(rng.uniform(0.0, bench.epsilon_max))
    a = float(rng.uniform(*BENCH_A_INTERVAL))
    descriptor = BasisDescriptor.torus(dim)
    basis = BasisFactory.create(descriptor)

    b = random_field(descriptor, bench.b_modes, rng, decay=bench.decay)
    indices = basis.index_set(N)
    D = divisor_map(indices, a, epsilon, cfg.problem.rho)
    T = -basis.multiplication_matrix(b, indices=indices)
    rhs = random_field(descriptor, N, rng, decay=0.0).to_vector(T.rows)
    partition = cluster_singular(
        partition_sites(D, cfg.params.varsigma), cfg.divisors.lambda_target, cfg.divisors.cluster_c
    )

    started = time.perf_counter()
    try:
        u, report = solve(D, T, epsilon, partition, rhs, cfg.solver)
        reference, _ = dense_solve(D, T, epsilon, rhs, cfg.solver.dense_cap, cfg.solver.tol)
    except LinearSolverError as exc:
        logger.info("bench instance %d excluded: %s", k, exc)
        return (k, T.rows.size, len(partition.singular), len(partition.clusters), "excluded", None, 0,
                time.perf_counter() - started)
    error = relative_error(u, reference)
    return (k, T.rows.size, len(partition.singular), len(partition.clusters), report.path.value, error,
            report.neumann_terms_used, time.perf_counter() - started)


def run_solver_bench(cfg: ExperimentConfig, writer: ArtifactWriter, threads: int) -> ExperimentOutcome:
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.bench.instances)

    def one(k: int) -> tuple:
        return bench_instance(cfg, k, np.random.default_rng(streams[k]))

    started = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(cfg.bench.instances)))
    else:
        rows = [one(k) for k in range(cfg.bench.instances)]
    elapsed = time.perf_counter() - started

    errors = [r[5] for r in rows if r[5] is not None]
    worst = max(errors, default=0.0)
    writer.bench(rows)
    writer.report(
        {
            "instances": len(rows),
            "excluded": sum(1 for r in rows if r[5] is None),
            "max_rel_error": worst,
            "tolerance": BENCH_TOLERANCE,
        },
        timing={"seconds": elapsed},
    )
    code = EXIT_OK if worst <= BENCH_TOLERANCE else EXIT_NOT_CONVERGED
    return ExperimentOutcome(code, f"solver_bench: {len(rows)} instances, max relative error {worst:.3e}")


def _monomial_problem(base: ProblemSpec, degree: int, epsilon: float) -> ProblemSpec:
    """u^degree plus the configured forcing, at the given ε."""
    forcing = base.nonlinearity.coefficient(0)
    f = NonlinearitySpec(
        base.descriptor,
        [Monomial(degree, constant_field(base.descriptor, 1.0)), Monomial(0, forcing)],
    )
    return base.with_nonlinearity(f).with_epsilon(epsilon)


def run_order_study(cfg: ExperimentConfig, writer: ArtifactWriter, threads: int) -> ExperimentOutcome:
    base = ProblemSpec.from_config(cfg.problem, p=cfg.params.p)
    rows: List[tuple] = []
    runs: List[dict] = []
    spreads: Dict[int, Optional[float]] = {}
    all_converged = True
    started = time.perf_counter()
    for degree in cfg.order.degrees:
        amplitudes = []
        for epsilon in cfg.order.epsilons:
            problem = _monomial_problem(base, degree, epsilon)
            report = run(problem, cfg.params, cfg.solver, cfg.divisors, threads=threads)
            all_converged &= report.converged
            order = report.order
            rows.append((degree, epsilon, order.order if order.defined else None, order.usable,
                         report.converged, report.steps))
            amplitude = _amplitude(report, epsilon)
            if amplitude is not None:
                amplitudes.append(amplitude)
            runs.append({
                "degree": degree,
                "epsilon": epsilon,
                "order": order.to_dict(),
                "converged": report.converged,
                "amplitude_ratio": amplitude,
            })
        spread = (max(amplitudes) / min(amplitudes) - 1.0) if amplitudes and min(amplitudes) > 0 else None
        spreads[degree] = spread
    elapsed = time.perf_counter() - started

    writer.order(rows)
    writer.report({"runs": runs, "amplitude_spread": spreads}, timing={"seconds": elapsed})
    code = EXIT_OK if all_converged else EXIT_NOT_CONVERGED
    return ExperimentOutcome(code, f"order_study: {len(rows)} runs, all converged={all_converged}")


RUNNERS: Dict[ExperimentKind, Runner] = {
    ExperimentKind.SOLVE: run_solve,
    ExperimentKind.MEASURE_SCAN: run_measure_scan,
    ExperimentKind.UNIQUENESS: run_uniqueness,
    ExperimentKind.SOLVER_BENCH: run_solver_bench,
    ExperimentKind.ORDER_STUDY: run_order_study,
}
