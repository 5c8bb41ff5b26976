"""
Uniqueness — Rerun the iteration from perturbed starting points.

Every perturbation gets its own random stream spawned from the seed, so
the probe is reproducible regardless of thread scheduling.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from pyda_models.models import DivisorsConfig, IterationParams, SolverConfig
from src.iteration.nash_moser import IterationReport, run
from src.iteration.problem import ProblemSpec
from src.spectral.lattice import SpectralField, random_field

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerturbedRun:
    index: int
    start_norm: float
    converged: bool
    steps: int
    distance_to_base: Optional[float]
    failure: Optional[str] = None


@dataclass
class UniquenessResult:
    max_distance: float
    base: IterationReport
    runs: List[PerturbedRun] = field(default_factory=list)

    @property
    def base_converged(self) -> bool:
        return self.base.converged

    @property
    def failures(self) -> List[PerturbedRun]:
        return [r for r in self.runs if not r.converged]

    def to_dict(self) -> dict:
        return {
            "max_distance": self.max_distance,
            "base_converged": self.base_converged,
            "runs": [r.__dict__ for r in self.runs],
        }


def perturbation(problem: ProblemSpec, N: float, magnitude: float, rng: np.random.Generator, s: float) -> SpectralField:
    """Random field on J_N^+ rescaled to ‖·‖_s = magnitude."""
    real = problem.nonlinearity.is_real
    if magnitude == 0.0:
        return SpectralField.zeros(problem.descriptor, declared_real=real)
    v = random_field(problem.descriptor, N, rng, declared_real=real)
    return v.scale(magnitude / v.norm(s))


def uniqueness_probe(
    problem: ProblemSpec,
    params: IterationParams,
    k_perturbations: int,
    magnitude: float,
    seed: int = 0,
    solver_cfg: Optional[SolverConfig] = None,
    divisors: Optional[DivisorsConfig] = None,
    threads: int = 1,
    base: Optional[IterationReport] = None,
) -> UniquenessResult:
    """
    Max pairwise ‖u^(i) − u^(j)‖_{σ̄} over the base solution and k reruns.

    A non-converged base leaves the distance undefined (NaN); reruns that
    fail are listed with their failure and left out of the maximum.
    """
    base = base or run(problem, params, solver_cfg, divisors)
    if not base.converged:
        logger.warning("uniqueness probe skipped: base run did not converge")
        return UniquenessResult(float("nan"), base)

    N1 = params.scale(1)
    streams = np.random.SeedSequence(seed).spawn(k_perturbations)
    starts = [perturbation(problem, N1, magnitude, np.random.default_rng(ss), params.sigma_bar) for ss in streams]

    def rerun(u0: SpectralField) -> IterationReport:
        return run(problem, params, solver_cfg, divisors, u0=u0)

    if threads > 1 and k_perturbations > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(rerun, starts))
    else:
        reports = [rerun(u0) for u0 in starts]

    s = params.sigma_bar
    solutions = [base.u]
    runs = []
    for k, (u0, rep) in enumerate(zip(starts, reports)):
        dist = (rep.u - base.u).norm(s) if rep.converged else None
        runs.append(PerturbedRun(k, u0.norm(s), rep.converged, rep.steps, dist, rep.failure))
        if rep.converged:
            solutions.append(rep.u)
        else:
            logger.warning("perturbation %d did not converge", k)

    distance = max(((a - b).norm(s) for a, b in itertools.combinations(solutions, 2)), default=0.0)
    logger.info("uniqueness probe: %d/%d reruns converged, max distance %.3e",
                len(solutions) - 1, k_perturbations, distance)
    return UniquenessResult(distance, base, runs)
