"""
Iteration — The Nash–Moser scheme, its diagnostics and the uniqueness probe.

Public API
----------
>>> from src.iteration import ProblemSpec, run, full_residual, convergence_order
>>> round(convergence_order([1e-1, 1e-2, 1e-4, 1e-8]).order, 6)
2.0
"""

from src.iteration.convergence import ConvergenceOrder, convergence_order
from src.iteration.nash_moser import IterationReport, StepOutcome, full_residual, initial_record, run, step
from src.iteration.problem import ProblemSpec
from src.iteration.uniqueness import PerturbedRun, UniquenessResult, perturbation, uniqueness_probe

__all__ = [
    "ProblemSpec",
    "IterationReport",
    "StepOutcome",
    "step",
    "run",
    "initial_record",
    "full_residual",
    "ConvergenceOrder",
    "convergence_order",
    "UniquenessResult",
    "PerturbedRun",
    "perturbation",
    "uniqueness_probe",
]
