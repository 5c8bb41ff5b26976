"""pyda_models — Pydantic data models for the NMSpectral framework."""

from pyda_models.models import (
    BasisConfig,
    BasisKind,
    BenchConfig,
    DivisorsConfig,
    ExperimentConfig,
    ExperimentKind,
    IterationParams,
    MeasureRow,
    ModeTerm,
    MonomialConfig,
    OrderStudyConfig,
    ProblemConfig,
    ScanConfig,
    ScanMode,
    SolverConfig,
    SolverPath,
    SolverReport,
    StepRecord,
    TermShape,
    UniquenessConfig,
    WeightMode,
    kappa_lower_bound,
)

__all__ = [
    "BasisConfig",
    "BasisKind",
    "BenchConfig",
    "DivisorsConfig",
    "ExperimentConfig",
    "ExperimentKind",
    "IterationParams",
    "MeasureRow",
    "ModeTerm",
    "MonomialConfig",
    "OrderStudyConfig",
    "ProblemConfig",
    "ScanConfig",
    "ScanMode",
    "SolverConfig",
    "SolverPath",
    "SolverReport",
    "StepRecord",
    "TermShape",
    "UniquenessConfig",
    "WeightMode",
    "kappa_lower_bound",
]
