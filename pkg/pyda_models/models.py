"""Pydantic data models for the NMSpectral experiment framework."""

import math
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


class BasisKind(str, Enum):
    """Supported spectral bases."""
    TORUS = "torus"
    SPHERE = "sphere"


class WeightMode(str, Enum):
    """Sobolev weight families."""
    EXPONENTIAL = "exp"
    POLYNOMIAL = "poly"


class ExperimentKind(str, Enum):
    """Experiments the runner knows how to execute."""
    SOLVE = "solve"
    MEASURE_SCAN = "measure_scan"
    UNIQUENESS = "uniqueness"
    SOLVER_BENCH = "solver_bench"
    ORDER_STUDY = "order_study"


class ScanMode(str, Enum):
    """Which exclusion rule a measure scan applies."""
    MELNIKOV = "melnikov"
    OPERATOR = "operator"


class SolverPath(str, Enum):
    """Route taken by the linear solver."""
    RESOLVENT = "resolvent"
    DENSE_FALLBACK = "dense_fallback"


class TermShape(str, Enum):
    """How a coefficient term expands into spectral modes."""
    MODE = "mode"
    COS = "cos"
    SIN = "sin"


class _Strict(BaseModel):
    """Base for config sections: unknown keys are errors."""
    model_config = ConfigDict(extra="forbid")


# ── Problem description ──────────────────────────────────

class BasisConfig(_Strict):
    """Which manifold the equation lives on."""
    kind: BasisKind = Field(default=BasisKind.TORUS)
    dim: int = Field(default=1, ge=1, description="Torus dimension n (ignored on the sphere)")
    weight_mode: WeightMode = Field(default=WeightMode.EXPONENTIAL)

    def group_data(self) -> Tuple[int, int, int]:
        """Return ``(d, r, n)``: group dimension, rank and torus factor dimension."""
        if self.kind == BasisKind.SPHERE:
            return 3, 1, 0
        return 0, 0, self.dim


class ModeTerm(_Strict):
    """One spectral term of a coefficient field.

    ``shape=cos`` with index k expands to modes ±k with value/2 each,
    ``shape=sin`` to ∓i·value/2. On the sphere ``index`` is ``[l, m]``.
    """
    index: List[int] = Field(..., min_length=1)
    value: float
    imag: float = 0.0
    shape: TermShape = TermShape.MODE


class MonomialConfig(_Strict):
    """``c_q(x) u^q`` with ``c_q = coefficient + Σ terms``."""
    degree: int = Field(..., ge=0, le=12)
    coefficient: float = 0.0
    terms: List[ModeTerm] = Field(default_factory=list)


def _default_nonlinearity() -> List[MonomialConfig]:
    return [
        MonomialConfig(degree=2, coefficient=1.0),
        MonomialConfig(degree=0, terms=[ModeTerm(index=[1], value=1.0, shape=TermShape.COS)]),
    ]


class ProblemConfig(_Strict):
    """Equation data: basis, perturbation order, coefficient a, ε, δ and f."""
    basis: BasisConfig = Field(default_factory=BasisConfig)
    rho: int = Field(default=2, ge=1, le=6, description="Perturbation order ϱ")
    a: Optional[float] = Field(default=GOLDEN_RATIO, gt=0.0)
    a_interval: Optional[Tuple[float, float]] = None
    epsilon: Optional[float] = Field(default=1e-3, ge=0.0)
    delta: Optional[float] = Field(default=None, gt=0.0)
    derive_epsilon: bool = False
    check_delta_consistency: bool = False
    nonlinearity: List[MonomialConfig] = Field(default_factory=_default_nonlinearity)

    @model_validator(mode="after")
    def _check(self) -> "ProblemConfig":
        if self.a_interval is not None and not self.a_interval[0] < self.a_interval[1]:
            raise ValueError(
                f"a_interval must satisfy lo < hi, got {list(self.a_interval)}"
            )
        if self.derive_epsilon and self.delta is None:
            raise ValueError("derive_epsilon requires delta")
        if not self.derive_epsilon and self.epsilon is None:
            raise ValueError("epsilon is required unless derive_epsilon is set")
        if not self.nonlinearity:
            raise ValueError("nonlinearity needs at least one monomial")
        if self.check_delta_consistency and self.delta is not None and not self.derive_epsilon:
            expected = self.delta ** (self.leading_degree() - 1)
            if abs(self.epsilon - expected) > 1e-12 * max(abs(expected), 1e-300):
                raise ValueError(
                    f"epsilon={self.epsilon!r} inconsistent with delta^(p-1)={expected!r}"
                )
        return self

    def leading_degree(self) -> int:
        """Lowest u-degree ≥ 1 carrying a nonzero coefficient (p), at least 2."""
        degrees = [
            m.degree for m in self.nonlinearity
            if m.degree >= 1 and (m.coefficient != 0.0 or any(t.value or t.imag for t in m.terms))
        ]
        return max(2, min(degrees)) if degrees else 2

    def resolved_epsilon(self) -> float:
        if self.derive_epsilon:
            return float(self.delta ** (self.leading_degree() - 1))
        return float(self.epsilon)


# ── Scheme constants ─────────────────────────────────────

class IterationParams(_Strict):
    """All Nash–Moser scheme constants."""
    N0: int = Field(default=2, ge=2)
    max_steps: int = Field(default=8, ge=1)
    sigma_bar: float = Field(default=0.05, gt=0.0)
    sigma: float = Field(default=0.1, gt=0.0)
    tau: float = Field(default=2.0, gt=0.0)
    kappa0: Optional[float] = Field(default=None, gt=0.0)
    varsigma: float = Field(default=0.5, gt=0.0, description="Regular/singular threshold ς")
    gamma: float = Field(default=0.25, gt=0.0)
    gamma1: float = Field(default=0.1, gt=0.0, lt=1.0)
    p: Optional[int] = Field(default=None, ge=2)
    stop_tol: float = Field(default=1e-10, gt=0.0)
    N_cap: int = Field(default=64, ge=2)

    @model_validator(mode="after")
    def _check(self) -> "IterationParams":
        if not self.sigma_bar < self.sigma:
            raise ValueError(
                f"sigma_bar < sigma violated: sigma_bar={self.sigma_bar} >= sigma={self.sigma}"
            )
        return self

    def scale(self, i: int) -> int:
        """N_i = N0^i capped at N_cap (N_0 is the first scale used)."""
        if i <= 0:
            return min(self.N0, self.N_cap)
        # avoid huge integers for long runs
        if i * math.log(self.N0) > math.log(self.N_cap):
            return self.N_cap
        return min(self.N0 ** i, self.N_cap)

    def sigma_at(self, i: int) -> float:
        """σ_i = σ̄ + (σ − σ̄)/2^i."""
        return self.sigma_bar + (self.sigma - self.sigma_bar) / (2.0 ** i)

    def resolved_kappa0(self, basis: BasisConfig) -> float:
        """κ0 = τ + r + n + 1 unless given."""
        if self.kappa0 is not None:
            return self.kappa0
        _, r, n = basis.group_data()
        return self.tau + r + n + 1.0


class DivisorsConfig(_Strict):
    """Diophantine constants and clustering rules."""
    gamma0: float = Field(default=0.1, gt=0.0)
    tau0: float = Field(default=1.5, gt=1.0)
    kappa: Optional[float] = Field(default=None, gt=0.0)
    enforce_kappa_bound: bool = False
    lambda_target: float = Field(default=0.5, gt=0.0)
    cluster_c: float = Field(default=1.0, gt=0.0)
    strict_clusters: bool = True
    n_max: int = Field(default=1000, ge=1, description="Range of the diophantine scan")


def kappa_lower_bound(tau: float, rho: int, basis: BasisConfig) -> float:
    """max{τ, 2 + d + n + ((2ϱ−2)/(2ϱ−1))(τ + 2ϱ)}."""
    d, _, n = basis.group_data()
    return max(tau, 2.0 + d + n + (2.0 * rho - 2.0) / (2.0 * rho - 1.0) * (tau + 2.0 * rho))


class SolverConfig(_Strict):
    """Linear solver tolerances and fallbacks."""
    tol: float = Field(default=1e-12, gt=0.0)
    neumann_max_terms: int = Field(default=200, ge=1)
    divergence_window: int = Field(default=3, ge=1)
    dense_fallback: bool = True
    dense_cap: int = Field(default=4096, ge=1)
    residual_factor: float = Field(default=10.0, gt=0.0)
    diagnostics: bool = Field(default=False, description="Measure inverse norms and tame ratios per step")


class ScanConfig(_Strict):
    """Parameter-exclusion scan settings."""
    mode: ScanMode = ScanMode.MELNIKOV
    a_interval: Tuple[float, float] = (1.0, 2.0)
    grid_count: int = Field(default=2000, ge=100)
    gammas: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2, 0.4, 0.8])
    N: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "ScanConfig":
        if not self.a_interval[0] < self.a_interval[1]:
            raise ValueError(f"a_interval must satisfy lo < hi, got {list(self.a_interval)}")
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ValueError("gammas must be a non-empty list of positive values")
        return self


class UniquenessConfig(_Strict):
    k_perturbations: int = Field(default=5, ge=1)
    magnitude: float = Field(default=1e-3, ge=0.0)


class BenchConfig(_Strict):
    instances: int = Field(default=100, ge=1)
    N_max: int = Field(default=32, ge=2)
    torus_dims: List[int] = Field(default_factory=lambda: [1])
    epsilon_max: float = Field(default=0.05, gt=0.0)
    b_modes: int = Field(default=6, ge=0)
    decay: float = Field(default=1.0, gt=0.0)


class OrderStudyConfig(_Strict):
    degrees: List[int] = Field(default_factory=lambda: [2, 3])
    epsilons: List[float] = Field(default_factory=lambda: [1e-4, 3e-4, 1e-3])


# ── Top-level experiment ─────────────────────────────────

_REQUIRED = {
    ExperimentKind.SOLVE: ("problem.a",),
    ExperimentKind.UNIQUENESS: ("problem.a",),
    ExperimentKind.ORDER_STUDY: ("problem.a",),
    ExperimentKind.MEASURE_SCAN: (),
    ExperimentKind.SOLVER_BENCH: (),
}


class ExperimentConfig(_Strict):
    """A complete, self-describing experiment."""
    experiment: ExperimentKind
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    output_dir: Optional[str] = None
    history_timings: bool = Field(default=False, description="Write wall times into history.csv")
    problem: ProblemConfig = Field(default_factory=ProblemConfig)
    params: IterationParams = Field(default_factory=IterationParams)
    divisors: DivisorsConfig = Field(default_factory=DivisorsConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    uniqueness: UniquenessConfig = Field(default_factory=UniquenessConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
    order: OrderStudyConfig = Field(default_factory=OrderStudyConfig)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        for path in _REQUIRED[self.experiment]:
            section, key = path.split(".")
            if getattr(getattr(self, section), key) is None:
                raise ValueError(f"{path} is required for experiment '{self.experiment.value}'")
        if self.divisors.enforce_kappa_bound:
            bound = kappa_lower_bound(self.params.tau, self.problem.rho, self.problem.basis)
            kappa = self.divisors.kappa
            if kappa is None or kappa < bound:
                raise ValueError(
                    f"kappa={kappa} below the required bound {bound:.6g} "
                    f"(max(tau, 2+d+n+(2rho-2)/(2rho-1)*(tau+2rho)))"
                )
        return self


# ── Report rows ──────────────────────────────────────────

class SolverReport(BaseModel):
    """Diagnostics of one linear solve."""
    neumann_terms_used: int = 0
    contraction_estimate: float = 0.0
    schur_dim: int = 0
    n_clusters: int = 0
    residual_norm: float = 0.0
    condition_estimate: Optional[float] = None
    path: SolverPath = SolverPath.RESOLVENT


class StepRecord(BaseModel):
    """One row of the iteration history."""
    i: int
    N: int
    sigma_i: float
    res_norm: float
    res_l2: float
    sol_norm: float
    correction_norm: float = 0.0
    taylor_gap: float = 0.0
    path: str = "none"
    neumann_terms: int = 0
    schur_dim: int = 0
    seconds: float = 0.0


class MeasureRow(BaseModel):
    """One line of ``measure.csv``."""
    gamma: float
    rejected_fraction: float = Field(..., ge=0.0, le=1.0)
    N: int
    epsilon: float
    rho: int
