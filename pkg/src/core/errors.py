"""
Errors — Exception hierarchy shared by every package.

Checks whose negative outcome is an expected result (Melnikov failures,
non-convergence, per-perturbation failures) return values instead of raising.
"""

from typing import Any, Optional, Sequence


class NMSpectralError(Exception):
    """Root of all library errors."""


# ── Configuration ────────────────────────────────────────

class ConfigurationError(NMSpectralError):
    """Invalid or unsupported configuration."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = ""
        if key:
            prefix = f"{key}"
            if line is not None:
                prefix += f" (line {line})"
            prefix += ": "
        super().__init__(prefix + message)


# ── Spectral calculus ────────────────────────────────────

class NormOverflowError(NMSpectralError):
    """A Sobolev weight left the representable floating range."""

    def __init__(self, index: Any, log_magnitude: float):
        self.index = index
        self.log_magnitude = log_magnitude
        super().__init__(
            f"Sobolev norm overflows at index {index}: log-magnitude {log_magnitude:.1f}"
        )


class AliasingError(NMSpectralError):
    """Grid too coarse to represent a band-limited field exactly."""


class ResolutionError(NMSpectralError):
    """Quadrature too coarse for the requested spherical degree."""


class UnsupportedNonlinearityError(NMSpectralError):
    """Nonlinearity outside the polynomial-in-u family."""


# ── Linear solver ────────────────────────────────────────

class LinearSolverError(NMSpectralError):
    """Base class for failures while inverting the linearized operator."""


class NeumannDivergedError(LinearSolverError):
    """Neumann series stopped contracting."""

    def __init__(self, contraction: float, terms: int, reason: str = "growing increments"):
        self.contraction = contraction
        self.terms = terms
        super().__init__(
            f"Neumann series diverged after {terms} terms ({reason}); "
            f"contraction estimate {contraction:.3g}"
        )


class SingularClusterError(LinearSolverError):
    """A cluster block of the Schur complement is numerically singular."""

    def __init__(self, cluster: int, condition: float):
        self.cluster = cluster
        self.condition = condition
        super().__init__(
            f"cluster {cluster} is singular (condition {condition:.3g}); "
            "the parameter a must be excluded"
        )


class ParameterExcludedError(LinearSolverError):
    """The full truncated operator is numerically singular."""

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"operator is numerically singular (condition {condition:.3g})")


class ResidualCheckError(LinearSolverError):
    """Post-solve residual exceeded its bound."""

    def __init__(self, residual: float, bound: float):
        self.residual = residual
        self.bound = bound
        super().__init__(f"residual {residual:.3e} exceeds bound {bound:.3e}")


class DimensionCapError(LinearSolverError):
    """Dense materialisation refused above the configured dimension."""


class ClusterSoundnessError(NMSpectralError):
    """Singular-site clustering violated the dyadic or separation property."""

    def __init__(self, violations: Sequence[Any]):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:3])
        super().__init__(f"{len(self.violations)} clustering violation(s): {head}")


# ── Iteration ────────────────────────────────────────────

class IterationStepError(NMSpectralError):
    """A Nash–Moser step failed; wraps the underlying solver error."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {cause}")
