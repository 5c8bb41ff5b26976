"""
Problem — The equation L_a u = εf(x, u) on a chosen basis.

L_a acts diagonally with the divisors D_j = λ_j + 1 − εa·λ_j^ϱ; the
nonlinear functional 𝓙(u) = L_a u − εf(x, u) vanishes at a solution.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

from pyda_models.models import ProblemConfig, WeightMode
from src.core.errors import ConfigurationError
from src.solver.assemble import divisor
from src.spectral.basis_base import SpectralBasis
from src.spectral.basis_factory import BasisFactory
from src.spectral.lattice import SpectralField, project
from src.spectral.nonlinearity import NonlinearitySpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemSpec:
    """Everything that defines one instance of the equation."""
    basis: SpectralBasis
    a: float
    epsilon: float
    rho: int
    nonlinearity: NonlinearitySpec
    delta: Optional[float] = None
    p: Optional[int] = None

    @classmethod
    def from_config(
        cls,
        cfg: ProblemConfig,
        weight_mode: Optional[WeightMode] = None,
        p: Optional[int] = None,
        a: Optional[float] = None,
    ) -> "ProblemSpec":
        """
        Build from the ``problem`` config block.

        When δ is given the u-dependent monomials are rescaled to
        δ^{−p} f(x, δu); ε is δ^{p−1} under ``derive_epsilon``.
        """
        a = cfg.a if a is None else a
        if a is None:
            raise ConfigurationError("a is required to build a problem", key="problem.a")
        basis = BasisFactory.from_config(cfg.basis, weight_mode)
        f = NonlinearitySpec.from_config(basis.descriptor, cfg.nonlinearity)
        p = p or f.leading_degree
        if cfg.delta is not None:
            f = f.rescaled(cfg.delta, p)
            logger.debug("nonlinearity rescaled with delta=%g, p=%d", cfg.delta, p)
        return cls(basis, float(a), cfg.resolved_epsilon(), cfg.rho, f, cfg.delta, p)

    @property
    def descriptor(self):
        return self.basis.descriptor

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return replace(self, epsilon=float(epsilon))

    def with_nonlinearity(self, f: NonlinearitySpec) -> "ProblemSpec":
        return replace(self, nonlinearity=f)

    def with_a(self, a: float) -> "ProblemSpec":
        return replace(self, a=float(a))

    def linear_part(self, u: SpectralField, N: Optional[float] = None) -> SpectralField:
        """L_a u, optionally restricted to J_N^+."""
        coeffs = {
            idx: divisor(idx, self.a, self.epsilon, self.rho) * block
            for idx, block in u.items()
            if N is None or idx.shift_norm <= N
        }
        return SpectralField(u.basis, coeffs, u.declared_real)

    def forcing_norm(self) -> float:
        """‖f(x, 0)‖₀."""
        return self.nonlinearity.coefficient(0).norm(0)

    def residual(self, u: SpectralField, N: float) -> SpectralField:
        """Π^(N)𝓙(u) = Π^(N)(L_a u − εf(x, u))."""
        lin = self.linear_part(u, N)
        if self.epsilon == 0.0:
            return lin
        f_u = self.basis.apply_nonlinearity(self.nonlinearity, u, N)
        return project(lin - f_u.scale(self.epsilon), N)

    def __repr__(self) -> str:
        return (
            f"ProblemSpec({self.basis!r}, a={self.a:g}, eps={self.epsilon:g}, "
            f"rho={self.rho}, f={self.nonlinearity!r})"
        )
