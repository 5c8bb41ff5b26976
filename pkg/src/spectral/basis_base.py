"""
Spectral Basis — Abstract interface shared by the torus and sphere bases.

A basis knows how to move fields between coefficient space and a
quadrature grid; everything built on top of that (nonlinearity
evaluation, linearized coefficients, products) is generic.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from pyda_models.models import BasisKind
from src.solver.block_matrix import BlockMatrix
from src.spectral.lattice import (
    BasisDescriptor,
    EigenIndex,
    SpectralField,
    build_index_set,
    enforce_reality,
)
from src.spectral.nonlinearity import NonlinearitySpec

logger = logging.getLogger(__name__)


class SpectralBasis(ABC):
    """Abstract base class every eigenbasis implementation must provide."""

    kind: BasisKind

    def __init__(self, descriptor: BasisDescriptor):
        if descriptor.kind != self.kind:
            raise ValueError(f"{type(self).__name__} cannot serve a {descriptor.kind.value} descriptor")
        self.descriptor = descriptor

    # -- spectral data --------------------------------------------------------

    @property
    @abstractmethod
    def group_data(self) -> Tuple[int, int, int]:
        """``(d, r, n)``: group dimension, rank, torus factor dimension."""
        ...

    def index_set(self, N: float) -> Tuple[EigenIndex, ...]:
        return build_index_set(self.descriptor, N)

    def eigenvalue(self, idx: EigenIndex) -> int:
        """Laplace eigenvalue ω_j² − 1 of the eigenspace."""
        return idx.eigenvalue

    # -- abstract interface ---------------------------------------------------

    @abstractmethod
    def evaluation_grid(self, in_band: int, out_band: int, N: float) -> Any:
        """Smallest grid resolving inputs of band ``in_band`` and returning Π^(N) of an ``out_band`` product exactly."""
        ...

    @abstractmethod
    def synthesize(self, u: SpectralField, grid: Any) -> np.ndarray:
        """Sample u at the grid points."""
        ...

    @abstractmethod
    def analyze(self, values: np.ndarray, grid: Any, N: float) -> SpectralField:
        """Π^(N) of the band-limited function sampled in ``values``."""
        ...

    @abstractmethod
    def multiplication_matrix(
        self, b: SpectralField, N: Optional[float] = None, indices: Optional[Sequence[EigenIndex]] = None
    ) -> BlockMatrix:
        """Block matrix of u ↦ b·u restricted to J_N^+ (or the given indices)."""
        ...

    # -- generic operations ---------------------------------------------------

    def apply_nonlinearity(self, f: NonlinearitySpec, u: SpectralField, N: float) -> SpectralField:
        """Π^(N) f(x, u), evaluated exactly on a dealiased grid."""
        u_band = u.max_degree()
        in_band = max(u_band, f.coefficient_band)
        grid = self.evaluation_grid(in_band, f.output_band(u_band), N)
        u_values = self.synthesize(u, grid)
        values = f.evaluate(u_values, lambda c: self.synthesize(c, grid))
        real = u.declared_real and f.is_real
        if real:
            values = values.real
        out = self.analyze(values, grid, N)
        return enforce_reality(out) if real else out

    def linearized_coeff(self, f: NonlinearitySpec, u: SpectralField, N: float) -> SpectralField:
        """Π^(N) ∂_u f(x, u)."""
        return self.apply_nonlinearity(f.derivative(), u, N)

    def product(self, u: SpectralField, v: SpectralField, N: Optional[float] = None) -> SpectralField:
        """Π^(N)(u·v); with ``N=None`` the full product is kept."""
        if N is None:
            N = max(1.0, u.max_shift_norm() + v.max_shift_norm())
        spec = NonlinearitySpec.polynomial(self.descriptor, {1: v})
        return self.apply_nonlinearity(spec, u, N)

    def tame_product_constant(self, u: SpectralField, v: SpectralField, s: float) -> float:
        """Measured c(s) = ‖uv‖_s / (‖u‖_s‖v‖_s)."""
        denom = u.norm(s) * v.norm(s)
        if denom == 0.0:
            return 0.0
        c = self.product(u, v).norm(s) / denom
        logger.debug("tame product constant at s=%g: %.4g", s, c)
        return c

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor})"
