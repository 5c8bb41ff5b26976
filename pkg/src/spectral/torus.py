"""
Torus Basis — Physical/spectral transforms on T^n and multiplication operators.

DFT conventions: synthesis evaluates Σ_j u_j e^{i j·x} at x_k = 2πk/M with
no normalisation; analysis divides the forward transform by M^n. Both go
through ``scipy.fft``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from pyda_models.models import BasisKind
from src.core.errors import AliasingError
from src.solver.block_matrix import BlockMatrix
from src.spectral.basis_base import SpectralBasis
from src.spectral.lattice import (
    BasisDescriptor,
    EigenIndex,
    IndexLayout,
    SpectralField,
    build_index_set,
    enforce_reality,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the equispaced grid x_k = 2πk/M."""
    basis: BasisDescriptor
    values: np.ndarray

    def __post_init__(self):
        if not self.basis.is_torus:
            raise ValueError("GridFunction lives on the torus")
        if self.values.ndim != self.basis.dim or len(set(self.values.shape)) != 1:
            raise ValueError(f"expected a cubic grid of dimension {self.basis.dim}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return self.values.shape

    def points(self) -> Tuple[np.ndarray, ...]:
        """Meshgrid of node coordinates, ``indexing="ij"``."""
        x = 2.0 * np.pi * np.arange(self.M) / self.M
        return tuple(np.meshgrid(*([x] * self.basis.dim), indexing="ij"))


def dealiased_size(in_band: int, out_band: int, N: float) -> int:
    """
    Grid size M for exact evaluation of a product.

    Inputs with componentwise band ``in_band`` must be representable and
    modes of a product with band ``out_band`` must not alias into |j| ≤ N.
    """
    n_cut = int(math.floor(N))
    need = max(out_band + n_cut + 1, 2 * in_band + 1, 2 * n_cut + 1)
    return sfft.next_fast_len(need)


def to_physical(u: SpectralField, M: int) -> GridFunction:
    """Evaluate u at the M^n grid points; refuses grids that would alias."""
    basis = u.basis
    if not basis.is_torus:
        raise ValueError("to_physical expects a torus field")
    band = u.max_degree()
    if M < 2 * band + 1:
        raise AliasingError(f"grid size {M} cannot represent modes up to |j_k| = {band} (need {2 * band + 1})")
    arr = np.zeros((M,) * basis.dim, dtype=complex)
    for idx, block in u.items():
        arr[tuple(k % M for k in idx.j)] = block[0]
    values = sfft.ifftn(arr) * (M ** basis.dim)
    if u.declared_real:
        values = values.real
    return GridFunction(basis, values)


def to_spectral(g: GridFunction, N: float) -> SpectralField:
    """Π^(N) of the trigonometric interpolant of the samples."""
    M = g.M
    n_cut = int(math.floor(N))
    if M < 2 * n_cut + 1:
        raise AliasingError(f"cutoff N={N} exceeds the Nyquist limit of a grid of size {M}")
    spectrum = sfft.fftn(g.values) / (M ** g.basis.dim)
    coeffs = {idx: spectrum[tuple(k % M for k in idx.j)] for idx in build_index_set(g.basis, N)}
    real = not np.iscomplexobj(g.values)
    out = SpectralField(g.basis, coeffs, declared_real=real)
    return enforce_reality(out) if real else out


def multiplication_matrix(
    b: SpectralField, N: Optional[float] = None, indices: Optional[Sequence[EigenIndex]] = None
) -> BlockMatrix:
    """T_j^{j'} = b_{j−j'} on J_N^+ (convolution structure)."""
    if indices is None:
        if N is None:
            raise ValueError("multiplication_matrix needs N or an explicit index set")
        indices = build_index_set(b.basis, N)
    layout = IndexLayout(indices)
    support = [(idx.j, block[0]) for idx, block in b.items()]
    blocks: Dict[Tuple[EigenIndex, EigenIndex], np.ndarray] = {}
    for j in layout.indices:
        for k, value in support:
            jp = EigenIndex(tuple(x - y for x, y in zip(j.j, k)), BasisKind.TORUS)
            if jp in layout:
                blocks[(j, jp)] = np.array([[value]])
    return BlockMatrix(layout.indices, blocks, self_adjoint=b.declared_real)


class TorusBasis(SpectralBasis):
    """Fourier basis e^{i j·x} on T^n."""

    kind = BasisKind.TORUS

    @property
    def group_data(self) -> Tuple[int, int, int]:
        return 0, 0, self.descriptor.dim

    def evaluation_grid(self, in_band: int, out_band: int, N: float) -> int:
        return dealiased_size(in_band, out_band, N)

    def synthesize(self, u: SpectralField, grid: int) -> np.ndarray:
        return to_physical(u, grid).values

    def analyze(self, values: np.ndarray, grid: int, N: float) -> SpectralField:
        return to_spectral(GridFunction(self.descriptor, values), N)

    def multiplication_matrix(
        self, b: SpectralField, N: Optional[float] = None, indices: Optional[Sequence[EigenIndex]] = None
    ) -> BlockMatrix:
        return multiplication_matrix(b, N, indices)


def tame_product_constant(u: SpectralField, v: SpectralField, s: float) -> float:
    """c(s) = ‖uv‖_s / (‖u‖_s‖v‖_s) for two torus fields."""
    return TorusBasis(u.basis).tame_product_constant(u, v, s)
