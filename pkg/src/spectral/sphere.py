"""
Sphere Basis — Spherical-harmonic transforms on S² with degenerate eigenblocks.

Fields are expanded in complex Y_l^m (Condon–Shortley phase), one block of
length 2l+1 per degree ordered m = −l..l. Real functions satisfy
u_{l,−m} = (−1)^m conj(u_{l,m}).

Quadrature is Gauss–Legendre in cos θ times an equispaced longitude grid;
the longitude sums go through ``scipy.fft``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from pyda_models.models import BasisKind
from src.core.errors import ResolutionError
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
from src.spectral.legendre import gauss_nodes, legendre_derivatives, legendre_table

logger = logging.getLogger(__name__)

DEFAULT_L_MAX = 32
MULTIPLICATION_ADJOINT_TOL = 1e-12


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule: n_theta Gauss nodes in cos θ, n_phi equispaced longitudes."""
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError(f"quadrature needs positive node counts, got ({self.n_theta}, {self.n_phi})")

    @classmethod
    def for_band(cls, degree: int) -> "SphereQuadrature":
        """Exact for spherical polynomials of total degree ``degree``."""
        return cls(degree // 2 + 1, degree + 1)

    @classmethod
    def for_lmax(cls, l_max: int) -> "SphereQuadrature":
        """Smallest grid that resolves synthesis and analysis up to ``l_max``."""
        return cls(l_max + 1, 2 * l_max + 1)

    @property
    def x(self) -> np.ndarray:
        return gauss_nodes(self.n_theta)[0]

    @property
    def weights(self) -> np.ndarray:
        return gauss_nodes(self.n_theta)[1]

    @property
    def theta(self) -> np.ndarray:
        return gauss_nodes(self.n_theta)[2]

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def exact_degree(self) -> int:
        """Largest total degree integrated exactly."""
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    def resolves(self, l_max: int) -> bool:
        return self.n_theta > l_max and self.n_phi > 2 * l_max

    def require(self, l_max: int) -> None:
        if not self.resolves(l_max):
            raise ResolutionError(
                f"quadrature {self.shape} cannot resolve degree {l_max} "
                f"(need n_theta > {l_max}, n_phi > {2 * l_max})"
            )

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights[:, None] * values) * (2.0 * np.pi / self.n_phi))


def _degree_bound(u: SpectralField) -> int:
    return max((idx.j[0] for idx in u.support()), default=0)


def _synthesize_columns(u: SpectralField, quad: SphereQuadrature, table: np.ndarray, l_max: int) -> np.ndarray:
    """Σ_l u_{l,m} T_l^m(θ) placed at longitude frequency m, then summed over m."""
    arr = np.zeros((quad.n_theta, quad.n_phi), dtype=complex)
    for idx, block in u.items():
        l = idx.j[0]
        for pos, m in enumerate(range(-l, l + 1)):
            if block[pos] != 0:
                arr[:, m % quad.n_phi] += block[pos] * table[l, l_max + m]
    return sfft.ifft(arr, axis=1) * quad.n_phi


def sphere_synthesis(u: SpectralField, quad: SphereQuadrature) -> np.ndarray:
    """Evaluate Σ u_{l,m} Y_l^m on the (θ, φ) nodes."""
    if u.basis.is_torus:
        raise ValueError("sphere_synthesis expects a sphere field")
    l_max = _degree_bound(u)
    quad.require(l_max)
    values = _synthesize_columns(u, quad, legendre_table(quad.n_theta, l_max), l_max)
    return values.real if u.declared_real else values


def sphere_analysis(
    values: np.ndarray, quad: SphereQuadrature, l_max: int, basis: Optional[BasisDescriptor] = None
) -> SpectralField:
    """u_{l,m} = ⟨values, Y_l^m⟩ by quadrature for l ≤ l_max."""
    basis = basis or BasisDescriptor.sphere()
    if values.shape != quad.shape:
        raise ValueError(f"grid of shape {values.shape} does not match quadrature {quad.shape}")
    quad.require(l_max)
    table = legendre_table(quad.n_theta, l_max)
    spectrum = sfft.fft(values, axis=1) * (2.0 * np.pi / quad.n_phi)
    weighted = quad.weights[:, None] * spectrum
    coeffs: Dict[EigenIndex, np.ndarray] = {}
    for l in range(l_max + 1):
        block = np.empty(2 * l + 1, dtype=complex)
        for pos, m in enumerate(range(-l, l + 1)):
            block[pos] = np.dot(table[l, l_max + m], weighted[:, m % quad.n_phi])
        coeffs[basis.index(l)] = block
    real = not np.iscomplexobj(values)
    out = SpectralField(basis, coeffs, declared_real=real)
    return enforce_reality(out) if real else out


def laplace_beltrami_grid(u: SpectralField, quad: SphereQuadrature) -> np.ndarray:
    """Δu at the nodes: [∂²_θ + cot θ ∂_θ − m²/sin²θ] applied per order."""
    l_max = _degree_bound(u)
    quad.require(l_max)
    table = legendre_table(quad.n_theta, l_max)
    first, second = legendre_derivatives(quad.n_theta, l_max)
    theta = quad.theta
    cot = np.cos(theta) / np.sin(theta)
    inv_sin2 = 1.0 / np.sin(theta) ** 2
    orders = np.arange(-l_max, l_max + 1)
    combined = second + cot * first - (orders[None, :, None] ** 2) * inv_sin2 * table
    values = _synthesize_columns(u, quad, combined, l_max)
    return values.real if u.declared_real else values


def _order_rows(layout: IndexLayout, top: int) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    """For each order m: the degrees l ≥ |m| in the layout and their flat positions."""
    rows: Dict[int, Tuple[list, list]] = {m: ([], []) for m in range(-top, top + 1)}
    for idx in layout.indices:
        l = idx.j[0]
        start = layout.offsets[idx]
        for m in range(-l, l + 1):
            rows[m][0].append(l)
            rows[m][1].append(start + l + m)
    return {m: (np.asarray(ls, dtype=int), np.asarray(pos, dtype=np.intp)) for m, (ls, pos) in rows.items()}


def sphere_multiplication_matrix(
    b: SpectralField,
    l_max: Optional[int] = None,
    indices: Optional[Sequence[EigenIndex]] = None,
    quad: Optional[SphereQuadrature] = None,
) -> BlockMatrix:
    """
    T_l^{l'} with entries ⟨b·Y_{l'}^{m'}, Y_l^m⟩ computed by quadrature.

    The longitude integral reduces to the Fourier coefficient b_{m−m'}(θ),
    so only order pairs with |m − m'| ≤ deg(b) are ever formed.
    """
    if indices is None:
        if l_max is None:
            raise ValueError("sphere_multiplication_matrix needs l_max or an explicit index set")
        indices = build_index_set(b.basis, l_max + 0.5)
    layout = IndexLayout(indices)
    top = max(idx.j[0] for idx in layout.indices)
    band = _degree_bound(b)
    need = band + 2 * top
    quad = quad or SphereQuadrature.for_band(max(need, 2 * band))
    if quad.exact_degree < need:
        raise ResolutionError(f"quadrature {quad.shape} integrates degree {quad.exact_degree}, need {need}")
    quad.require(band)

    table = legendre_table(quad.n_theta, top)
    b_vals = sphere_synthesis(b, quad)
    modes = sfft.fft(b_vals, axis=1) / quad.n_phi
    rows = _order_rows(layout, top)
    dense = np.zeros((layout.size, layout.size), dtype=complex)
    for m, (ls, pos) in rows.items():
        if ls.size == 0:
            continue
        left = table[ls, top + m] * quad.weights
        for mp in range(max(-top, m - band), min(top, m + band) + 1):
            ls_p, pos_p = rows[mp]
            if ls_p.size == 0:
                continue
            weight = 2.0 * np.pi * modes[:, (m - mp) % quad.n_phi]
            dense[np.ix_(pos, pos_p)] = (left * weight) @ table[ls_p, top + mp].T
    if b.declared_real:
        defect = float(np.max(np.abs(dense - dense.conj().T))) if dense.size else 0.0
        scale = max(float(np.max(np.abs(dense))) if dense.size else 0.0, 1.0)
        if defect > MULTIPLICATION_ADJOINT_TOL * scale:
            raise ResolutionError(
                f"multiplication matrix of a real field is not self-adjoint: "
                f"defect {defect:.3e} on quadrature {quad.shape}"
            )
        # rounding only
        dense = 0.5 * (dense + dense.conj().T)
    logger.debug("sphere multiplication matrix: %d dofs, quadrature %s", layout.size, quad.shape)
    return BlockMatrix.from_dense(layout.indices, dense, self_adjoint=b.declared_real)


class SphereBasis(SpectralBasis):
    """Spherical harmonics on S² (group SO(3): d = 3, rank 1)."""

    kind = BasisKind.SPHERE

    @property
    def group_data(self) -> Tuple[int, int, int]:
        return 3, 1, 0

    def evaluation_grid(self, in_band: int, out_band: int, N: float) -> SphereQuadrature:
        l_out = max(0, int(math.floor(N - 0.5)))
        return SphereQuadrature.for_band(max(out_band + l_out, 2 * max(in_band, l_out)))

    def synthesize(self, u: SpectralField, grid: SphereQuadrature) -> np.ndarray:
        return sphere_synthesis(u, grid)

    def analyze(self, values: np.ndarray, grid: SphereQuadrature, N: float) -> SpectralField:
        l_out = int(math.floor(N - 0.5))
        return sphere_analysis(values, grid, l_out, self.descriptor)

    def multiplication_matrix(
        self, b: SpectralField, N: Optional[float] = None, indices: Optional[Sequence[EigenIndex]] = None
    ) -> BlockMatrix:
        if indices is None:
            if N is None:
                raise ValueError("multiplication_matrix needs N or an explicit index set")
            indices = build_index_set(self.descriptor, N)
        return sphere_multiplication_matrix(b, indices=indices)
