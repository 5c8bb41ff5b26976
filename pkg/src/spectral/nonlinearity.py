"""
Nonlinearity — Polynomial-in-u right-hand sides f(x, u) = Σ_q c_q(x) u^q.

The coefficient fields c_q are spectral fields; evaluation happens on a
dealiased grid supplied by the basis (see ``SpectralBasis``).
"""

import logging
import numbers
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from pyda_models.models import MonomialConfig, TermShape
from src.core.errors import UnsupportedNonlinearityError
from src.spectral.lattice import BasisDescriptor, EigenIndex, SpectralField, is_real

logger = logging.getLogger(__name__)

# value of Y_0^0 is 1/sqrt(4π); constants on S² carry this factor
_SPHERE_CONST = float(np.sqrt(4.0 * np.pi))


@dataclass(frozen=True)
class Monomial:
    """c(x)·u^degree."""
    degree: int
    coefficient: SpectralField

    def __post_init__(self):
        if isinstance(self.degree, bool) or not isinstance(self.degree, numbers.Integral) or self.degree < 0:
            raise UnsupportedNonlinearityError(
                f"monomial degree must be a non-negative integer, got {self.degree!r}"
            )


def constant_field(basis: BasisDescriptor, c: complex) -> SpectralField:
    """The constant function c as a spectral field."""
    if c == 0:
        return SpectralField.zeros(basis)
    if basis.is_torus:
        return SpectralField(basis, {basis.index((0,) * basis.dim): c}, declared_real=np.imag(c) == 0)
    return SpectralField(basis, {basis.index(0): c * _SPHERE_CONST}, declared_real=np.imag(c) == 0)


class NonlinearitySpec:
    """f(x, u) as a list of monomials in u with spectral coefficient fields."""

    def __init__(self, basis: BasisDescriptor, monomials: Sequence[Monomial]):
        merged: Dict[int, SpectralField] = {}
        for mono in monomials:
            if mono.coefficient.basis.kind != basis.kind:
                raise UnsupportedNonlinearityError("coefficient field lives on a different basis")
            prev = merged.get(mono.degree)
            merged[mono.degree] = mono.coefficient if prev is None else prev + mono.coefficient
        self.basis = basis
        self.monomials: Tuple[Monomial, ...] = tuple(
            Monomial(q, c) for q, c in sorted(merged.items()) if not c.is_zero()
        )

    # -- constructors ---------------------------------------------------------

    @classmethod
    def polynomial(
        cls, basis: BasisDescriptor, coefficients: Mapping[int, Union[complex, SpectralField]]
    ) -> "NonlinearitySpec":
        """``{q: c_q}`` with scalars promoted to constant fields."""
        monos = []
        for q, c in coefficients.items():
            field = c if isinstance(c, SpectralField) else constant_field(basis, c)
            monos.append(Monomial(q, field))
        return cls(basis, monos)

    @classmethod
    def from_config(cls, basis: BasisDescriptor, monomials: Sequence[MonomialConfig]) -> "NonlinearitySpec":
        monos = []
        for cfg in monomials:
            field = constant_field(basis, cfg.coefficient)
            terms: Dict[EigenIndex, np.ndarray] = {}
            for term in cfg.terms:
                for idx, pos, value in _expand_term(basis, term.index, term.value, term.imag, term.shape):
                    block = terms.setdefault(idx, np.zeros(idx.block_dim, dtype=complex))
                    block[pos] += value
            field = field + SpectralField(basis, terms, declared_real=True)
            field = SpectralField(basis, dict(field.items()), declared_real=is_real(field))
            monos.append(Monomial(cfg.degree, field))
        return cls(basis, monos)

    # -- structure ------------------------------------------------------------

    def coefficient(self, q: int) -> SpectralField:
        for mono in self.monomials:
            if mono.degree == q:
                return mono.coefficient
        return SpectralField.zeros(self.basis)

    @property
    def max_degree(self) -> int:
        return max((m.degree for m in self.monomials), default=0)

    @property
    def leading_degree(self) -> int:
        """p: lowest u-degree ≥ 1 with nonzero coefficient, at least 2."""
        degrees = [m.degree for m in self.monomials if m.degree >= 1]
        return max(2, min(degrees)) if degrees else 2

    @property
    def coefficient_band(self) -> int:
        return max((m.coefficient.max_degree() for m in self.monomials), default=0)

    @property
    def is_real(self) -> bool:
        return all(m.coefficient.declared_real for m in self.monomials)

    def is_u_independent(self) -> bool:
        return all(m.degree == 0 for m in self.monomials)

    def output_band(self, u_band: int) -> int:
        """Band limit of f(x, u) when u has band ``u_band``."""
        return max((m.degree * u_band + m.coefficient.max_degree() for m in self.monomials), default=0)

    def derivative(self) -> "NonlinearitySpec":
        """∂_u f = Σ q c_q u^{q−1}."""
        return NonlinearitySpec(
            self.basis,
            [Monomial(m.degree - 1, m.coefficient.scale(m.degree)) for m in self.monomials if m.degree >= 1],
        )

    def without_forcing(self) -> "NonlinearitySpec":
        return NonlinearitySpec(self.basis, [m for m in self.monomials if m.degree >= 1])

    def rescaled(self, delta: float, p: Optional[int] = None) -> "NonlinearitySpec":
        """f̃(δ, u) = δ^{−p} f(x, δu) for q ≥ 1; the forcing is kept in rescaled units."""
        p = p or self.leading_degree
        monos = []
        for m in self.monomials:
            factor = 1.0 if m.degree == 0 else delta ** (m.degree - p)
            monos.append(Monomial(m.degree, m.coefficient.scale(factor)))
        return NonlinearitySpec(self.basis, monos)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, u_values: np.ndarray, synthesize: Callable[[SpectralField], np.ndarray]) -> np.ndarray:
        """Pointwise f(x, u) on a grid, given u's samples and a synthesis routine."""
        total = np.zeros_like(u_values, dtype=complex)
        for mono in self.monomials:
            c_values = synthesize(mono.coefficient)
            if mono.degree == 0:
                total = total + c_values
            else:
                total = total + c_values * u_values ** mono.degree
        return total

    def __repr__(self) -> str:
        parts = [f"c{m.degree}*u^{m.degree}" for m in self.monomials]
        return f"NonlinearitySpec({' + '.join(parts) or '0'})"


def _expand_term(
    basis: BasisDescriptor, index: List[int], value: float, imag: float, shape: TermShape
) -> List[Tuple[EigenIndex, int, complex]]:
    """Expand one config term into (index, position-in-block, value) triples."""
    if basis.is_torus:
        if len(index) != basis.dim:
            raise UnsupportedNonlinearityError(
                f"torus term index {index} must have {basis.dim} component(s)"
            )
        idx = basis.index(tuple(index))
        partner = idx.negated()
        pos, partner_pos = 0, 0
        sign = 1.0
    else:
        if len(index) != 2:
            raise UnsupportedNonlinearityError(f"sphere term index {index} must be [l, m]")
        l, m = index
        if abs(m) > l:
            raise UnsupportedNonlinearityError(f"sphere term needs |m| <= l, got {index}")
        idx = partner = basis.index(l)
        pos, partner_pos = l + m, l - m
        sign = -1.0 if m % 2 else 1.0

    if shape == TermShape.MODE:
        return [(idx, pos, complex(value, imag))]
    half = 0.5 * value
    c = complex(half, 0.0) if shape == TermShape.COS else complex(0.0, -half)
    if idx == partner and pos == partner_pos:
        # self-conjugate mode: cos gives the full value, sin vanishes
        return [(idx, pos, complex(value, 0.0))] if shape == TermShape.COS else []
    return [(idx, pos, c), (partner, partner_pos, sign * np.conj(c))]
