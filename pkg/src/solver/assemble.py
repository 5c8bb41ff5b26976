"""
Assemble — The truncated linearized operator L^(N) = D + εT.

D_j = λ_j + 1 − εa·λ_j^ϱ with λ_j the Laplace eigenvalue (exact integer
arithmetic before the final float conversion). T is the multiplication
matrix of −∂_u f(x, u); the sign is carried by T so the operator is
always applied as D + εT.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Mapping, Sequence, Tuple

import numpy as np

from src.solver.block_matrix import BlockMatrix
from src.spectral.lattice import EigenIndex, IndexLayout, SpectralField

if TYPE_CHECKING:  # pragma: no cover
    from src.iteration.problem import ProblemSpec

logger = logging.getLogger(__name__)


def divisor(idx: EigenIndex, a: float, epsilon: float, rho: int) -> float:
    """D_j for one eigenspace."""
    lam = idx.eigenvalue
    return float(lam + 1) - epsilon * a * float(lam ** rho)


def divisor_map(indices: Sequence[EigenIndex], a: float, epsilon: float, rho: int) -> Dict[EigenIndex, float]:
    return {idx: divisor(idx, a, epsilon, rho) for idx in indices}


@dataclass(frozen=True)
class LinearizedOperator:
    """D (one value per eigenspace) plus the coupling T, on a common index set."""
    D: Mapping[EigenIndex, float]
    T: BlockMatrix
    epsilon: float

    @property
    def indices(self) -> Tuple[EigenIndex, ...]:
        return self.T.indices

    @property
    def layout(self) -> IndexLayout:
        return self.T.rows

    @property
    def size(self) -> int:
        return self.T.rows.size

    def d_vector(self) -> np.ndarray:
        """D repeated over each block."""
        return self.layout.diagonal(self.D)

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.d_vector() * vec + self.epsilon * self.T.matvec(vec)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.d_vector()).astype(complex) + self.epsilon * self.T.to_dense()

    def apply(self, u: SpectralField) -> SpectralField:
        vec = self.matvec(u.to_vector(self.layout))
        return SpectralField.from_vector(u.basis, self.layout, vec, declared_real=u.declared_real)


def assemble_linearized(problem: "ProblemSpec", u_current: SpectralField, N: float) -> LinearizedOperator:
    """
    Build L^(N) linearized at ``u_current``.

    b = ∂_u f(x, u) is taken at cutoff 2N so every entry b_{j−j'} with
    j, j' in J_N^+ is exact.
    """
    indices = problem.basis.index_set(N)
    D = divisor_map(indices, problem.a, problem.epsilon, problem.rho)
    if problem.epsilon == 0.0 or problem.nonlinearity.derivative().monomials == ():
        T = BlockMatrix(indices, {}, self_adjoint=True)
    else:
        b = problem.basis.linearized_coeff(problem.nonlinearity, u_current, 2.0 * N)
        T = -problem.basis.multiplication_matrix(b, indices=indices)
    logger.debug("assembled L^(%g): %d sites, %d coupling blocks", N, len(indices), len(T))
    return LinearizedOperator(D, T, problem.epsilon)
