"""
Block Matrix — Operators stored as blocks A_j^{j'} between eigenspaces.

Blocks are kept sparsely keyed by (j, j'); absent blocks are exactly zero.
The dense form is materialised on demand for factorisations.
"""

import logging
import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.spectral.lattice import EigenIndex, IndexLayout, lattice_distance

logger = logging.getLogger(__name__)

ADJOINT_TOL = 1e-12

BlockKey = Tuple[EigenIndex, EigenIndex]


class BlockMatrix:
    """Immutable block-sparse operator on an ordered index set."""

    def __init__(
        self,
        indices: Sequence[EigenIndex],
        blocks: Mapping[BlockKey, np.ndarray],
        self_adjoint: bool = False,
        check: bool = True,
        col_indices: Optional[Sequence[EigenIndex]] = None,
    ):
        self.rows = IndexLayout(indices)
        self.cols = IndexLayout(col_indices) if col_indices is not None else self.rows
        self.self_adjoint = self_adjoint
        stored: Dict[BlockKey, np.ndarray] = {}
        for (j, jp), block in blocks.items():
            arr = np.array(block, dtype=complex, copy=True).reshape(j.block_dim, jp.block_dim)
            arr.setflags(write=False)
            stored[(j, jp)] = arr
        self._blocks = stored
        if self_adjoint and check:
            defect = self.adjoint_defect()
            scale = max(1.0, self.max_abs())
            if defect > ADJOINT_TOL * scale:
                raise ValueError(f"matrix declared self-adjoint but defect is {defect:.3e}")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_dense(
        cls,
        indices: Sequence[EigenIndex],
        matrix: np.ndarray,
        self_adjoint: bool = False,
        drop_tol: float = 0.0,
        col_indices: Optional[Sequence[EigenIndex]] = None,
    ) -> "BlockMatrix":
        rows = IndexLayout(indices)
        cols = IndexLayout(col_indices) if col_indices is not None else rows
        blocks = {}
        for j in rows.indices:
            rs = rows.slice(j)
            for jp in cols.indices:
                block = matrix[rs, cols.slice(jp)]
                if np.any(np.abs(block) > drop_tol):
                    blocks[(j, jp)] = block
        return cls(rows.indices, blocks, self_adjoint=self_adjoint, col_indices=col_indices)

    @classmethod
    def diagonal(cls, indices: Sequence[EigenIndex], values: Mapping[EigenIndex, complex]) -> "BlockMatrix":
        blocks = {(j, j): values[j] * np.eye(j.block_dim) for j in indices if values[j] != 0}
        return cls(indices, blocks, self_adjoint=all(np.imag(values[j]) == 0 for j in indices))

    @classmethod
    def identity(cls, indices: Sequence[EigenIndex], c: complex = 1.0) -> "BlockMatrix":
        return cls.diagonal(indices, {j: c for j in indices})

    # -- access ---------------------------------------------------------------

    @property
    def indices(self) -> Tuple[EigenIndex, ...]:
        return self.rows.indices

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows.size, self.cols.size)

    def block(self, j: EigenIndex, jp: EigenIndex) -> np.ndarray:
        arr = self._blocks.get((j, jp))
        if arr is None:
            return np.zeros((j.block_dim, jp.block_dim), dtype=complex)
        return arr

    def stored_blocks(self) -> Iterable[Tuple[BlockKey, np.ndarray]]:
        return self._blocks.items()

    def __len__(self) -> int:
        return len(self._blocks)

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(b))) for b in self._blocks.values()), default=0.0)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        for (j, jp), block in self._blocks.items():
            out[self.rows.slice(j), self.cols.slice(jp)] = block
        return out

    # -- structure ------------------------------------------------------------

    def adjoint_defect(self) -> float:
        """max ‖A_j^{j'} − (A_{j'}^j)†‖ over stored pairs."""
        worst = 0.0
        for (j, jp), block in self._blocks.items():
            other = self.block(jp, j)
            worst = max(worst, float(np.max(np.abs(block - other.conj().T))))
        return worst

    def weighted_norm(self, s: float) -> float:
        """|A|_s = sup_j sqrt(Σ_{j'} e^{2s|j−j'|} ‖A_j^{j'}‖₀²)."""
        rows: Dict[EigenIndex, float] = {}
        for (j, jp), block in self._blocks.items():
            op = float(np.linalg.norm(block, 2))
            rows[j] = rows.get(j, 0.0) + math.exp(2.0 * s * lattice_distance(j, jp)) * op * op
        return math.sqrt(max(rows.values(), default=0.0))

    def block_norms(self) -> Dict[BlockKey, float]:
        return {key: float(np.linalg.norm(b, 2)) for key, b in self._blocks.items()}

    def sparsified(self, tol: float) -> "BlockMatrix":
        """Drop blocks whose entries are all below ``tol``."""
        kept = {k: b for k, b in self._blocks.items() if np.max(np.abs(b)) > tol}
        return BlockMatrix(self.rows.indices, kept, self.self_adjoint, check=False,
                           col_indices=self.cols.indices if self.cols is not self.rows else None)

    # -- algebra --------------------------------------------------------------

    def scale(self, c: complex) -> "BlockMatrix":
        adj = self.self_adjoint and complex(c).imag == 0.0
        return BlockMatrix(self.rows.indices, {k: c * b for k, b in self._blocks.items()}, adj, check=False,
                           col_indices=self.cols.indices if self.cols is not self.rows else None)

    def __neg__(self) -> "BlockMatrix":
        return self.scale(-1.0)

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        if other.rows.indices != self.rows.indices or other.cols.indices != self.cols.indices:
            raise ValueError("block matrices live on different index sets")
        out = dict(self._blocks)
        for k, b in other._blocks.items():
            out[k] = out[k] + b if k in out else b
        return BlockMatrix(self.rows.indices, out, self.self_adjoint and other.self_adjoint, check=False,
                           col_indices=self.cols.indices if self.cols is not self.rows else None)

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.rows.size, dtype=complex)
        for (j, jp), block in self._blocks.items():
            out[self.rows.slice(j)] += block @ vec[self.cols.slice(jp)]
        return out

    def __repr__(self) -> str:
        return f"BlockMatrix({self.shape[0]}x{self.shape[1]}, blocks={len(self._blocks)}, sa={self.self_adjoint})"
