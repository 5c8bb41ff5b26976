"""
Lattice Spectral — Index lattices, weighted Sobolev norms and truncation projectors.

Shared by the torus and sphere bases. A field is a sparse map from
eigen-indices to coefficient blocks; an index on the torus is a Fourier
multi-index (block of size 1), on S² a degree l (block of size 2l+1,
ordered m = -l..l).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from pyda_models.models import BasisConfig, BasisKind, WeightMode
from src.core.errors import ConfigurationError, NormOverflowError

logger = logging.getLogger(__name__)

MAX_TORUS_DIM = 3
SPHERE_SHIFT = 0.5
# log of the largest double; anything above overflows on exponentiation
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


# ── Basis and indices ────────────────────────────────────

@dataclass(frozen=True)
class BasisDescriptor:
    """Which eigenbasis a field is expanded in."""
    kind: BasisKind
    dim: int = 1
    weight_mode: WeightMode = WeightMode.EXPONENTIAL

    def __post_init__(self):
        if not isinstance(self.kind, BasisKind):
            raise ConfigurationError(f"unsupported basis kind {self.kind!r}", key="basis.kind")
        if self.kind == BasisKind.TORUS and not 1 <= self.dim <= MAX_TORUS_DIM:
            raise ConfigurationError(
                f"torus dimension must be in 1..{MAX_TORUS_DIM}, got {self.dim}", key="basis.dim"
            )
        if self.kind == BasisKind.SPHERE and self.dim != 2:
            object.__setattr__(self, "dim", 2)

    @classmethod
    def torus(cls, n: int = 1, weight_mode: WeightMode = WeightMode.EXPONENTIAL) -> "BasisDescriptor":
        return cls(BasisKind.TORUS, n, weight_mode)

    @classmethod
    def sphere(cls, weight_mode: WeightMode = WeightMode.EXPONENTIAL) -> "BasisDescriptor":
        return cls(BasisKind.SPHERE, 2, weight_mode)

    @classmethod
    def from_config(cls, cfg: BasisConfig, weight_mode: Optional[WeightMode] = None) -> "BasisDescriptor":
        return cls(cfg.kind, cfg.dim, weight_mode or cfg.weight_mode)

    def with_weight_mode(self, mode: WeightMode) -> "BasisDescriptor":
        return BasisDescriptor(self.kind, self.dim, mode)

    def to_config(self) -> BasisConfig:
        return BasisConfig(kind=self.kind, dim=self.dim if self.is_torus else 1, weight_mode=self.weight_mode)

    @property
    def is_torus(self) -> bool:
        return self.kind == BasisKind.TORUS

    @property
    def weight_vector(self) -> Tuple[float, ...]:
        """ρ⃗: zero on the torus; the sphere shift is realised as l + 1/2."""
        if self.is_torus:
            return (0.0,) * self.dim
        return (SPHERE_SHIFT,)

    def index(self, *j: int) -> "EigenIndex":
        """Build an index, accepting either ``index(1, 2)`` or ``index((1, 2))``."""
        if len(j) == 1 and isinstance(j[0], (tuple, list)):
            j = tuple(j[0])
        j = tuple(int(x) for x in j)
        expected = self.dim if self.is_torus else 1
        if len(j) != expected:
            raise ValueError(f"index {j} has length {len(j)}, expected {expected}")
        if not self.is_torus and j[0] < 0:
            raise ValueError(f"sphere degree must be non-negative, got {j[0]}")
        return EigenIndex(j, self.kind)


@dataclass(frozen=True)
class EigenIndex:
    """One eigenspace: Fourier multi-index on T^n, degree l on S²."""
    j: Tuple[int, ...]
    kind: BasisKind = BasisKind.TORUS

    @property
    def eigenvalue(self) -> int:
        """ω_j² − 1, exact: |j|² on the torus, l(l+1) on the sphere."""
        if self.kind == BasisKind.TORUS:
            return sum(x * x for x in self.j)
        l = self.j[0]
        return l * (l + 1)

    @property
    def shift_norm(self) -> float:
        """|j + ρ⃗|."""
        if self.kind == BasisKind.TORUS:
            return math.sqrt(self.eigenvalue)
        return self.j[0] + SPHERE_SHIFT

    @property
    def block_dim(self) -> int:
        return 1 if self.kind == BasisKind.TORUS else 2 * self.j[0] + 1

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        # eigenvalue orders exactly like shift_norm without rounding
        return (self.eigenvalue, self.j)

    def negated(self) -> "EigenIndex":
        """Conjugation partner on the torus; the sphere pairs m with -m inside a block."""
        if self.kind == BasisKind.TORUS:
            return EigenIndex(tuple(-x for x in self.j), self.kind)
        return self

    def __repr__(self) -> str:
        return f"EigenIndex({self.j if len(self.j) > 1 else self.j[0]})"


def lattice_distance(a: EigenIndex, b: EigenIndex) -> float:
    """|j − j'|: Euclidean on the torus, |l − l'| on the sphere."""
    if a.kind == BasisKind.TORUS:
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.j, b.j)))
    return float(abs(a.j[0] - b.j[0]))


@lru_cache(maxsize=256)
def _index_set(basis: BasisDescriptor, N: float) -> Tuple[EigenIndex, ...]:
    if basis.kind == BasisKind.TORUS:
        bound = int(math.floor(N))
        limit = N * N
        rng = range(-bound, bound + 1)
        out = [
            EigenIndex(j, BasisKind.TORUS)
            for j in itertools.product(rng, repeat=basis.dim)
            if sum(x * x for x in j) <= limit
        ]
    elif basis.kind == BasisKind.SPHERE:
        l_max = int(math.floor(N - SPHERE_SHIFT))
        out = [EigenIndex((l,), BasisKind.SPHERE) for l in range(0, l_max + 1)]
    else:
        raise ConfigurationError(f"unsupported basis kind {basis.kind!r}", key="basis.kind")
    out.sort(key=lambda e: e.sort_key)
    return tuple(out)


def build_index_set(basis: BasisDescriptor, N: float) -> Tuple[EigenIndex, ...]:
    """
    Enumerate J_N^+ = {j : |j + ρ⃗| ≤ N}.

    Args:
        basis: Basis descriptor.
        N: Cutoff, at least 1.

    Returns:
        Indices sorted by (shift_norm, lexicographic j).
    """
    if N < 1:
        raise ValueError(f"cutoff N must be >= 1, got {N}")
    return _index_set(basis, float(N))


# ── Index layout ─────────────────────────────────────────

class IndexLayout:
    """Flattening of an ordered index list into a coefficient vector."""

    def __init__(self, indices: Sequence[EigenIndex]):
        self.indices: Tuple[EigenIndex, ...] = tuple(indices)
        self.offsets: Dict[EigenIndex, int] = {}
        pos = 0
        for idx in self.indices:
            self.offsets[idx] = pos
            pos += idx.block_dim
        self.size = pos

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, idx: EigenIndex) -> bool:
        return idx in self.offsets

    def slice(self, idx: EigenIndex) -> slice:
        start = self.offsets[idx]
        return slice(start, start + idx.block_dim)

    def dofs(self, indices: Iterable[EigenIndex]) -> np.ndarray:
        """Flat positions of the given indices, in the given order."""
        out: List[int] = []
        for idx in indices:
            start = self.offsets[idx]
            out.extend(range(start, start + idx.block_dim))
        return np.asarray(out, dtype=np.intp)

    def diagonal(self, values: Mapping[EigenIndex, float]) -> np.ndarray:
        """Repeat one scalar per index over its block."""
        out = np.empty(self.size, dtype=float)
        for idx in self.indices:
            out[self.slice(idx)] = values[idx]
        return out


# ── Fields ───────────────────────────────────────────────

def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


class SpectralField:
    """Coefficients of u over an eigen-index set. Immutable."""

    __slots__ = ("basis", "_coeffs", "declared_real")

    def __init__(
        self,
        basis: BasisDescriptor,
        coeffs: Optional[Mapping[EigenIndex, object]] = None,
        declared_real: bool = False,
    ):
        self.basis = basis
        self.declared_real = declared_real
        stored: Dict[EigenIndex, np.ndarray] = {}
        for idx, block in (coeffs or {}).items():
            if idx.kind != basis.kind:
                raise ValueError(f"index {idx} does not belong to a {basis.kind.value} basis")
            arr = _freeze(np.atleast_1d(block))
            if arr.shape[0] != idx.block_dim:
                raise ValueError(f"block for {idx} has length {arr.shape[0]}, expected {idx.block_dim}")
            if np.any(arr != 0):
                stored[idx] = arr
        self._coeffs = MappingProxyType(dict(sorted(stored.items(), key=lambda kv: kv[0].sort_key)))

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zeros(cls, basis: BasisDescriptor, declared_real: bool = True) -> "SpectralField":
        return cls(basis, {}, declared_real)

    @classmethod
    def from_modes(
        cls, basis: BasisDescriptor, modes: Mapping[object, object], declared_real: bool = False
    ) -> "SpectralField":
        """Build from ``{j: value}`` with plain tuples/ints as keys."""
        coeffs = {}
        for key, value in modes.items():
            idx = key if isinstance(key, EigenIndex) else basis.index(key if isinstance(key, tuple) else (key,))
            coeffs[idx] = value
        return cls(basis, coeffs, declared_real)

    @classmethod
    def from_vector(
        cls, basis: BasisDescriptor, layout: IndexLayout, vec: np.ndarray, declared_real: bool = False
    ) -> "SpectralField":
        return cls(basis, {idx: vec[layout.slice(idx)] for idx in layout.indices}, declared_real)

    # -- access ---------------------------------------------------------------

    @property
    def coeffs(self) -> Mapping[EigenIndex, np.ndarray]:
        return self._coeffs

    def coefficient(self, idx: EigenIndex) -> np.ndarray:
        block = self._coeffs.get(idx)
        if block is None:
            return np.zeros(idx.block_dim, dtype=complex)
        return block

    def __getitem__(self, key) -> complex:
        """Scalar torus coefficient, e.g. ``u[1]`` or ``u[(1, 0)]``."""
        idx = key if isinstance(key, EigenIndex) else self.basis.index(key if isinstance(key, tuple) else (key,))
        block = self.coefficient(idx)
        return block[0] if block.shape[0] == 1 else block

    def items(self) -> Iterator[Tuple[EigenIndex, np.ndarray]]:
        return iter(self._coeffs.items())

    def support(self) -> Tuple[EigenIndex, ...]:
        return tuple(self._coeffs.keys())

    def max_shift_norm(self) -> float:
        return max((idx.shift_norm for idx in self._coeffs), default=0.0)

    def max_degree(self) -> int:
        """Largest |j_k| component (torus) or l (sphere): the band limit of the field."""
        if not self._coeffs:
            return 0
        return max(max(abs(x) for x in idx.j) for idx in self._coeffs)

    def to_vector(self, layout: IndexLayout) -> np.ndarray:
        vec = np.zeros(layout.size, dtype=complex)
        for idx, block in self._coeffs.items():
            if idx in layout:
                vec[layout.slice(idx)] = block
        return vec

    def is_zero(self) -> bool:
        return not self._coeffs

    # -- arithmetic -----------------------------------------------------------

    def _combine(self, other: "SpectralField", sign: float) -> "SpectralField":
        if other.basis.kind != self.basis.kind or other.basis.dim != self.basis.dim:
            raise ValueError("cannot combine fields over different bases")
        out: Dict[EigenIndex, np.ndarray] = {k: np.array(v) for k, v in self._coeffs.items()}
        for idx, block in other._coeffs.items():
            out[idx] = out[idx] + sign * block if idx in out else sign * block
        return SpectralField(self.basis, out, self.declared_real and other.declared_real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self._combine(other, -1.0)

    def __neg__(self) -> "SpectralField":
        return self.scale(-1.0)

    def scale(self, factor: complex) -> "SpectralField":
        real = self.declared_real and complex(factor).imag == 0.0
        return SpectralField(self.basis, {k: factor * v for k, v in self._coeffs.items()}, real)

    def __mul__(self, factor: complex) -> "SpectralField":
        return self.scale(factor)

    __rmul__ = __mul__

    def norm(self, s: float = 0.0) -> float:
        return sobolev_norm(self, s)

    def __repr__(self) -> str:
        return (
            f"SpectralField({self.basis.kind.value}, modes={len(self._coeffs)}, "
            f"real={self.declared_real})"
        )


# ── Norms and projectors ─────────────────────────────────

def log_weight(shift: float, s: float, mode: WeightMode) -> float:
    """log of the squared Sobolev weight at a given shift norm."""
    if mode == WeightMode.POLYNOMIAL:
        return 2.0 * s * math.log1p(shift)
    return 2.0 * shift * s


def sobolev_norm(u: SpectralField, s: float) -> float:
    """
    ‖u‖_s² = Σ_j w_s(j)·‖u_j‖², accumulated in log-magnitude form.

    Exponential weights are e^{2|j+ρ⃗|s}, polynomial weights (1+|j+ρ⃗|)^{2s}.
    """
    if s < 0:
        raise ValueError(f"Sobolev index must be non-negative, got {s}")
    if u.is_zero():
        return 0.0
    if s == 0:
        return float(np.sqrt(sum(float(np.vdot(b, b).real) for _, b in u.items())))

    mode = u.basis.weight_mode
    idxs: List[EigenIndex] = []
    logs: List[float] = []
    for idx, block in u.items():
        mag2 = float(np.vdot(block, block).real)
        if mag2 == 0.0:
            continue
        idxs.append(idx)
        logs.append(log_weight(idx.shift_norm, s, mode) + math.log(mag2))
    log_total = float(logsumexp(logs))
    if 0.5 * log_total > _LOG_FLOAT_MAX:
        worst = idxs[int(np.argmax(logs))]
        raise NormOverflowError(worst, 0.5 * log_total)
    return math.exp(0.5 * log_total)


def project(u: SpectralField, N: float) -> SpectralField:
    """Π^(N): keep modes with shift_norm ≤ N."""
    kept = {idx: b for idx, b in u.items() if idx.shift_norm <= N}
    return SpectralField(u.basis, kept, u.declared_real)


def smoothing_factor(N: float, d: float, mode: WeightMode) -> float:
    """Weight ratio w_{s+d}/w_s at the cutoff; bounds ‖Π^(N)u‖_{s+d}/‖u‖_s."""
    if mode == WeightMode.POLYNOMIAL:
        return (1.0 + N) ** d
    return math.exp(N * d)


# ── Reality structure ────────────────────────────────────

def _sphere_signs(l: int) -> np.ndarray:
    m = np.arange(-l, l + 1)
    return np.where(m % 2 == 0, 1.0, -1.0)


def _partner_block(u: SpectralField, idx: EigenIndex) -> np.ndarray:
    """The block a real field must equal: conj(u_{-j}) or (-1)^m conj(u_{l,-m})."""
    if idx.kind == BasisKind.TORUS:
        return np.conj(u.coefficient(idx.negated()))
    block = u.coefficient(idx)
    return _sphere_signs(idx.j[0]) * np.conj(block[::-1])


def enforce_reality(u: SpectralField) -> SpectralField:
    """Symmetrise so that the field is the expansion of a real function."""
    keys = set(u.support())
    if u.basis.is_torus:
        keys |= {idx.negated() for idx in keys}
    out = {}
    for idx in keys:
        out[idx] = 0.5 * (u.coefficient(idx) + _partner_block(u, idx))
    return SpectralField(u.basis, out, declared_real=True)


def reality_defect(u: SpectralField) -> float:
    """Largest violation of the conjugation relation."""
    worst = 0.0
    for idx, block in u.items():
        worst = max(worst, float(np.max(np.abs(block - _partner_block(u, idx)))))
    return worst


def is_real(u: SpectralField, tol: float = 1e-12) -> bool:
    scale = max((float(np.max(np.abs(b))) for _, b in u.items()), default=0.0)
    return reality_defect(u) <= tol * max(scale, 1.0)


# ── Random fields ────────────────────────────────────────

def random_field(
    basis: BasisDescriptor,
    N: float,
    rng: np.random.Generator,
    decay: float = 1.0,
    scale: float = 1.0,
    declared_real: bool = True,
) -> SpectralField:
    """Gaussian coefficients damped by e^{−decay·|j+ρ⃗|} on J_N^+."""
    coeffs = {}
    for idx in build_index_set(basis, N):
        size = idx.block_dim
        block = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        coeffs[idx] = scale * math.exp(-decay * idx.shift_norm) * block
    u = SpectralField(basis, coeffs, declared_real=False)
    return enforce_reality(u) if declared_real else u
