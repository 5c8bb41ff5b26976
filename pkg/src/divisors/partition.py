"""
Partition — Regular/singular site split and dyadic clustering of singular sites.

Clustering runs in three passes:

1. single linkage on pairs closer than c(M + M')^λ,
2. merging of clusters whose separation is below c(M_α + M_β)^λ,
3. splitting of non-dyadic clusters at their largest shift-norm gap.

The result is audited afterwards; violations of either cluster property
are returned as structured records (and raised in strict mode).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from src.core.errors import ClusterSoundnessError
from src.spectral.lattice import EigenIndex, lattice_distance

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.5
DEFAULT_C = 1.0


@dataclass(frozen=True)
class Cluster:
    """Ω_α with its extreme shift norms."""
    members: Tuple[EigenIndex, ...]

    @property
    def M(self) -> float:
        return max(idx.shift_norm for idx in self.members)

    @property
    def m(self) -> float:
        return min(idx.shift_norm for idx in self.members)

    @property
    def is_dyadic(self) -> bool:
        return self.M <= 2.0 * self.m

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterViolation:
    """One failed cluster property with its witnesses."""
    kind: str  # "dyadic" | "separation"
    clusters: Tuple[int, ...]
    lhs: float
    rhs: float

    def __str__(self) -> str:
        if self.kind == "dyadic":
            return f"cluster {self.clusters[0]} not dyadic: M={self.lhs:g} > 2m={self.rhs:g}"
        return (
            f"clusters {self.clusters[0]},{self.clusters[1]} too close: "
            f"d={self.lhs:g} < c(M+M')^lambda={self.rhs:g}"
        )


@dataclass(frozen=True)
class SitePartition:
    """R/S split of J_N^+ at threshold ς, optionally with clusters of S."""
    threshold: float
    regular: Tuple[EigenIndex, ...]
    singular: Tuple[EigenIndex, ...]
    clusters: Tuple[Cluster, ...] = ()
    c: float = DEFAULT_C
    lam: float = DEFAULT_LAMBDA
    violations: Tuple[ClusterViolation, ...] = field(default=())

    @property
    def all_indices(self) -> Tuple[EigenIndex, ...]:
        return tuple(sorted(self.regular + self.singular, key=lambda e: e.sort_key))

    @property
    def is_sound(self) -> bool:
        return not self.violations

    def cluster_of(self) -> Dict[EigenIndex, int]:
        return {idx: k for k, cl in enumerate(self.clusters) for idx in cl.members}


def partition_sites(D: Mapping[EigenIndex, float], varsigma: float) -> SitePartition:
    """j ∈ S ⇔ |D_j| < ς; both lists keep the canonical index order."""
    if varsigma <= 0:
        raise ValueError(f"threshold must be positive, got {varsigma}")
    ordered = sorted(D, key=lambda e: e.sort_key)
    regular = tuple(j for j in ordered if abs(D[j]) >= varsigma)
    singular = tuple(j for j in ordered if abs(D[j]) < varsigma)
    return SitePartition(varsigma, regular, singular)


# ── Clustering ───────────────────────────────────────────

def _set_distance(a: Cluster, b: Cluster) -> float:
    return min(lattice_distance(x, y) for x in a.members for y in b.members)


def _required(c: float, lam: float, a: Cluster, b: Cluster) -> float:
    return c * (a.M + b.M) ** lam


def _canonical(members: Sequence[EigenIndex]) -> Cluster:
    return Cluster(tuple(sorted(members, key=lambda e: e.sort_key)))


def _link_pairs(sites: Sequence[EigenIndex], c: float, lam: float) -> List[Cluster]:
    parent = list(range(len(sites)))

    def find(k: int) -> int:
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for i, x in enumerate(sites):
        for k in range(i + 1, len(sites)):
            y = sites[k]
            if lattice_distance(x, y) < c * (x.shift_norm + y.shift_norm) ** lam:
                ri, rk = find(i), find(k)
                if ri != rk:
                    parent[max(ri, rk)] = min(ri, rk)
    groups: Dict[int, List[EigenIndex]] = {}
    for i, x in enumerate(sites):
        groups.setdefault(find(i), []).append(x)
    return [_canonical(g) for _, g in sorted(groups.items())]


def _merge_close(clusters: List[Cluster], c: float, lam: float) -> List[Cluster]:
    merged = True
    while merged:
        merged = False
        for i in range(len(clusters)):
            for k in range(i + 1, len(clusters)):
                if _set_distance(clusters[i], clusters[k]) < _required(c, lam, clusters[i], clusters[k]):
                    joined = _canonical(clusters[i].members + clusters[k].members)
                    clusters = clusters[:i] + [joined] + clusters[i + 1:k] + clusters[k + 1:]
                    merged = True
                    break
            if merged:
                break
    return clusters


def _split_dyadic(cluster: Cluster) -> List[Cluster]:
    if cluster.is_dyadic or len(cluster) == 1:
        return [cluster]
    by_shift = sorted(cluster.members, key=lambda e: (e.shift_norm, e.j))
    best, cut = None, None
    for k in range(1, len(by_shift)):
        lo, hi = by_shift[k - 1].shift_norm, by_shift[k].shift_norm
        if hi == lo:
            continue
        key = (hi - lo, hi / lo if lo > 0 else float("inf"))
        if best is None or key > best:
            best, cut = key, k
    if cut is None:
        return [cluster]
    return _split_dyadic(_canonical(by_shift[:cut])) + _split_dyadic(_canonical(by_shift[cut:]))


def audit_clusters(clusters: Sequence[Cluster], c: float, lam: float) -> List[ClusterViolation]:
    """Check the dyadic and separation properties for every cluster and pair."""
    out: List[ClusterViolation] = []
    for k, cl in enumerate(clusters):
        if not cl.is_dyadic:
            out.append(ClusterViolation("dyadic", (k,), cl.M, 2.0 * cl.m))
    for i in range(len(clusters)):
        for k in range(i + 1, len(clusters)):
            d = _set_distance(clusters[i], clusters[k])
            need = _required(c, lam, clusters[i], clusters[k])
            if d < need:
                out.append(ClusterViolation("separation", (i, k), d, need))
    return out


def cluster_singular(
    partition: SitePartition,
    lambda_target: float = DEFAULT_LAMBDA,
    c: float = DEFAULT_C,
    strict: bool = False,
) -> SitePartition:
    """
    Group S into dyadic, mutually separated clusters.

    Args:
        partition: Output of ``partition_sites``.
        lambda_target: Separation exponent λ.
        c: Separation constant.
        strict: Raise ``ClusterSoundnessError`` instead of returning violations.

    Returns:
        The partition with clusters (ordered by smallest member) and any
        violations found by the audit.
    """
    if not partition.singular:
        return replace(partition, clusters=(), c=c, lam=lambda_target, violations=())
    sites = sorted(partition.singular, key=lambda e: (e.shift_norm, e.j))
    clusters = _link_pairs(sites, c, lambda_target)
    clusters = _merge_close(clusters, c, lambda_target)
    split: List[Cluster] = []
    for cl in clusters:
        split.extend(_split_dyadic(cl))
    split.sort(key=lambda cl: cl.members[0].sort_key)
    violations = audit_clusters(split, c, lambda_target)
    logger.debug(
        "clustered %d singular sites into %d clusters (%d violations)",
        len(sites), len(split), len(violations),
    )
    if violations and strict:
        raise ClusterSoundnessError(violations)
    if violations:
        logger.warning("cluster soundness: %s", "; ".join(str(v) for v in violations[:3]))
    return replace(partition, clusters=tuple(split), c=c, lam=lambda_target, violations=tuple(violations))
