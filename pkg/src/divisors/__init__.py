"""
Small divisors — Diophantine constants, Melnikov checks, site partitions and measure scans.

Public API
----------
>>> from src.divisors import melnikov_check, partition_sites, cluster_singular
>>> melnikov_check(a=26 / 625, epsilon=1.0, rho=2, N=10, gamma=0.25, tau=2.0).passed
False
"""

from src.divisors.diophantine import (
    NonresonanceResult,
    continued_fraction,
    convergents,
    diophantine_constant,
    lagrange_tail_estimate,
    nonresonance_margin,
    worst_denominator,
)
from src.divisors.measure import (
    MeasureScanResult,
    jittered_grid,
    linear_fit,
    measure_scan,
    operator_exclusion_scan,
)
from src.divisors.melnikov import MelnikovResult, melnikov_check, weighted_min_divisor
from src.divisors.partition import (
    Cluster,
    ClusterViolation,
    SitePartition,
    audit_clusters,
    cluster_singular,
    partition_sites,
)

__all__ = [
    # Diophantine
    "diophantine_constant",
    "worst_denominator",
    "continued_fraction",
    "convergents",
    "lagrange_tail_estimate",
    "nonresonance_margin",
    "NonresonanceResult",
    # Melnikov
    "MelnikovResult",
    "melnikov_check",
    "weighted_min_divisor",
    # Partition
    "Cluster",
    "ClusterViolation",
    "SitePartition",
    "partition_sites",
    "cluster_singular",
    "audit_clusters",
    # Measure
    "MeasureScanResult",
    "jittered_grid",
    "linear_fit",
    "measure_scan",
    "operator_exclusion_scan",
]
