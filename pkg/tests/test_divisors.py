"""
Test suite for small-divisor analysis: diophantine constants, Melnikov
checks, the regular/singular partition with its clustering, and the
parameter-exclusion scans.

Run with:
    pytest tests/test_divisors.py -v
    pytest tests/test_divisors.py --cov=src/divisors --cov-report=html
"""

import math
import sys
import os

import numpy as np
import pytest

# Ensure project root is on path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.errors import ClusterSoundnessError
from src.divisors.diophantine import (
    continued_fraction,
    convergents,
    diophantine_constant,
    lagrange_tail_estimate,
    nonresonance_margin,
    worst_denominator,
)
from src.divisors.measure import jittered_grid, linear_fit, measure_scan, operator_exclusion_scan
from src.divisors.melnikov import melnikov_check, spectrum_table, weighted_min_divisor
from src.divisors.partition import audit_clusters, cluster_singular, partition_sites
from src.iteration.problem import ProblemSpec
from src.solver.assemble import divisor, divisor_map
from src.spectral.lattice import BasisDescriptor, build_index_set
from src.spectral.nonlinearity import NonlinearitySpec
from src.spectral.torus import TorusBasis

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


# ======================================================================
# Fixtures
# ======================================================================

@pytest.fixture
def t1():
    return BasisDescriptor.torus(1)


@pytest.fixture
def resonant_partition(t1):
    """ϱ = 2, ε = 0.05, a = 0.8288: only D_{±5} falls below ς = 0.5."""
    D = divisor_map(build_index_set(t1, 8), 0.8288, 0.05, 2)
    return partition_sites(D, 0.5)


# ======================================================================
# Diophantine constants
# ======================================================================

class TestDiophantine:
    def test_golden_ratio_constant(self):
        assert diophantine_constant(GOLDEN, 1000, 1.0) == pytest.approx(2.0 - GOLDEN, rel=1e-9)
        n, value = worst_denominator(GOLDEN, 1000, 1.0)
        assert n == 1
        assert value == pytest.approx(2.0 - GOLDEN, rel=1e-9)

    def test_golden_ratio_tail(self):
        assert lagrange_tail_estimate(GOLDEN) == pytest.approx(1.0 / math.sqrt(5.0), abs=1e-3)

    def test_sqrt_two(self):
        value = diophantine_constant(math.sqrt(2.0), 100, 1.0)
        assert value == pytest.approx(2.0 * (3.0 - 2.0 * math.sqrt(2.0)), rel=1e-9)

    def test_rational_is_degenerate(self):
        assert diophantine_constant(0.5, 100, 1.5) == 0.0

    @pytest.mark.parametrize("a", [GOLDEN, math.sqrt(2.0), math.pi, 1.2345])
    def test_constant_non_increasing_in_range(self, a):
        values = [diophantine_constant(a, n_max, 1.5) for n_max in range(1, 301)]
        assert all(later <= earlier for earlier, later in zip(values, values[1:]))

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            diophantine_constant(GOLDEN, 0, 1.5)

    def test_continued_fraction(self):
        assert continued_fraction(GOLDEN, 10) == [1] * 10
        assert continued_fraction(0.5) == [0, 2]

    def test_convergents(self):
        assert convergents([1, 1, 1, 1]) == [(1, 1), (2, 1), (3, 2), (5, 3)]

    def test_nonresonance(self):
        good = nonresonance_margin(GOLDEN, 0.1, 50)
        assert good.passed
        assert 1 <= good.worst_m <= 50
        bad = nonresonance_margin(2.0, 0.1, 50)
        assert not bad.passed
        assert bad.ratio == 0.0


# ======================================================================
# Melnikov condition
# ======================================================================

class TestMelnikov:
    def test_exact_resonance_fails(self):
        # D_5 = 26 − ε a 625 vanishes at ε = 1, a = 26/625
        result = melnikov_check(26.0 / 625.0, 1.0, 2, 10, 0.25, 2.0)
        assert not result.passed
        assert result.worst_index.j in ((5,), (-5,))
        assert abs(result.divisor) < 1e-12

    def test_golden_ratio_passes(self):
        result = melnikov_check(GOLDEN, 1e-3, 2, 10, 0.25, 2.0)
        assert result.passed
        assert result.worst_index.j == (0,)
        assert result.ratio == pytest.approx(4.0)

    def test_divisor_formula(self, t1):
        assert divisor(t1.index(2), 1.5, 0.1, 2) == pytest.approx(5.0 - 0.1 * 1.5 * 16.0)

    def test_weighted_min_matches_check(self):
        values = weighted_min_divisor(np.array([GOLDEN]), 1e-3, 2, 10, 2.0)
        assert values[0] / 0.25 == pytest.approx(melnikov_check(GOLDEN, 1e-3, 2, 10, 0.25, 2.0).ratio)

    def test_spectrum_table_distinct(self):
        lam, shift, weight = spectrum_table(BasisDescriptor.torus(2), 2, 1.0)
        assert list(lam) == [0.0, 1.0, 2.0, 4.0]
        assert weight[0] == 1.0
        assert shift[-1] == pytest.approx(2.0)


# ======================================================================
# Regular/singular partition and clusters
# ======================================================================

class TestPartition:
    def test_singular_sites(self, resonant_partition):
        assert sorted(idx.j[0] for idx in resonant_partition.singular) == [-5, 5]
        assert len(resonant_partition.regular) == 15

    def test_threshold_must_be_positive(self, t1):
        with pytest.raises(ValueError):
            partition_sites({t1.index(0): 1.0}, 0.0)

    def test_separated_pair(self, resonant_partition):
        clustered = cluster_singular(resonant_partition, 0.5, 1.0, strict=True)
        assert [[m.j[0] for m in cl.members] for cl in clustered.clusters] == [[-5], [5]]
        assert clustered.is_sound
        assert all(cl.is_dyadic for cl in clustered.clusters)

    def test_no_singular_sites(self, t1):
        D = divisor_map(build_index_set(t1, 4), GOLDEN, 1e-3, 2)
        clustered = cluster_singular(partition_sites(D, 0.5))
        assert clustered.clusters == ()
        assert clustered.is_sound

    def test_dense_run_is_split_and_audited(self, t1):
        D = {t1.index(k): 0.0 for k in range(1, 9)}
        partition = partition_sites(D, 0.5)
        relaxed = cluster_singular(partition, 0.5, 1.0, strict=False)
        assert not relaxed.is_sound
        assert all(cl.is_dyadic for cl in relaxed.clusters)
        assert any(v.kind == "separation" for v in relaxed.violations)
        assert audit_clusters(relaxed.clusters, 1.0, 0.5) == list(relaxed.violations)
        with pytest.raises(ClusterSoundnessError):
            cluster_singular(partition, 0.5, 1.0, strict=True)

    def test_cluster_lookup(self, resonant_partition):
        clustered = cluster_singular(resonant_partition)
        lookup = clustered.cluster_of()
        assert set(lookup.values()) == {0, 1}


# ======================================================================
# Parameter-exclusion scans
# ======================================================================

class TestMeasureScan:
    def test_grid_is_jittered_and_reproducible(self):
        a = jittered_grid((1.0, 2.0), 200, 7)
        b = jittered_grid((1.0, 2.0), 200, 7)
        assert np.array_equal(a, b)
        cells = np.floor((a - 1.0) * 200).astype(int)
        assert np.array_equal(cells, np.arange(200))

    def test_grid_minimum(self):
        with pytest.raises(ValueError):
            jittered_grid((1.0, 2.0), 50, 0)

    def test_linear_fit(self):
        slope, intercept, r2 = linear_fit([0.1, 0.2, 0.4], [0.01, 0.02, 0.04])
        assert slope == pytest.approx(0.1)
        assert intercept == pytest.approx(0.0, abs=1e-12)
        assert r2 == pytest.approx(1.0)

    def test_rejection_grows_linearly(self):
        gammas = [0.05, 0.1, 0.2, 0.4, 0.8]
        result = measure_scan((1.0, 2.0), 2000, 1e-2, 2, 50, gammas, 0.5, seed=7)
        fractions = [r.rejected_fraction for r in result.rows]
        assert fractions == sorted(fractions)
        assert fractions[-1] > 0.0
        assert result.r_squared >= 0.9

    def test_rejected_set_grows_with_cutoff(self):
        gammas = [0.05, 0.2, 0.8]
        small = measure_scan((1.0, 2.0), 1000, 1e-2, 2, 20, gammas, 0.5, seed=13)
        large = measure_scan((1.0, 2.0), 1000, 1e-2, 2, 50, gammas, 0.5, seed=13)
        assert np.array_equal(small.a_values, large.a_values)
        assert np.all(large.margins <= small.margins)
        for gamma in gammas:
            assert np.all(large.rejected_mask(gamma)[small.rejected_mask(gamma)])
        for lo, hi in zip(small.rows, large.rows):
            assert hi.rejected_fraction >= lo.rejected_fraction

    def test_threads_do_not_change_result(self):
        gammas = [0.1, 0.4]
        one = measure_scan((1.0, 2.0), 400, 1e-2, 2, 20, gammas, 0.5, seed=3, threads=1)
        many = measure_scan((1.0, 2.0), 400, 1e-2, 2, 20, gammas, 0.5, seed=3, threads=4)
        assert np.array_equal(one.margins, many.margins)

    def test_operator_scan_agrees_with_diagonal(self, t1):
        basis = TorusBasis(t1)
        forcing = NonlinearitySpec.polynomial(t1, {0: 1.0})

        def factory(a):
            return ProblemSpec(basis, a, 1e-2, 2, forcing)

        args = ((1.0, 2.0), 100, 1e-2, 2, 5, [0.05, 0.5], 1.0, 11)
        diagonal = operator_exclusion_scan(*args)
        dense = operator_exclusion_scan(*args, problem_factory=factory)
        assert np.allclose(diagonal.margins, dense.margins, rtol=1e-10)
        assert [r.rejected_fraction for r in diagonal.rows] == [r.rejected_fraction for r in dense.rows]
