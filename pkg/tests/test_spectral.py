"""
Test suite for the spectral layer: index sets, Sobolev norms, projectors,
torus and sphere transforms, multiplication operators and nonlinearities.

Run with:
    pytest tests/test_spectral.py -v
    pytest tests/test_spectral.py --cov=src/spectral --cov-report=html
"""

import math
import sys
import os

import numpy as np
import pytest

# Ensure project root is on path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pyda_models.models import BasisConfig, BasisKind, ModeTerm, MonomialConfig, TermShape, WeightMode
from src.core.errors import AliasingError, ConfigurationError, NormOverflowError, ResolutionError
from src.spectral.basis_factory import BasisFactory
from src.spectral.lattice import (
    BasisDescriptor,
    IndexLayout,
    SpectralField,
    build_index_set,
    enforce_reality,
    is_real,
    project,
    random_field,
    smoothing_factor,
)
from src.spectral.nonlinearity import NonlinearitySpec, constant_field
from src.spectral import sphere as sphere_module
from src.spectral.sphere import (
    SphereBasis,
    SphereQuadrature,
    laplace_beltrami_grid,
    sphere_analysis,
    sphere_synthesis,
)
from src.spectral.torus import (
    GridFunction,
    TorusBasis,
    dealiased_size,
    multiplication_matrix,
    to_physical,
    to_spectral,
)


# ======================================================================
# Fixtures
# ======================================================================

@pytest.fixture
def t1():
    return BasisDescriptor.torus(1)


@pytest.fixture
def t2():
    return BasisDescriptor.torus(2)


@pytest.fixture
def s2():
    return BasisDescriptor.sphere()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cos_field(t1):
    return SpectralField.from_modes(t1, {1: 0.5, -1: 0.5}, declared_real=True)


# ======================================================================
# Index sets
# ======================================================================

class TestIndexSets:
    def test_torus_dimension_limits(self):
        with pytest.raises(ConfigurationError):
            BasisDescriptor.torus(4)
        with pytest.raises(ConfigurationError):
            BasisDescriptor.torus(0)

    def test_torus_1d_ordering(self, t1):
        indices = build_index_set(t1, 2)
        assert [idx.j[0] for idx in indices] == [0, -1, 1, -2, 2]

    def test_torus_2d_ball(self, t2):
        indices = build_index_set(t2, 1)
        assert len(indices) == 5
        assert all(idx.shift_norm <= 1 for idx in indices)

    def test_sphere_degrees(self, s2):
        assert [idx.j[0] for idx in build_index_set(s2, 2.5)] == [0, 1, 2]
        assert [idx.j[0] for idx in build_index_set(s2, 2)] == [0, 1]

    def test_sphere_block_dims(self, s2):
        assert [idx.block_dim for idx in build_index_set(s2, 3.5)] == [1, 3, 5, 7]

    def test_cutoff_below_one_rejected(self, t1):
        with pytest.raises(ValueError):
            build_index_set(t1, 0.5)

    def test_eigenvalues(self, t2, s2):
        assert t2.index(1, 2).eigenvalue == 5
        assert s2.index(3).eigenvalue == 12
        assert s2.index(3).shift_norm == pytest.approx(3.5)

    def test_negative_sphere_degree_rejected(self, s2):
        with pytest.raises(ValueError):
            s2.index(-1)


# ======================================================================
# Norms, projectors, smoothing
# ======================================================================

class TestNorms:
    def test_l2_norm(self, t1):
        u = SpectralField.from_modes(t1, {0: 3.0, 2: 4.0})
        assert u.norm(0) == pytest.approx(5.0)

    def test_exponential_weight(self, t1):
        u = SpectralField.from_modes(t1, {2: 1.0})
        assert u.norm(0.5) == pytest.approx(math.exp(1.0))

    def test_polynomial_weight(self):
        basis = BasisDescriptor.torus(1, WeightMode.POLYNOMIAL)
        u = SpectralField.from_modes(basis, {2: 1.0})
        assert u.norm(1.0) == pytest.approx(3.0)

    def test_monotone_in_s(self, t2, rng):
        u = random_field(t2, 4, rng)
        values = [u.norm(s) for s in (0.0, 0.1, 0.5, 1.0)]
        assert values == sorted(values)

    def test_negative_index_rejected(self, cos_field):
        with pytest.raises(ValueError):
            cos_field.norm(-0.1)

    def test_overflow_is_reported(self, t1):
        u = SpectralField.from_modes(t1, {10000: 1.0})
        with pytest.raises(NormOverflowError):
            u.norm(1.0)

    def test_zero_field(self, t1):
        assert SpectralField.zeros(t1).norm(3.0) == 0.0


class TestProjectors:
    def test_idempotent(self, t2, rng):
        u = random_field(t2, 6, rng)
        once = project(u, 3)
        twice = project(once, 3)
        assert once.support() == twice.support()
        for idx, block in once.items():
            assert np.array_equal(block, twice.coefficient(idx))

    def test_keeps_reality(self, t1, rng):
        u = random_field(t1, 6, rng)
        assert project(u, 2).declared_real
        assert is_real(project(u, 2))

    @pytest.mark.parametrize("mode", [WeightMode.EXPONENTIAL, WeightMode.POLYNOMIAL])
    def test_smoothing_inequalities(self, mode, rng):
        basis = BasisDescriptor.torus(1, mode)
        u = random_field(basis, 20, rng, decay=0.1)
        N, s, d = 5, 0.2, 0.7
        low = project(u, N)
        high = u - low
        assert low.norm(s + d) <= smoothing_factor(N, d, mode) * low.norm(s) * (1 + 1e-12)
        assert high.norm(s) <= N ** (-d) * u.norm(s + d) * (1 + 1e-12)

    @pytest.mark.parametrize("mode", [WeightMode.EXPONENTIAL, WeightMode.POLYNOMIAL])
    def test_smoothing_over_random_fields(self, mode):
        rng = np.random.default_rng(2718)
        bases = [BasisDescriptor.torus(1, mode), BasisDescriptor.torus(2, mode)]
        s = 0.3
        for k in range(160):
            basis = bases[k % 2]
            u = random_field(basis, 12 if basis.dim == 1 else 7, rng, decay=float(rng.uniform(0.0, 0.5)))
            for N in (2, 4, 8):
                low = project(u, N)
                high = u - low
                for d in (1, 2):
                    assert low.norm(s + d) <= smoothing_factor(N, d, mode) * low.norm(s) * (1 + 1e-12)
                    assert high.norm(s) <= N ** (-d) * u.norm(s + d) * (1 + 1e-12)


class TestParseval:
    def test_torus_grid_energy(self, t1, t2, rng):
        for basis, N in ((t1, 10), (t2, 5)):
            u = random_field(basis, N, rng, decay=0.2)
            g = to_physical(u, dealiased_size(u.max_degree(), 0, N))
            energy = float(np.mean(np.abs(g.values) ** 2))
            assert u.norm(0) ** 2 == pytest.approx(energy, rel=1e-12)

    def test_sphere_quadrature_energy(self, s2, rng):
        u = random_field(s2, 7.5, rng, declared_real=False)
        quad = SphereQuadrature.for_lmax(7)
        energy = quad.integrate(np.abs(sphere_synthesis(u, quad)) ** 2).real
        assert u.norm(0) ** 2 == pytest.approx(energy, rel=1e-12)

    def test_l2_norm_is_coefficient_sum(self, t2, rng):
        u = random_field(t2, 6, rng)
        total = sum(float(np.vdot(b, b).real) for _, b in u.items())
        assert u.norm(0) ** 2 == pytest.approx(total, rel=1e-14)


class TestReality:
    def test_torus_symmetrisation(self, t1):
        u = SpectralField.from_modes(t1, {1: 1 + 2j})
        r = enforce_reality(u)
        assert r[1] == pytest.approx(0.5 + 1j)
        assert r[-1] == pytest.approx(0.5 - 1j)
        assert is_real(r)

    def test_sphere_symmetrisation(self, s2):
        block = np.array([1.0 + 1j, 2.0 + 0.5j, 3.0 - 1j])
        u = SpectralField(s2, {s2.index(1): block})
        r = enforce_reality(u)
        assert is_real(r)
        got = r.coefficient(s2.index(1))
        assert got[1].imag == pytest.approx(0.0)
        assert got[0] == pytest.approx(-np.conj(got[2]))

    def test_random_real_fields(self, t2, s2, rng):
        assert is_real(random_field(t2, 3, rng))
        assert is_real(random_field(s2, 4.5, rng))

    def test_arithmetic(self, t1, rng):
        u = random_field(t1, 4, rng)
        v = random_field(t1, 4, rng)
        back = (u + v) - v
        for idx in u.support():
            assert back.coefficient(idx) == pytest.approx(u.coefficient(idx))
        assert (2.0 * u).norm(0) == pytest.approx(2.0 * u.norm(0))


# ======================================================================
# Torus transforms
# ======================================================================

class TestTorusTransforms:
    def test_cosine_samples(self, cos_field):
        g = to_physical(cos_field, 8)
        x = 2.0 * np.pi * np.arange(8) / 8
        assert np.allclose(g.values, np.cos(x), atol=1e-14)

    def test_grid_roundtrip(self, t2, rng):
        u = random_field(t2, 3, rng)
        back = to_spectral(to_physical(u, 9), 3)
        for idx in u.support():
            assert back.coefficient(idx) == pytest.approx(u.coefficient(idx), abs=1e-13)

    def test_aliasing_refused(self, t1):
        u = SpectralField.from_modes(t1, {5: 1.0, -5: 1.0}, declared_real=True)
        with pytest.raises(AliasingError):
            to_physical(u, 8)
        with pytest.raises(AliasingError):
            to_spectral(GridFunction(t1, np.zeros(5)), 3)

    def test_dealiased_size(self):
        assert dealiased_size(1, 2, 2) == 5
        assert dealiased_size(4, 8, 4) >= 13

    def test_grid_function_validation(self, t2):
        with pytest.raises(ValueError):
            GridFunction(t2, np.zeros(4))
        with pytest.raises(ValueError):
            GridFunction(BasisDescriptor.torus(1), np.array([1.0, np.nan, 0.0]))


class TestTorusNonlinearity:
    def test_square_of_cosine(self, t1, cos_field):
        f = NonlinearitySpec.polynomial(t1, {2: 1.0})
        out = TorusBasis(t1).apply_nonlinearity(f, cos_field, 2)
        assert out[0] == pytest.approx(0.5)
        assert out[2] == pytest.approx(0.25)
        assert out[-2] == pytest.approx(0.25)
        assert abs(out[1]) < 1e-14

    def test_projection_does_not_alias(self, t1, cos_field):
        f = NonlinearitySpec.polynomial(t1, {2: 1.0})
        out = TorusBasis(t1).apply_nonlinearity(f, cos_field, 1)
        assert out[0] == pytest.approx(0.5)
        assert abs(out[1]) < 1e-14

    def test_square_in_two_dimensions(self, t2):
        u = SpectralField.from_modes(
            t2, {(1, 0): 0.5, (-1, 0): 0.5, (0, 1): 0.5, (0, -1): 0.5}, declared_real=True
        )
        f = NonlinearitySpec.polynomial(t2, {2: 1.0})
        out = TorusBasis(t2).apply_nonlinearity(f, u, 2)
        assert out[(0, 0)] == pytest.approx(1.0)
        assert out[(2, 0)] == pytest.approx(0.25)
        assert out[(1, 1)] == pytest.approx(0.5)
        assert out[(1, -1)] == pytest.approx(0.5)

    def test_multiplication_matrix_matches_product(self, t1, rng):
        basis = TorusBasis(t1)
        b = random_field(t1, 3, rng)
        u = random_field(t1, 6, rng)
        T = basis.multiplication_matrix(b, N=6)
        direct = basis.product(u, b, 6).to_vector(T.rows)
        assert np.allclose(T.matvec(u.to_vector(T.rows)), direct, atol=1e-13)

    def test_multiplication_matrix_structure(self, t1):
        b = SpectralField.from_modes(t1, {1: 0.5, -1: 0.5}, declared_real=True)
        T = TorusBasis(t1).multiplication_matrix(b, N=2)
        dense = T.to_dense()
        assert T.self_adjoint
        assert np.allclose(dense, dense.conj().T)
        layout = T.rows
        i0, i2 = layout.slice(t1.index(0)), layout.slice(t1.index(2))
        assert dense[i0, layout.slice(t1.index(1))][0, 0] == pytest.approx(0.5)
        assert dense[i0, i2][0, 0] == 0.0

    def test_tame_product_constant(self, t1, rng):
        u = random_field(t1, 4, rng)
        v = random_field(t1, 4, rng)
        c = TorusBasis(t1).tame_product_constant(u, v, 0.5)
        assert 0.0 < c < np.inf

    def test_result_independent_of_grid_size(self, t1, rng):
        f = NonlinearitySpec.polynomial(t1, {2: 1.0, 3: 0.5})
        u = random_field(t1, 4, rng, decay=0.3)
        N = 6
        out = TorusBasis(t1).apply_nonlinearity(f, u, N)
        M = 2 * dealiased_size(u.max_degree(), f.output_band(u.max_degree()), N) + 3
        values = f.evaluate(to_physical(u, M).values, lambda c: to_physical(c, M).values)
        fine = to_spectral(GridFunction(t1, np.real(values)), N)
        for idx in build_index_set(t1, N):
            assert abs(out[idx.j] - fine[idx.j]) <= 1e-13

    def test_linearized_coeff_matches_difference_quotient(self, t1, rng):
        basis = TorusBasis(t1)
        f = NonlinearitySpec.polynomial(t1, {2: 1.0, 3: 0.5})
        u = random_field(t1, 3, rng, decay=0.5)
        v = random_field(t1, 3, rng, decay=0.5)
        N = 6
        exact = basis.product(v, basis.linearized_coeff(f, u, N), N)
        base = basis.apply_nonlinearity(f, u, N)
        errors = []
        for h in (1e-2, 1e-3, 1e-4):
            quotient = (basis.apply_nonlinearity(f, u + v * h, N) - base).scale(1.0 / h)
            errors.append((quotient - exact).norm(0))
        assert errors[1] <= 0.2 * errors[0]
        assert errors[2] <= 0.2 * errors[1]
        assert errors[2] <= 1e-2 * exact.norm(0)


class TestMultiplicationOperators:
    def test_torus_self_adjoint_for_real_multipliers(self, t1):
        rng = np.random.default_rng(77)
        for _ in range(50):
            b = random_field(t1, int(rng.integers(1, 6)), rng, decay=float(rng.uniform(0.0, 1.0)))
            T = multiplication_matrix(b, N=10)
            assert T.adjoint_defect() <= 1e-12
            dense = T.to_dense()
            assert np.max(np.abs(dense - dense.conj().T)) <= 1e-12

    def test_sphere_self_adjoint_for_real_multipliers(self, s2):
        rng = np.random.default_rng(78)
        basis = SphereBasis(s2)
        for _ in range(20):
            b = random_field(s2, float(rng.integers(1, 5)) + 0.5, rng, decay=float(rng.uniform(0.0, 1.0)))
            T = basis.multiplication_matrix(b, N=8.5)
            assert T.self_adjoint
            assert T.adjoint_defect() <= 1e-12

    def test_sphere_asymmetry_is_reported(self, s2, rng, monkeypatch):
        original = sphere_module.sphere_synthesis
        monkeypatch.setattr(sphere_module, "sphere_synthesis", lambda u, quad: original(u, quad) + 1e-6j)
        b = random_field(s2, 2.5, rng)
        with pytest.raises(ResolutionError):
            SphereBasis(s2).multiplication_matrix(b, N=4.5)

    def test_geometric_decay_is_inherited(self, t1):
        rng = np.random.default_rng(79)
        theta = 0.7
        modes = {0: float(rng.uniform(-1.0, 1.0))}
        for k in range(1, 11):
            c = math.exp(-theta * k) * rng.uniform(0.0, 1.0) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
            modes[k] = c
            modes[-k] = np.conj(c)
        b = SpectralField.from_modes(t1, modes, declared_real=True)
        T = multiplication_matrix(b, N=15)
        for (j, jp), norm in T.block_norms().items():
            assert norm <= math.exp(-theta * abs(j.j[0] - jp.j[0])) * (1 + 1e-14)


# ======================================================================
# Sphere transforms
# ======================================================================

class TestSphereTransforms:
    def test_constant_synthesis(self, s2):
        quad = SphereQuadrature.for_lmax(2)
        values = sphere_synthesis(constant_field(s2, 1.0), quad)
        assert np.allclose(values, 1.0, atol=1e-14)

    def test_analysis_inverts_synthesis(self, s2, rng):
        u = random_field(s2, 8.5, rng, declared_real=False)
        quad = SphereQuadrature.for_lmax(8)
        back = sphere_analysis(sphere_synthesis(u, quad), quad, 8)
        for idx in u.support():
            assert np.allclose(back.coefficient(idx), u.coefficient(idx), atol=1e-12)

    def test_harmonics_are_orthonormal(self, s2):
        l_max = 6
        quad = SphereQuadrature.for_lmax(l_max)
        layout = IndexLayout(build_index_set(s2, l_max + 0.5))
        gram = np.zeros((layout.size, layout.size), dtype=complex)
        for idx in layout.indices:
            for pos in range(idx.block_dim):
                unit = np.zeros(idx.block_dim, dtype=complex)
                unit[pos] = 1.0
                back = sphere_analysis(sphere_synthesis(SpectralField(s2, {idx: unit}), quad), quad, l_max)
                gram[:, layout.slice(idx).start + pos] = back.to_vector(layout)
        assert np.max(np.abs(gram - np.eye(layout.size))) <= 1e-12

    def test_real_field_synthesises_real(self, s2, rng):
        u = random_field(s2, 5.5, rng)
        values = sphere_synthesis(u, SphereQuadrature.for_lmax(5))
        assert not np.iscomplexobj(values)

    @pytest.mark.parametrize("l", range(0, 17))
    def test_laplace_beltrami_eigenrelation(self, s2, rng, l):
        block = rng.standard_normal(2 * l + 1) + 1j * rng.standard_normal(2 * l + 1)
        u = SpectralField(s2, {s2.index(l): block})
        quad = SphereQuadrature.for_lmax(16)
        synth = sphere_synthesis(u, quad)
        lap = laplace_beltrami_grid(u, quad)
        scale = max(1.0, l * (l + 1) * float(np.max(np.abs(synth))))
        assert float(np.max(np.abs(lap + l * (l + 1) * synth))) <= 1e-10 * scale

    def test_underresolved_quadrature(self, s2):
        with pytest.raises(ResolutionError):
            SphereQuadrature(2, 3).require(5)

    def test_quadrature_sizes(self):
        quad = SphereQuadrature.for_lmax(8)
        assert quad.shape == (9, 17)
        assert quad.exact_degree == 16
        assert quad.integrate(np.ones(quad.shape)).real == pytest.approx(4 * np.pi)


class TestSphereMultiplication:
    def test_self_adjoint_and_selection_rule(self, s2, rng):
        basis = SphereBasis(s2)
        b = random_field(s2, 3.5, rng)
        T = basis.multiplication_matrix(b, N=8.5)
        assert T.adjoint_defect() <= 1e-12
        for (j, jp), norm in T.block_norms().items():
            if abs(j.j[0] - jp.j[0]) > 3:
                assert norm <= 1e-12

    def test_matches_quadrature_product(self, s2, rng):
        basis = SphereBasis(s2)
        b = random_field(s2, 3.5, rng)
        u = random_field(s2, 8.5, rng, declared_real=False)
        T = basis.multiplication_matrix(b, N=8.5)
        direct = basis.product(u, b, 8.5).to_vector(T.rows)
        assert np.allclose(T.matvec(u.to_vector(T.rows)), direct, atol=1e-11)

    def test_constant_multiplier(self, s2, rng):
        basis = SphereBasis(s2)
        u = random_field(s2, 4.5, rng)
        out = basis.product(u, constant_field(s2, 2.0), 4.5)
        for idx in u.support():
            assert np.allclose(out.coefficient(idx), 2.0 * u.coefficient(idx), atol=1e-12)


# ======================================================================
# Nonlinearity specs and the factory
# ======================================================================

class TestNonlinearitySpec:
    def test_default_config(self, t1):
        monos = [
            MonomialConfig(degree=2, coefficient=1.0),
            MonomialConfig(degree=0, terms=[ModeTerm(index=[1], value=1.0, shape=TermShape.COS)]),
        ]
        f = NonlinearitySpec.from_config(t1, monos)
        assert f.leading_degree == 2
        assert f.is_real
        assert f.coefficient(2)[0] == pytest.approx(1.0)
        assert f.coefficient(0)[1] == pytest.approx(0.5)
        assert f.coefficient(0)[-1] == pytest.approx(0.5)

    def test_sine_term(self, t1):
        monos = [MonomialConfig(degree=0, terms=[ModeTerm(index=[2], value=1.0, shape=TermShape.SIN)])]
        f = NonlinearitySpec.from_config(t1, monos)
        assert f.coefficient(0)[2] == pytest.approx(-0.5j)
        assert f.coefficient(0)[-2] == pytest.approx(0.5j)
        assert f.is_real

    def test_derivative(self, t1):
        f = NonlinearitySpec.polynomial(t1, {0: 1.0, 2: 1.0, 3: 2.0})
        df = f.derivative()
        assert [m.degree for m in df.monomials] == [1, 2]
        assert df.coefficient(1)[0] == pytest.approx(2.0)
        assert df.coefficient(2)[0] == pytest.approx(6.0)

    def test_rescaling(self, t1):
        f = NonlinearitySpec.polynomial(t1, {0: 1.0, 2: 1.0, 3: 1.0})
        g = f.rescaled(0.1, p=2)
        assert g.coefficient(2)[0] == pytest.approx(1.0)
        assert g.coefficient(3)[0] == pytest.approx(0.1)
        assert g.coefficient(0)[0] == pytest.approx(1.0)

    def test_u_independent(self, t1):
        assert NonlinearitySpec.polynomial(t1, {0: 1.0}).is_u_independent()
        assert not NonlinearitySpec.polynomial(t1, {1: 1.0}).is_u_independent()

    def test_leading_degree_at_least_two(self, t1):
        assert NonlinearitySpec.polynomial(t1, {1: 1.0, 3: 1.0}).leading_degree == 2
        assert NonlinearitySpec.polynomial(t1, {3: 1.0}).leading_degree == 3

    def test_sphere_constant_field(self, s2):
        c = constant_field(s2, 1.0)
        assert c.coefficient(s2.index(0))[0] == pytest.approx(math.sqrt(4 * math.pi))


class TestBasisFactory:
    def test_create(self, t2, s2):
        assert isinstance(BasisFactory.create(t2), TorusBasis)
        assert isinstance(BasisFactory.create(s2), SphereBasis)

    def test_from_config_weight_override(self):
        basis = BasisFactory.from_config(BasisConfig(kind=BasisKind.TORUS, dim=2), WeightMode.POLYNOMIAL)
        assert basis.descriptor.weight_mode == WeightMode.POLYNOMIAL
        assert basis.group_data == (0, 0, 2)

    def test_available(self):
        assert set(BasisFactory.get_available_bases()) == {"torus", "sphere"}

    def test_mismatched_descriptor(self, s2):
        with pytest.raises(ValueError):
            TorusBasis(s2)
