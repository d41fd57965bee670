import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import response_solver as rs
from response_solver.spectral import (
    GridTooSmallError,
    NormOverflowError,
    dealias_grid,
    evaluate_at,
    hs_norm,
    mode_coefficient,
)


def single_mode(lat, k, value=1.0 + 0j):
    vec = np.zeros(lat.n, dtype=complex)
    vec[0] = value
    return rs.FourierField.from_modes(lat, {tuple(k): vec})


class TestNorm:
    def test_single_mode_closed_form(self):
        lat = rs.SpectralLattice(d=2, K=4, omega=(1.0, math.sqrt(2)))
        f = single_mode(lat, (1, 0))
        # |u|^2 e^{2*0.5*1} (1+1)^2 = 4e, norm = 2 sqrt(e)
        assert_allclose(rs.norm(f, rs.NormSpec(0.5, 2)), 2 * math.exp(0.5), rtol=1e-14)

    def test_zero_field(self):
        lat = rs.SpectralLattice(d=2, K=4, omega=(1.0, math.sqrt(2)))
        assert rs.norm(rs.FourierField.zeros(lat), rs.NormSpec(1.0, 3)) == 0.0

    def test_two_mode_field_vs_hand_sum(self, rng):
        lat = rs.SpectralLattice(d=2, K=6, omega=(1.0, math.sqrt(2)))
        c1 = complex(rng.standard_normal(), rng.standard_normal())
        c2 = complex(rng.standard_normal(), rng.standard_normal())
        k1, k2 = (2, -1), (-3, 4)
        f = rs.FourierField.from_modes(lat, {k1: np.array([c1]), k2: np.array([c2])})
        spec = rs.NormSpec(0.3, 2)
        # independent summation of the two weighted terms
        t1 = abs(c1) ** 2 * math.exp(2 * 0.3 * 3) * (2 ** 2 + 1 ** 2 + 1) ** 2
        t2 = abs(c2) ** 2 * math.exp(2 * 0.3 * 7) * (3 ** 2 + 4 ** 2 + 1) ** 2
        assert_allclose(rs.norm(f, spec), math.sqrt(t1 + t2), rtol=1e-14)

    def test_homogeneity_and_triangle(self, lat2d, rng):
        spec = rs.NormSpec(0.2, 3)
        u = rs.FourierField.random_real(lat2d, rng)
        v = rs.FourierField.random_real(lat2d, rng)
        assert_allclose(rs.norm(2.5 * u, spec), 2.5 * rs.norm(u, spec), rtol=1e-12)
        assert rs.norm(u + v, spec) <= rs.norm(u, spec) + rs.norm(v, spec) + 1e-12

    def test_overflow_guard(self):
        lat = rs.SpectralLattice(d=1, K=16, omega=(1.0,))
        f = single_mode(lat, (16,))
        with pytest.raises(NormOverflowError):
            rs.norm(f, rs.NormSpec(50.0, 0))
        # log-space evaluation survives where naive exp(2 rho K) would not
        assert rs.norm(f, rs.NormSpec(25.0, 0)) == pytest.approx(math.exp(25.0 * 16))

    def test_pde_weight_uses_k_and_j(self, pde_lattice):
        f = single_mode(pde_lattice, (1, 0, 2))
        got = rs.norm(f, rs.NormSpec(0.5, 1))
        expect = math.sqrt(math.exp(2 * 0.5 * 3) * (1 + 4 + 1))
        assert_allclose(got, expect, rtol=1e-14)


class TestTransforms:
    def test_round_trip_identity(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        v = rs.analyze(rs.synthesize(u), lat2d)
        assert np.max(np.abs(u.coeffs - v.coeffs)) <= 1e-13 * u.max_abs()

    def test_cos_on_eight_nodes(self):
        lat = rs.SpectralLattice(d=1, K=2, omega=(1.0,))
        u = rs.FourierField.from_modes(
            lat, {(1,): np.array([0.5 + 0j]), (-1,): np.array([0.5 + 0j])}
        )
        vals = rs.synthesize(u, (8,))[..., 0].real
        nodes = 2 * np.pi * np.arange(8) / 8
        assert_allclose(vals, np.cos(nodes), atol=1e-14)

    def test_refinement_consistency(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        n = 2 * lat2d.K + 1
        a = rs.analyze(rs.synthesize(u, (n, n)), lat2d)
        b = rs.analyze(rs.synthesize(u, (2 * n, 2 * n)), lat2d)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-13 * u.max_abs()

    def test_grid_too_small(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        with pytest.raises(GridTooSmallError):
            rs.synthesize(u, (2 * lat2d.K, 2 * lat2d.K + 1))

    def test_pointwise_evaluation(self, lat1d):
        u = single_mode(lat1d, (3,), 2.0 + 0j)
        theta = 0.37
        assert_allclose(evaluate_at(u, (theta,))[0], 2.0 * np.exp(3j * theta),
                        rtol=1e-14)


class TestProduct:
    def test_single_mode_shift(self, lat1d):
        u = single_mode(lat1d, (1,))
        p = rs.product(u, u)
        assert_allclose(mode_coefficient(p, (2,))[0], 1.0 + 0j, atol=1e-14)
        total = np.sum(np.abs(p.coeffs))
        assert_allclose(total, 1.0, atol=1e-13)

    def test_binomial(self):
        lat = rs.SpectralLattice(d=1, K=4, omega=(1.0,))
        u = rs.FourierField.from_modes(
            lat, {(0,): np.array([1.0 + 0j]), (1,): np.array([1.0 + 0j])}
        )
        p = rs.product(u, u)
        assert_allclose(mode_coefficient(p, (0,))[0], 1.0, atol=1e-14)
        assert_allclose(mode_coefficient(p, (1,))[0], 2.0, atol=1e-14)
        assert_allclose(mode_coefficient(p, (2,))[0], 1.0, atol=1e-14)

    def test_matches_padded_grid_oracle(self, rng):
        lat = rs.SpectralLattice(d=1, K=8, omega=(1.0,))
        u = rs.FourierField.random_real(lat, rng)
        v = rs.FourierField.random_real(lat, rng)
        p = rs.product(u, v)
        # independent oracle: pointwise product on a 2x zero-padded grid
        grid = (2 * (2 * lat.K + 1),)
        oracle = rs.analyze(rs.synthesize(u, grid) * rs.synthesize(v, grid), lat)
        assert np.max(np.abs(p.coeffs - oracle.coeffs)) <= 1e-10

    def test_lattice_mismatch(self, lat1d, lat2d, rng):
        u = rs.FourierField.random_real(lat1d, rng)
        v = rs.FourierField.random_real(lat2d, rng)
        with pytest.raises(rs.spectral.LatticeMismatchError):
            rs.product(u, v)

    def test_hermitian_preserved(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        v = rs.FourierField.random_real(lat2d, rng)
        assert rs.product(u, v).hermitian_defect() <= 1e-12


class TestCompose:
    def test_square_of_constant(self):
        lat = rs.SpectralLattice(d=1, K=4, omega=(1.0,))
        u = single_mode(lat, (0,), 0.7 + 0j)
        g = rs.NonlinearitySpec.polynomial([(0.0, 0.0, 1.0)])
        c = rs.compose(u, g)
        assert_allclose(mode_coefficient(c, (0,))[0], 0.49, atol=1e-14)

    def test_cubic_trig_identity(self, lat1d):
        u = rs.FourierField.from_modes(
            lat1d, {(1,): np.array([0.5 + 0j]), (-1,): np.array([0.5 + 0j])}
        )
        c = rs.compose(u, rs.NonlinearitySpec.cubic(1.0))
        # cos^3 = (3/4) cos + (1/4) cos 3theta
        assert_allclose(mode_coefficient(c, (1,))[0], 0.375, atol=1e-14)
        assert_allclose(mode_coefficient(c, (3,))[0], 0.125, atol=1e-14)
        assert_allclose(mode_coefficient(c, (0,))[0], 0.0, atol=1e-14)

    def test_piecewise_matches_per_node_oracle(self, rng):
        lat = rs.SpectralLattice(d=1, K=4, omega=(1.0,))
        u = rs.FourierField.random_real(lat, rng)
        g = rs.NonlinearitySpec(
            kind="piecewise_linear", breakpoints=(0.0,), slopes=(-0.3, 0.05),
            lip_hat=0.3, oversample=32 / 9, smallness="global",
        )
        c = rs.compose(u, g)
        vals = rs.synthesize(u, (32,))[..., 0].real
        direct = np.where(vals > 0, 0.05 * vals, -0.3 * vals)
        oracle = rs.analyze(direct[:, None].astype(complex), lat)
        assert np.max(np.abs(c.coeffs - oracle.coeffs)) <= 1e-14

    def test_piecewise_left_continuous_at_break(self):
        g = rs.NonlinearitySpec.piecewise([0.0], [-1.0, 1.0])
        # x = 0 evaluates on the left segment; the value is still 0 there
        assert g(np.array([0.0]))[0] == 0.0
        assert g(np.array([-2.0]))[0] == 2.0
        assert g(np.array([3.0]))[0] == 3.0

    def test_nonfinite_rejected(self, lat1d, rng):
        u = rs.FourierField.random_real(lat1d, rng)
        g = rs.NonlinearitySpec(kind="callable", fn=lambda x: np.full_like(x, np.nan))
        with pytest.raises(FloatingPointError):
            rs.compose(u, g)

    def test_locally_small_map_requires_flat_origin(self):
        with pytest.raises(ValueError):
            rs.NonlinearitySpec.polynomial([(0.0, 1.0)], smallness="local")

    def test_hermitian_preserved(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        c = rs.compose(u, rs.NonlinearitySpec.cubic(0.3, n=lat2d.n))
        assert c.hermitian_defect() <= 1e-12


class TestDerivatives:
    def test_directional_single_mode(self):
        lat = rs.SpectralLattice(d=2, K=2, omega=(1.0, math.sqrt(2)))
        u = single_mode(lat, (1, 0))
        d = rs.directional_derivative(u)
        assert_allclose(mode_coefficient(d, (1, 0))[0], 1j, atol=1e-15)

    def test_directional_squared(self):
        lat = rs.SpectralLattice(d=2, K=2, omega=(1.0, math.sqrt(2)))
        u = single_mode(lat, (1, 1))
        d2 = rs.directional_derivative(u, 2)
        assert_allclose(
            mode_coefficient(d2, (1, 1))[0], -((1 + math.sqrt(2)) ** 2), rtol=1e-14
        )

    def test_spatial_second(self, pde_lattice):
        u = single_mode(pde_lattice, (0, 0, 1))
        d = rs.spatial_derivative(u, 2)
        assert_allclose(mode_coefficient(d, (0, 0, 1))[0], -1.0, atol=1e-15)

    def test_preserves_hermitian(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        assert rs.directional_derivative(u).hermitian_defect() <= 1e-12


class TestPdeFieldStructure:
    def test_zero_average_slab_preserved(self, pde_lattice, rng):
        u = rs.FourierField.random_real(pde_lattice, rng)
        assert np.max(np.abs(u.space_average_slice())) == 0.0
        p = rs.product(u, u)
        d = rs.spatial_derivative(p, 2)
        assert np.max(np.abs(d.space_average_slice())) <= 1e-14

    def test_dealias_grid_shapes(self, pde_lattice):
        grid = dealias_grid(pde_lattice, degree=2)
        assert all(g >= 3 * 8 + 1 for g in grid)


class TestCauchyDecayFit:
    def test_exact_exponential(self):
        lat = rs.SpectralLattice(d=1, K=16, omega=(1.0,))
        coeffs = np.exp(-0.7 * lat.k_l1())[..., None].astype(complex)
        f = rs.FourierField(lat, coeffs)
        M, rho = rs.cauchy_decay_fit(f)
        assert abs(rho - 0.7) <= 1e-6
        assert abs(M - 1.0) <= 1e-6

    def test_white_coefficients_flat(self, rng):
        lat = rs.SpectralLattice(d=1, K=16, omega=(1.0,))
        phases = np.exp(2j * np.pi * rng.uniform(size=lat.field_shape))
        f = rs.FourierField(lat, phases)
        _, rho = rs.cauchy_decay_fit(f)
        assert abs(rho) <= 0.05

    def test_needs_three_modes(self, lat1d):
        f = single_mode(lat1d, (1,))
        with pytest.raises(ValueError):
            rs.cauchy_decay_fit(f)


class TestHigherDimensionalLattices:
    def test_d3_norm_and_product(self, rng):
        lat = rs.SpectralLattice(d=3, K=3, omega=(1.0, math.sqrt(2), math.sqrt(3)))
        u = rs.FourierField.random_real(lat, rng)
        v = rs.FourierField.random_real(lat, rng)
        p = rs.product(u, v)
        assert p.hermitian_defect() <= 1e-12
        grid = (2 * (2 * lat.K + 1),) * 3
        oracle = rs.analyze(rs.synthesize(u, grid) * rs.synthesize(v, grid), lat)
        assert np.max(np.abs(p.coeffs - oracle.coeffs)) <= 1e-10

    def test_d3_derivative_multiplier(self):
        lat = rs.SpectralLattice(d=3, K=2, omega=(1.0, math.sqrt(2), math.sqrt(3)))
        u = single_mode(lat, (1, 1, 1))
        d = rs.directional_derivative(u)
        w = 1 + math.sqrt(2) + math.sqrt(3)
        assert_allclose(mode_coefficient(d, (1, 1, 1))[0], 1j * w, rtol=1e-14)

    def test_scalar_coefficient_convenience(self):
        lat = rs.SpectralLattice(d=1, K=2, omega=(1.0,))
        f = rs.FourierField.from_modes(lat, {(1,): 0.5 + 0j})
        assert mode_coefficient(f, (1,))[0] == 0.5

    def test_scalar_coefficient_rejected_for_vector_fields(self):
        lat = rs.SpectralLattice(d=1, K=2, omega=(1.0,), n=2)
        with pytest.raises(ValueError):
            rs.FourierField.from_modes(lat, {(1,): 0.5 + 0j})


class TestAliasingDiagnostics:
    def test_polynomial_composition_is_alias_free(self, lat1d, rng):
        u = rs.FourierField.random_real(lat1d, rng, amplitude=0.5)
        est = rs.spectral.composition_aliasing_estimate(
            u, rs.NonlinearitySpec.cubic(1.0)
        )
        assert est <= 1e-13

    def test_piecewise_reports_residual_aliasing(self, lat1d, rng):
        u = rs.FourierField.random_real(lat1d, rng, amplitude=0.5)
        g = rs.NonlinearitySpec.piecewise([0.0], [-1.0, 1.0])
        est = rs.spectral.composition_aliasing_estimate(u, g)
        assert est > 0.0   # kinks alias; the residual is reported, not hidden

    def test_truncation_tail_smaller_for_decaying_field(self, lat1d, rng):
        u = rs.FourierField.random_real(lat1d, rng, decay=1.0)
        spec = rs.NormSpec(0.0, 0.0)
        tail = rs.spectral.truncation_tail_norm(u, spec)
        assert 0.0 <= tail < rs.norm(u, spec)


class TestHsNorm:
    def test_matches_integer_normspec(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        assert_allclose(hs_norm(u, 1.0), rs.norm(u, rs.NormSpec(0.0, 1)), rtol=1e-14)

    def test_s_zero_is_l2(self, lat2d, rng):
        u = rs.FourierField.random_real(lat2d, rng)
        l2 = math.sqrt(float(np.sum(np.abs(u.coeffs) ** 2)))
        assert_allclose(hs_norm(u, 0.0), l2, rtol=1e-14)
