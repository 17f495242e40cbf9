"""Spatial operators against independent oracles and their exact identities."""

import numpy as np
import pytest

from chns.spectral import (
    GridSpec,
    PhysicsParams,
    SpectralField,
    VelocityField,
    advect,
    bulk_energy,
    capillary_force,
    capillary_integrand,
    chemical_potential,
    convective_term,
    double_well_derivative,
    field_from_modes,
    free_energy,
    gradient,
    hermitian_defect,
    inner,
    l2_norm,
    l2_norm_sq,
    lattice_modes,
    leray_project,
    max_divergence,
    neg_laplacian,
    scalar_advection,
    sobolev_norm,
    spatial_mean,
    stokes_operator,
    to_physical,
    to_spectral,
    zero_field,
)

import oracles

PARAMS = PhysicsParams(nu1=0.7, nu2=1.3, kappa=0.9, c1=1.1, c2=0.6)


@pytest.fixture
def grid():
    return GridSpec(16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def shear_flow(grid, amplitude=1.0):
    """(amplitude * sin y, 0): divergence-free eigenfield of the Stokes operator."""
    f = field_from_modes(grid, {(0, 1): amplitude / 2j})
    return VelocityField(f, zero_field(grid))


class TestTransforms:
    def test_constant_field(self, grid):
        f = to_spectral(np.full((grid.n, grid.n), 2.5), grid)
        assert f.coeffs[0, 0] == pytest.approx(2.5, abs=1e-14)
        rest = f.coeffs.copy()
        rest[0, 0] = 0.0
        assert np.max(np.abs(rest)) < 1e-14

    def test_cos_x_two_modes(self):
        grid = GridSpec(16)
        x, y = grid.nodes()
        f = to_spectral(np.cos(x + 0.0 * y), grid)
        mags = np.abs(f.coeffs)
        assert f.mode(1, 0) == pytest.approx(0.5, abs=1e-14)
        assert f.mode(-1, 0) == pytest.approx(0.5, abs=1e-14)
        mags[1, 0] = mags[-1 % grid.n, 0] = 0.0
        assert np.max(mags) < 1e-14

    def test_round_trip_band_limited(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        back = to_spectral(to_physical(f), grid)
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12

    def test_dimension_mismatch(self, grid):
        with pytest.raises(ValueError, match="collocation"):
            to_spectral(np.zeros((grid.n, grid.n + 2)), grid)

    def test_physical_matches_direct_sum(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        assert np.max(np.abs(to_physical(f) - oracles.eval_on_grid(f, grid.n))) < 1e-12

    def test_hermitian_exact(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        chain = scalar_advection(oracles.random_velocity(grid, rng), f)
        assert hermitian_defect(chain) == 0.0

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSpec(7)
        with pytest.raises(ValueError):
            GridSpec(16, length=-1.0)
        with pytest.raises(ValueError):
            GridSpec(16, dealias_pad=0)


class TestLerayProjection:
    def test_annihilates_gradients(self, grid, rng):
        psi = oracles.random_band_field(grid, rng)
        gx, gy = gradient(psi)
        proj = leray_project(gx, gy)
        assert l2_norm(proj) < 1e-13

    def test_identity_on_divergence_free(self, grid, rng):
        u = oracles.random_velocity(grid, rng)
        again = leray_project(u.x, u.y)
        assert np.max(np.abs(again.x.coeffs - u.x.coeffs)) < 1e-14
        assert np.max(np.abs(again.y.coeffs - u.y.coeffs)) < 1e-14

    def test_output_divergence_and_idempotency(self, grid, rng):
        vx = oracles.random_band_field(grid, rng)
        vy = oracles.random_band_field(grid, rng)
        p = leray_project(vx, vy)
        assert max_divergence(p) < 1e-13
        assert abs(p.x.coeffs[0, 0]) == 0.0 and abs(p.y.coeffs[0, 0]) == 0.0
        pp = leray_project(p.x, p.y)
        assert np.max(np.abs(pp.x.coeffs - p.x.coeffs)) < 1e-14

    def test_multiplier_formula(self, grid, rng):
        # direct evaluation of I - k k^T/|k|^2 with hand-built wavenumbers
        vx = oracles.random_band_field(grid, rng)
        vy = oracles.random_band_field(grid, rng)
        p = leray_project(vx, vy)
        modes = oracles.mode_numbers(grid.n)
        scale = 2.0 * np.pi / grid.length
        for _ in range(40):
            i, j = rng.integers(0, grid.n, size=2)
            kx, ky = modes[i] * scale, modes[j] * scale
            ksq = kx * kx + ky * ky
            if ksq == 0:
                expected_x = expected_y = 0.0
            else:
                s = (kx * vx.coeffs[i, j] + ky * vy.coeffs[i, j]) / ksq
                expected_x = vx.coeffs[i, j] - kx * s
                expected_y = vy.coeffs[i, j] - ky * s
            assert p.x.coeffs[i, j] == pytest.approx(expected_x, abs=1e-13)
            assert p.y.coeffs[i, j] == pytest.approx(expected_y, abs=1e-13)

    def test_self_adjoint(self, grid, rng):
        ax, ay = oracles.random_band_field(grid, rng), oracles.random_band_field(grid, rng)
        bx, by = oracles.random_band_field(grid, rng), oracles.random_band_field(grid, rng)
        pa, pb = leray_project(ax, ay), leray_project(bx, by)
        lhs = inner(pa, (bx, by))
        rhs = inner((ax, ay), pb)
        assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)

    def test_grid_mismatch(self, grid):
        other = GridSpec(32)
        with pytest.raises(ValueError, match="grids"):
            leray_project(zero_field(grid), zero_field(other))

    def test_linearity(self, grid, rng):
        ax, ay = oracles.random_band_field(grid, rng), oracles.random_band_field(grid, rng)
        bx, by = oracles.random_band_field(grid, rng), oracles.random_band_field(grid, rng)
        alpha, beta = 0.37, -1.84
        combo = leray_project(
            SpectralField(grid, alpha * ax.coeffs + beta * bx.coeffs),
            SpectralField(grid, alpha * ay.coeffs + beta * by.coeffs),
        )
        pa, pb = leray_project(ax, ay), leray_project(bx, by)
        assert np.max(np.abs(combo.x.coeffs - alpha * pa.x.coeffs - beta * pb.x.coeffs)) < 1e-13


class TestLinearOperators:
    def test_stokes_eigenfunction(self, grid):
        u = shear_flow(grid)
        out = stokes_operator(u)
        assert np.max(np.abs(out.x.coeffs - u.x.coeffs)) < 1e-14
        assert np.max(np.abs(out.y.coeffs - u.y.coeffs)) < 1e-14

    def test_stokes_zero(self, grid):
        u = VelocityField(zero_field(grid), zero_field(grid))
        assert l2_norm(stokes_operator(u)) == 0.0

    def test_stokes_multiplier_oracle(self, grid, rng):
        u = oracles.random_velocity(grid, rng)
        out = stokes_operator(u)
        mult = oracles.laplacian_multiplier(grid)
        assert np.max(np.abs(out.x.coeffs - mult * u.x.coeffs)) < 1e-13
        assert np.max(np.abs(out.y.coeffs - mult * u.y.coeffs)) < 1e-13

    def test_neg_laplacian_cos_x(self, grid):
        x, y = grid.nodes()
        f = to_spectral(np.cos(x + 0.0 * y), grid)
        out = neg_laplacian(f)
        assert np.max(np.abs(out.coeffs - f.coeffs)) < 1e-14

    def test_neg_laplacian_constant(self, grid):
        f = field_from_modes(grid, {(0, 0): 3.0})
        assert l2_norm(neg_laplacian(f)) == 0.0

    def test_neg_laplacian_multiplier_oracle(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        out = neg_laplacian(f)
        assert np.max(np.abs(out.coeffs - oracles.laplacian_multiplier(grid) * f.coeffs)) < 1e-13

    def test_linearity_superposition(self, grid, rng):
        a = oracles.random_band_field(grid, rng)
        b = oracles.random_band_field(grid, rng)
        combo = SpectralField(grid, 2.5 * a.coeffs - 0.3 * b.coeffs)
        direct = neg_laplacian(combo)
        split = 2.5 * neg_laplacian(a).coeffs - 0.3 * neg_laplacian(b).coeffs
        assert np.max(np.abs(direct.coeffs - split)) < 1e-12


class TestBulkForce:
    def test_zero(self, grid):
        assert l2_norm(double_well_derivative(zero_field(grid), PARAMS)) == 0.0

    def test_constant(self, grid):
        f = field_from_modes(grid, {(0, 0): 1.0})
        out = double_well_derivative(f, PARAMS)
        assert spatial_mean(out) == pytest.approx(PARAMS.c1 - PARAMS.c2, abs=1e-13)
        rest = out.coeffs.copy()
        rest[0, 0] = 0.0
        assert np.max(np.abs(rest)) < 1e-13

    def test_cosine_cubed_identity(self, grid):
        # c1 phi^3 alone: cos^3 x = (3/4) cos x + (1/4) cos 3x
        x, y = grid.nodes()
        phi = to_spectral(np.cos(x + 0.0 * y), grid)
        p = PhysicsParams(nu1=1.0, nu2=1.0, kappa=1.0, c1=1.0, c2=1.0)
        cubic = double_well_derivative(phi, p).coeffs + phi.coeffs  # add back c2 * phi
        expected = field_from_modes(grid, {(1, 0): 3.0 / 8.0, (3, 0): 1.0 / 8.0})
        assert np.max(np.abs(cubic - expected.coeffs)) < 1e-13

    def test_quadrature_oracle(self, grid, rng):
        phi = oracles.random_band_field(grid, rng, max_mode=4, amplitude=0.5)
        out = double_well_derivative(phi, PARAMS)
        v = oracles.eval_on_grid(phi, 4 * grid.n)
        expected = oracles.forward_coeffs(PARAMS.c1 * v**3 - PARAMS.c2 * v, grid)
        assert np.max(np.abs(out.coeffs - expected)) < 1e-12


class TestChemicalPotential:
    def test_constant(self, grid):
        c = 0.8
        f = field_from_modes(grid, {(0, 0): c})
        mu = chemical_potential(f, PARAMS)
        expected = PARAMS.kappa * (PARAMS.c1 * c**3 - PARAMS.c2 * c)
        assert spatial_mean(mu) == pytest.approx(expected, abs=1e-13)

    def test_cos_x_without_bulk(self, grid):
        p = PhysicsParams(nu1=0.7, nu2=1.0, kappa=0.0, c1=1.0, c2=1.0)
        x, y = grid.nodes()
        phi = to_spectral(np.cos(x + 0.0 * y), grid)
        mu = chemical_potential(phi, p)
        assert np.max(np.abs(mu.coeffs - 0.7 * phi.coeffs)) < 1e-13

    def test_sum_of_oracles(self, grid, rng):
        phi = oracles.random_band_field(grid, rng, max_mode=4, amplitude=0.5)
        mu = chemical_potential(phi, PARAMS)
        v = oracles.eval_on_grid(phi, 4 * grid.n)
        bulk = oracles.forward_coeffs(PARAMS.c1 * v**3 - PARAMS.c2 * v, grid)
        expected = PARAMS.nu1 * oracles.laplacian_multiplier(grid) * phi.coeffs + PARAMS.kappa * bulk
        assert np.max(np.abs(mu.coeffs - expected)) < 1e-12


class TestConvection:
    def test_shear_self_advection_vanishes(self, grid):
        u = shear_flow(grid)
        out = convective_term(u, u)
        assert l2_norm(out) < 1e-14

    def test_cancellation_in_energy_pairing(self, grid, rng):
        for _ in range(5):
            u = oracles.random_velocity(grid, rng)
            v = oracles.random_velocity(grid, rng)
            raw = advect(u, v)
            bound = 1e-11 * l2_norm(u) * l2_norm(v) ** 2
            assert abs(inner(raw, v)) <= bound

    def test_quadrature_oracle(self, grid, rng):
        u = oracles.random_velocity(grid, rng, max_mode=4)
        v = oracles.random_velocity(grid, rng, max_mode=4)
        w = oracles.random_velocity(grid, rng, max_mode=4)
        value = inner(advect(u, v), w)
        expected = oracles.convection_form(u, v, w)
        scale = max(abs(expected), 1.0)
        assert abs(value - expected) <= 1e-11 * scale


class TestCapillaryForce:
    def test_constant_phi(self, grid):
        f = field_from_modes(grid, {(0, 0): 0.7})
        assert l2_norm(capillary_force(f, PARAMS)) < 1e-15

    def test_single_cosine_is_pure_gradient(self, grid):
        x, y = grid.nodes()
        phi = to_spectral(np.cos(x + 0.0 * y), grid)
        out = capillary_force(phi, PARAMS)
        assert l2_norm(out) < 1e-13

    def test_quadrature_oracle_against_test_fields(self, grid, rng):
        phi = oracles.random_band_field(grid, rng, max_mode=4, amplitude=0.7)
        out = capillary_force(phi, PARAMS)
        for _ in range(4):
            w = oracles.random_velocity(grid, rng, max_mode=4)
            expected = oracles.capillary_form(phi, w, PARAMS.nu1)
            value = inner(out, w)
            assert value == pytest.approx(expected, rel=1e-11, abs=1e-11)


class TestScalarAdvection:
    def test_constant_phi(self, grid, rng):
        u = oracles.random_velocity(grid, rng)
        f = field_from_modes(grid, {(0, 0): 4.0})
        assert l2_norm(scalar_advection(u, f)) < 1e-14

    def test_cancellation(self, grid, rng):
        for _ in range(5):
            u = oracles.random_velocity(grid, rng)
            phi = oracles.random_band_field(grid, rng)
            bound = 1e-11 * l2_norm(u) * l2_norm(phi) ** 2
            assert abs(inner(scalar_advection(u, phi), phi)) <= bound

    def test_quadrature_oracle(self, grid, rng):
        u = oracles.random_velocity(grid, rng, max_mode=4)
        phi = oracles.random_band_field(grid, rng, max_mode=4)
        rho = oracles.random_band_field(grid, rng, max_mode=4)
        value = inner(scalar_advection(u, phi), rho)
        expected = oracles.scalar_advection_form(u, phi, rho)
        assert value == pytest.approx(expected, rel=1e-11, abs=1e-11)


class TestTransferDuality:
    """<u.grad phi, mu> = <capillary integrand, u>: the bulk part drops out
    only because u is divergence-free."""

    def test_duality_with_projection(self, grid, rng):
        for _ in range(5):
            u = oracles.random_velocity(grid, rng, max_mode=grid.n // 4 - 1)
            phi = oracles.random_band_field(grid, rng, max_mode=grid.n // 4 - 1, amplitude=0.7)
            mu = chemical_potential(phi, PARAMS)
            lhs = inner(scalar_advection(u, phi), mu)
            rhs = inner(capillary_integrand(phi, PARAMS), u)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_duality_fails_without_projection(self, grid, rng):
        defects = []
        for _ in range(5):
            raw = VelocityField(
                oracles.random_band_field(grid, rng, max_mode=3),
                oracles.random_band_field(grid, rng, max_mode=3),
            )
            phi = oracles.random_band_field(grid, rng, max_mode=3, amplitude=0.7)
            mu = chemical_potential(phi, PARAMS)
            lhs = inner(scalar_advection(raw, phi), mu)
            rhs = inner(capillary_integrand(phi, PARAMS), raw)
            defects.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30))
        assert max(defects) > 1e-6


class TestEnergies:
    def test_constant_free_energy(self, grid):
        c = 0.6
        f = field_from_modes(grid, {(0, 0): c})
        expected = PARAMS.kappa * (PARAMS.c1 * c**4 / 4 - PARAMS.c2 * c**2 / 2) * grid.length**2
        assert free_energy(f, PARAMS) == pytest.approx(expected, rel=1e-13, abs=1e-15)

    def test_cos_x_gradient_energy(self):
        # integral of sin^2 x over the 2*pi square is 2*pi^2
        grid = GridSpec(16)
        p = PhysicsParams(nu1=0.7, nu2=1.0, kappa=0.0, c1=1.0, c2=1.0)
        x, y = grid.nodes()
        phi = to_spectral(np.cos(x + 0.0 * y), grid)
        assert free_energy(phi, p) == pytest.approx(0.7 * np.pi**2, rel=1e-13)

    def test_quartic_lower_bound(self, grid, rng):
        floor = -PARAMS.kappa * PARAMS.c2**2 * grid.length**2 / (4.0 * PARAMS.c1)
        for _ in range(10):
            phi = oracles.random_band_field(grid, rng, amplitude=rng.uniform(0.01, 2.0))
            assert free_energy(phi, PARAMS) >= floor - 1e-12

    def test_bulk_energy_quadrature(self, grid, rng):
        phi = oracles.random_band_field(grid, rng, max_mode=4, amplitude=0.5)
        v = oracles.eval_on_grid(phi, 4 * grid.n)
        expected = PARAMS.kappa * oracles.integrate(
            PARAMS.c1 * v**4 / 4 - PARAMS.c2 * v**2 / 2, grid.length
        )
        assert bulk_energy(phi, PARAMS) == pytest.approx(expected, rel=1e-12, abs=1e-13)


class TestNorms:
    def test_parseval(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        assert sobolev_norm(f, 0.0) == pytest.approx(oracles.l2_norm_quadrature(f), rel=1e-12)
        assert l2_norm(f) == pytest.approx(oracles.l2_norm_quadrature(f), rel=1e-12)

    def test_cos_x_h1(self, grid):
        x, y = grid.nodes()
        phi = to_spectral(np.cos(x + 0.0 * y), grid)
        assert sobolev_norm(phi, 1.0) ** 2 == pytest.approx(2.0 * l2_norm_sq(phi), rel=1e-13)

    def test_order_monotonicity(self, grid, rng):
        f = oracles.random_band_field(grid, rng)
        assert sobolev_norm(f, -1.0) <= sobolev_norm(f, 0.0) <= sobolev_norm(f, 1.0)

    def test_velocity_norm_combines_components(self, grid, rng):
        u = oracles.random_velocity(grid, rng)
        expected = np.sqrt(sobolev_norm(u.x, 0.5) ** 2 + sobolev_norm(u.y, 0.5) ** 2)
        assert sobolev_norm(u, 0.5) == pytest.approx(expected, rel=1e-14)


def test_lattice_modes_enumeration():
    modes = lattice_modes(8)
    assert len(modes) == 8
    assert len(set(modes)) == 8
    for mx, my in modes:
        assert (mx, my) != (0, 0)
        assert my > 0 or (my == 0 and mx > 0)
    norms = [mx * mx + my * my for mx, my in modes[:4]]
    assert norms == sorted(norms)
