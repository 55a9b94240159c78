"""
Tests for surface densities and the momentum balance
"""
import numpy as np
import pytest

from src.families.families import FamilySpec, make_family
from src.geometry.discrete import fundamental_forms_mesh
from src.geometry.forms import VelocityField, fundamental_forms_param
from src.pde.pde import (SurfaceField, TimeStencil, advect_density, advect_density_chart, chart_density,
                         chart_field, derivative_weights, divergence, mesh_field, momentum_residuals,
                         total_mass, transport_mass)
from src.utils.helpers import DomainError, StencilError, StepSizeError


def test_surface_field_validation():
    """Values and weights must match and be finite"""
    with pytest.raises(DomainError):
        SurfaceField(np.ones(3), np.ones(4))
    with pytest.raises(DomainError):
        SurfaceField(np.array([1.0, np.nan]), np.ones(2))
    assert SurfaceField(np.array([1.0, 2.0]), np.array([0.5, 0.25])).total() == pytest.approx(1.0)


def test_total_mass_of_uniform_density(unit_sphere_family):
    """rho = 2 on the unit sphere carries mass 8 pi"""
    _, field = chart_field(unit_sphere_family, 2.0, 0.0)
    assert total_mass(field) == pytest.approx(8.0 * np.pi, rel=1e-12)


def test_total_mass_needs_a_surface():
    """Bare vertex values have no weights of their own"""
    with pytest.raises(DomainError):
        total_mass(np.ones(4))


def test_chart_density_on_expanding_sphere(expanding_sphere_family):
    """Lagrangian density scales like R0^2 / R^2"""
    s = expanding_sphere_family.sample_grid()
    density0 = 1.0 + 0.2 * np.cos(s[:, 1])
    later = chart_density(expanding_sphere_family, density0, 0.0, s, 0.4)
    np.testing.assert_allclose(later, density0 / 1.2 ** 2, rtol=1e-12)


def _advect(family, steps, horizon=0.2):
    nodes, field = chart_field(family, 1.0, 0.0, resolution=12)
    dt = horizon / steps
    for k in range(steps):
        field = advect_density_chart(family, field, nodes, k * dt, dt)
    return field, chart_density(family, np.ones(len(nodes)), 0.0, nodes, horizon)


def test_chart_advection_converges_at_first_order(expanding_sphere_family):
    """Explicit Euler on d_t rho = rho C H approaches the closed form linearly in dt"""
    coarse, exact = _advect(expanding_sphere_family, 100)
    fine, _ = _advect(expanding_sphere_family, 200)
    coarse_error = np.max(np.abs(coarse.values - exact))
    fine_error = np.max(np.abs(fine.values - exact))
    assert fine_error < 1e-3
    assert coarse_error / fine_error == pytest.approx(2.0, abs=0.2)


def test_static_density_is_unchanged(unit_sphere_family):
    """No motion, no change"""
    nodes, field = chart_field(unit_sphere_family, lambda s: 1.0 + np.sin(s[:, 1]) ** 2, 0.0, resolution=12)
    after = advect_density_chart(unit_sphere_family, field, nodes, 0.0, 0.1)
    np.testing.assert_array_equal(after.values, field.values)
    assert after.total() == pytest.approx(field.total(), rel=1e-14)


def test_rotation_keeps_chart_density(rotating_sphere_family):
    """Rigid rotation has C = 0 and div V = 0"""
    nodes, field = chart_field(rotating_sphere_family, 1.5, 0.0, resolution=12)
    after = advect_density_chart(rotating_sphere_family, field, nodes, 0.0, 0.05)
    np.testing.assert_allclose(after.values, 1.5, atol=1e-9)


def test_mesh_advection_uniform_speed(unit_icosphere):
    """Pure normal motion multiplies the density by 1 + dt C H"""
    forms = fundamental_forms_mesh(unit_icosphere)
    rho = mesh_field(unit_icosphere, 1.0, forms)
    velocity = VelocityField(C=np.full(unit_icosphere.vertex_count, 0.1), V=np.zeros_like(forms.N))
    after = advect_density(rho, velocity, forms, 0.01)
    np.testing.assert_allclose(after.values, 1.0 + 0.001 * forms.H, rtol=1e-14)
    with pytest.raises(StepSizeError):
        advect_density(rho, velocity, forms, 10.0)


def test_mesh_advection_needs_surface_for_tangential_motion(unit_icosphere, rng):
    """Tangential divergence is taken on the current surface"""
    forms = fundamental_forms_mesh(unit_icosphere)
    rho = mesh_field(unit_icosphere, 1.0, forms)
    velocity = VelocityField(C=np.zeros(unit_icosphere.vertex_count),
                             V=0.1 * rng.normal(size=forms.N.shape))
    with pytest.raises(DomainError):
        advect_density(rho, velocity, forms, 1e-3)
    after = advect_density(rho, velocity, forms, 1e-3, surface=unit_icosphere)
    assert after.total() == pytest.approx(rho.total(), rel=1e-3)


def test_transport_mass_conserves_vertex_masses(unit_icosphere, rng):
    """Scaling the surface keeps every vertex mass and divides densities by the area ratio"""
    rho = mesh_field(unit_icosphere, 1.0 + rng.random(unit_icosphere.vertex_count))
    grown = unit_icosphere.with_vertices(1.3 * unit_icosphere.vertices)
    moved = transport_mass(rho, grown)
    np.testing.assert_allclose(moved.masses, rho.masses, rtol=1e-12)
    np.testing.assert_allclose(moved.values, rho.values / 1.69, rtol=1e-12)


def test_translation_keeps_vertex_masses(unit_icosphere, rng):
    """Rigid translation leaves every vertex mass unchanged"""
    rho = mesh_field(unit_icosphere, 1.0 + rng.random(unit_icosphere.vertex_count))
    shifted = unit_icosphere.with_vertices(unit_icosphere.vertices + np.array([0.3, -0.2, 0.5]))
    np.testing.assert_allclose(transport_mass(rho, shifted).masses, rho.masses, rtol=1e-12)


def test_divergence_drops_normal_part(unit_icosphere, rng):
    """Normal fields have zero divergence; tangent fields integrate to zero"""
    forms = fundamental_forms_mesh(unit_icosphere)
    np.testing.assert_allclose(divergence(unit_icosphere, 3.0 * forms.N, forms), 0.0, atol=1e-12)
    div = divergence(unit_icosphere, rng.normal(size=forms.N.shape), forms)
    assert abs(np.sum(div * forms.area)) < 1e-10


def test_derivative_weights():
    """Three centered levels and two forward levels"""
    np.testing.assert_allclose(derivative_weights([-0.1, 0.0, 0.1], 0.0), [-5.0, 0.0, 5.0], atol=1e-12)
    np.testing.assert_allclose(derivative_weights([0.0, 0.5], 0.0), [-2.0, 2.0], atol=1e-12)


def test_time_stencil_errors():
    """Missing, unordered or mismatched levels raise StencilError"""
    c = np.zeros(3)
    v = np.zeros((3, 2))
    with pytest.raises(StencilError):
        TimeStencil((0.0,), (c,), (v,), 0.0)
    with pytest.raises(StencilError):
        TimeStencil((0.0, 0.0), (c, c), (v, v), 0.0)
    with pytest.raises(StencilError):
        TimeStencil((0.0, 0.1), (c, c), (v, v), 0.5)
    with pytest.raises(StencilError):
        TimeStencil((0.0, 0.1), (c,), (v, v), 0.0)
    stencil = TimeStencil((0.0, 0.1), (c, c), (v, v), 0.0)
    with pytest.raises(StencilError):
        stencil.rate([c])


def test_momentum_balance_at_equilibrium(unit_sphere_family):
    """A static sphere with P = sigma H balances exactly"""
    s = unit_sphere_family.sample_grid()
    stencil = TimeStencil.sample(unit_sphere_family, s, 0.0, 1e-3)
    normal, tangential = momentum_residuals(
        unit_sphere_family, s, np.ones(len(s)),
        lambda family, q, t: np.full(len(q), 2.0),
        lambda x, t: np.full(x.shape[0], -4.0),
        stencil,
    )
    np.testing.assert_allclose(normal, 0.0, atol=1e-9)
    np.testing.assert_allclose(tangential, 0.0, atol=1e-9)


def test_tension_gradient_drives_tangential_residual(unit_sphere_family):
    """At rest the tangential balance reduces to nabla_i sigma"""
    s = unit_sphere_family.sample_grid()
    stencil = TimeStencil.sample(unit_sphere_family, s, 0.0, 1e-3, levels=2)
    normal, tangential = momentum_residuals(
        unit_sphere_family, s, np.ones(len(s)),
        lambda family, q, t: 1.0 + 0.3 * np.cos(q[:, 0]),
        lambda x, t: -2.0 * (1.0 + 0.3 * x[..., -1]),
        stencil,
    )
    expected = np.stack([-0.3 * np.sin(s[:, 0]), np.zeros(len(s))], axis=-1)
    np.testing.assert_allclose(tangential, expected, atol=1e-9)
    np.testing.assert_allclose(normal, 0.0, atol=1e-9)


def test_rotating_sphere_centripetal_balance(rotating_sphere_family):
    """Residuals of a spinning sphere equal rho times the centripetal acceleration"""
    family = rotating_sphere_family
    s = family.sample_grid()
    stencil = TimeStencil.sample(family, s, 0.0, 1e-4)
    rho = 1.5
    normal, tangential = momentum_residuals(
        family, s, np.full(len(s), rho),
        lambda f, q, t: np.full(len(q), 1.5),
        lambda x, t: np.full(x.shape[0], -3.0),
        stencil,
    )
    forms = fundamental_forms_param(family, s, 0.0)
    x = forms.position
    acceleration = -np.stack([x[:, 0], x[:, 1], np.zeros(len(x))], axis=-1)
    np.testing.assert_allclose(normal, rho * np.einsum("pa,pa->p", acceleration, forms.N), atol=1e-8)
    np.testing.assert_allclose(tangential, rho * np.einsum("pa,pai->pi", acceleration, forms.shift), atol=1e-8)


def test_stencil_sample_levels(expanding_sphere_family):
    """Sampled levels are equally spaced around t and give the rate of C"""
    s = expanding_sphere_family.sample_grid()[:5]
    stencil = TimeStencil.sample(expanding_sphere_family, s, 0.2, 1e-2, levels=5)
    np.testing.assert_allclose(stencil.times, [0.18, 0.19, 0.2, 0.21, 0.22])
    np.testing.assert_allclose(stencil.rate(stencil.C), 0.0, atol=1e-10)
    with pytest.raises(StencilError):
        TimeStencil.sample(expanding_sphere_family, s, 0.2, 1e-2, levels=1)
