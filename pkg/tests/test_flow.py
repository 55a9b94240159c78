"""
Tests for curvature flows, equilibrium certificates and energies
"""
import csv

import numpy as np
import pytest
from pydantic import ValidationError

import src.flow.flow as flow_module
from src.flow.flow import (DIAGNOSTIC_COLUMNS, FlowConfig, FlowDiagnostics, FlowState, certify, choose_step,
                           lagrangian_energy, project_volume, record_state, run_to_equilibrium, step,
                           tangential_smoothing, velocity_law, write_certificate, young_laplace_residual)
from src.families.families import FamilySpec, make_family
from src.geometry.discrete import fundamental_forms_mesh
from src.geometry.forms import VelocityField, fundamental_forms_param
from src.geometry.measure import enclosed_volume, surface_area
from src.geometry.mesh import bumpy_sphere_mesh, icosphere, preset_mesh, regular_polygon
from src.utils.helpers import DomainError, StepSizeError


def test_law_aliases():
    """Long law names resolve to the short ones"""
    assert FlowConfig(law="volume-preserving-mcf").law == "vpmcf"
    assert FlowConfig(law="Young-Laplace-Relaxation").law == "yl"
    assert FlowConfig(law="mean-curvature-flow").law == "mcf"
    with pytest.raises(ValidationError):
        FlowConfig(law="willmore")
    with pytest.raises(ValidationError):
        FlowConfig(sigma=0.0)


def test_mcf_speed_on_unit_sphere(unit_icosphere):
    """Mean-curvature flow of the unit sphere starts with C = -2"""
    forms = fundamental_forms_mesh(unit_icosphere)
    velocity = velocity_law(unit_icosphere, forms, FlowConfig(law="mcf"))
    np.testing.assert_allclose(velocity.C, -2.0, rtol=2e-2)
    np.testing.assert_array_equal(velocity.V, 0.0)


def test_volume_preserving_speed_has_zero_flux():
    """sum(C A_w) vanishes, so volume is conserved at first order"""
    surface = preset_mesh("bumpy")
    forms = fundamental_forms_mesh(surface)
    velocity = velocity_law(surface, forms, FlowConfig(law="vpmcf", sigma=2.0, mu=0.5))
    assert abs(np.sum(velocity.C * forms.volume_weight)) < 1e-10
    assert np.max(np.abs(velocity.C)) > 0.1


def test_regular_polygon_is_stationary():
    """A regular polygon has uniform curvature and does not move"""
    polygon = regular_polygon(64)
    config = FlowConfig(law="vpmcf")
    state, record = step(FlowState.start(polygon, config), config)
    np.testing.assert_allclose(state.surface.vertices, polygon.vertices, atol=1e-12)
    assert record.H_relstd < 1e-12


def test_regular_polygon_is_certified_immediately():
    """Equilibrium is detected before any step"""
    _, diagnostics, certificate = run_to_equilibrium(regular_polygon(64, radius=2.0), FlowConfig(law="yl"))
    assert certificate is not None
    assert certificate.steps == 0
    assert certificate.pressure == pytest.approx(-0.5 / np.cos(np.pi / 64), rel=1e-12)
    assert certificate.radius == pytest.approx(2.0, rel=1e-12)
    assert len(diagnostics.records) == 1


def test_circle_shrinks_under_mcf():
    """Curve-shortening of a circle follows R(t) = sqrt(R0^2 - 2t)"""
    final, diagnostics, certificate = run_to_equilibrium(regular_polygon(256), FlowConfig(law="mcf", max_time=0.3))
    assert certificate is None
    assert diagnostics.last.time == pytest.approx(0.3, abs=1e-9)
    radius = np.mean(np.linalg.norm(final.vertices, axis=-1))
    assert radius == pytest.approx(np.sqrt(0.4), rel=5e-3)


def test_sphere_shrinks_under_mcf(unit_icosphere):
    """Mean-curvature flow of a sphere follows R(t) = sqrt(R0^2 - 4t)"""
    final, diagnostics, _ = run_to_equilibrium(unit_icosphere, FlowConfig(law="mcf", max_time=0.1))
    radius = np.mean(np.linalg.norm(final.vertices, axis=-1))
    assert radius == pytest.approx(np.sqrt(0.6), rel=5e-3)
    assert diagnostics.chi_constant


def test_ellipse_relaxes_to_circle():
    """Volume-preserving flow takes an ellipse to a certified circle of the same area"""
    ellipse = preset_mesh("ellipse")
    area = enclosed_volume(ellipse)
    final, diagnostics, certificate = run_to_equilibrium(ellipse, FlowConfig(law="vpmcf", max_steps=50_000))
    assert certificate is not None
    assert certificate.radial_deviation < 1e-2
    assert certificate.volume_drift < 1e-8
    assert enclosed_volume(final) == pytest.approx(area, rel=1e-8)
    energies = [r.energy for r in diagnostics.records]
    assert np.all(np.diff(energies) <= 1e-10)
    assert diagnostics.chi_constant
    assert diagnostics.energy_increases == 0
    assert diagnostics.max_gauss_bonnet < 1e-8


def test_ellipsoid_relaxes_to_sphere():
    """The relaxed ellipsoid is a sphere of the volume-equivalent radius"""
    final, diagnostics, certificate = run_to_equilibrium(preset_mesh("ellipsoid"), FlowConfig(law="yl", sigma=2.0))
    assert certificate is not None
    assert certificate.radius == pytest.approx((1.2 * 1.0 * 0.9) ** (1 / 3), rel=1e-2)
    assert certificate.radius == pytest.approx(certificate.equivalent_radius, rel=1e-2)
    assert certificate.radial_deviation < 1e-2
    assert certificate.volume_drift < 1e-8
    assert certificate.pressure == pytest.approx(-4.0 / certificate.radius, rel=2e-2)
    assert certificate.young_laplace_max < 2e-2 * abs(certificate.pressure)
    assert diagnostics.records[-1].sphericity > diagnostics.records[0].sphericity


def test_torus_is_not_certified(torus):
    """Tori never receive a sphere certificate"""
    _, diagnostics, certificate = run_to_equilibrium(torus, FlowConfig(law="vpmcf", max_steps=30))
    assert certificate is None
    assert diagnostics.last.chi == 0
    assert diagnostics.chi_constant


def test_mass_is_carried_with_vertices(unit_icosphere, rng):
    """Lagrangian transport keeps the total mass fixed under mcf"""
    density = 1.0 + rng.random(unit_icosphere.vertex_count)
    _, diagnostics, _ = run_to_equilibrium(unit_icosphere, FlowConfig(law="mcf", max_time=0.05), density=density)
    masses = [r.mass_total for r in diagnostics.records]
    np.testing.assert_allclose(masses, masses[0], rtol=1e-12)


def test_step_collapse():
    """A step below 1e-12 is an error"""
    polygon = regular_polygon(32)
    with pytest.raises(StepSizeError):
        choose_step(polygon, np.ones(32), FlowConfig(max_time=1.0), 1.0 - 1e-13)


def test_project_volume(unit_icosphere):
    """Uniform normal offsets restore the target volume"""
    target = enclosed_volume(unit_icosphere)
    grown = unit_icosphere.with_vertices(1.1 * unit_icosphere.vertices)
    assert enclosed_volume(project_volume(grown, target)) == pytest.approx(target, rel=1e-12)


def test_tangential_smoothing_is_tangent():
    """The smoothing displacement has no normal component"""
    surface = preset_mesh("bumpy")
    forms = fundamental_forms_mesh(surface)
    shift = tangential_smoothing(surface, forms)
    np.testing.assert_allclose(np.einsum("va,va->v", shift, forms.N), 0.0, atol=1e-14)


def test_young_laplace_residual_on_charts():
    """Round spheres satisfy P = sigma H exactly"""
    for radius, sigma, pressure in [(1.0, 1.0, -2.0), (2.0, 3.0, -3.0)]:
        family = make_family(FamilySpec(kind="sphere", radius=radius))
        forms = fundamental_forms_param(family, family.sample_grid(), 0.0)
        assert young_laplace_residual(forms, pressure, sigma).max < 1e-10
    with pytest.raises(DomainError):
        young_laplace_residual(forms, -2.0, 0.0)


def test_young_laplace_residual_on_meshes(polygon):
    """Regular polygons have a uniform residual"""
    residual = young_laplace_residual(polygon, -0.5, 1.0)
    assert residual.max < 1e-12
    assert residual.rms < 1e-12


def test_lagrangian_energy(unit_icosphere):
    """Static spheres carry only surface energy; uniform expansion adds T = A / 2"""
    config = FlowConfig(law="mcf")
    count = unit_icosphere.vertex_count
    still = VelocityField(C=np.zeros(count), V=np.zeros((count, 3)))
    kinetic, potential, lagrangian = lagrangian_energy(unit_icosphere, 1.0, still, config)
    assert kinetic == 0.0
    assert potential == pytest.approx(4.0 * np.pi, rel=2e-2)
    assert lagrangian == pytest.approx(-potential)

    moving = VelocityField(C=np.ones(count), V=np.zeros((count, 3)))
    kinetic, _, _ = lagrangian_energy(unit_icosphere, 1.0, moving, config)
    assert kinetic == pytest.approx(2.0 * np.pi, rel=2e-2)

    _, potential, _ = lagrangian_energy(unit_icosphere, 1.0, still, config, pressure=-2.0)
    expected = -2.0 * enclosed_volume(unit_icosphere) + surface_area(unit_icosphere)
    assert potential == pytest.approx(expected, rel=1e-12)


def test_diagnostics_and_certificate_files(tmp_path):
    """Diagnostics CSV columns and certificate text"""
    _, diagnostics, certificate = run_to_equilibrium(regular_polygon(32), FlowConfig())
    path = diagnostics.write_csv(tmp_path / "diagnostics.csv")
    with path.open() as handle:
        assert next(csv.reader(handle)) == DIAGNOSTIC_COLUMNS
    text = write_certificate(certificate, tmp_path / "certificate.txt").read_text()
    assert text.startswith("equilibrium certificate")
    assert "H_mean" in text
    missing = write_certificate(None, tmp_path / "none.txt", "torus").read_text()
    assert missing == "no certificate\ntorus\n"


def test_physical_pressure_sign():
    """The physical sign reports positive pressure inside a tensioned sphere"""
    _, _, certificate = run_to_equilibrium(regular_polygon(32), FlowConfig(physical_pressure=True))
    assert certificate.pressure < 0
    assert "pressure (physical sign) = " in certificate.to_text()
    assert "-" not in certificate.to_text().split("pressure (physical sign) = ")[1].splitlines()[0]


def test_self_intersection_check_passes_on_spheres():
    """Enabling the intersection check does not disturb a clean run"""
    _, _, certificate = run_to_equilibrium(icosphere(2), FlowConfig(check_intersections=True, max_steps=200,
                                                                    tau_h=5e-2))
    assert certificate is not None


def test_bumpy_sphere_relaxes():
    """A sphere with a 15% sectoral bump relaxes to a certified sphere of the same volume"""
    bumpy = bumpy_sphere_mesh(level=3, amplitude=0.15)
    volume = enclosed_volume(bumpy)
    final, diagnostics, certificate = run_to_equilibrium(bumpy, FlowConfig(law="vpmcf", max_steps=50_000))
    assert certificate is not None
    assert certificate.radial_deviation < 1e-2
    assert certificate.radius == pytest.approx(certificate.equivalent_radius, rel=1e-2)
    assert enclosed_volume(final) == pytest.approx(volume, rel=1e-8)
    assert certificate.energy_increases == 0
    assert certificate.gauss_bonnet_max < 1e-8
    assert diagnostics.chi_constant
    assert diagnostics.last.sphericity > diagnostics.records[0].sphericity


def test_icosphere_is_stationary_under_volume_preserving_flow():
    """A 3D icosphere barely moves before it is certified as the unit sphere"""
    sphere = icosphere(2)
    final, _, certificate = run_to_equilibrium(sphere, FlowConfig(law="vpmcf"))
    assert certificate is not None
    assert np.max(np.linalg.norm(final.vertices - sphere.vertices, axis=-1)) < 5e-2
    assert certificate.radius == pytest.approx(1.0, rel=2e-2)
    assert certificate.pressure == pytest.approx(-2.0, rel=5e-2)
    assert certificate.volume_drift < 1e-8


def test_mcf_time_step_refinement_is_first_order():
    """
    Explicit mean-curvature flow of a regular polygon converges in the time step

    A regular N-gon stays regular with R^2 = R0^2 - 2 t / cos(pi / N), so the
    only error left is the time discretization.
    """
    corners, end = 64, 0.1
    exact = np.sqrt(1.0 - 2.0 * end / np.cos(np.pi / corners))
    errors = []
    for dt in (1e-3, 5e-4, 2.5e-4):
        final, diagnostics, _ = run_to_equilibrium(regular_polygon(corners),
                                                   FlowConfig(law="mcf", max_time=end, max_step=dt))
        assert diagnostics.last.time == pytest.approx(end, abs=1e-12)
        errors.append(abs(np.mean(np.linalg.norm(final.vertices, axis=-1)) - exact))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert errors[0] > errors[1] > errors[2]
    assert np.all(orders > 0.9)


def test_young_laplace_residual_with_positive_pressure():
    """P > 0 against the negative outward curvature of an ellipsoid leaves a positive residual"""
    family = make_family(FamilySpec(kind="ellipsoid", axes=[2.0, 1.0, 1.0]))
    forms = fundamental_forms_param(family, family.sample_grid(), 0.0)
    residual = young_laplace_residual(forms, 0.5, 1.0)
    assert np.all(residual.values > 0.5)
    np.testing.assert_allclose(residual.values, 0.5 - forms.H, rtol=1e-14)
    assert np.all(young_laplace_residual(preset_mesh("ellipsoid"), 0.5, 1.0).values > 0.5)


def test_h_statistics_use_the_variational_curvature():
    """Recorded H statistics and the certificate pressure come from the curvature the flow drives"""
    surface = preset_mesh("bumpy")
    config = FlowConfig(sigma=2.0)
    state = FlowState.start(surface, config)
    record = record_state(state, config)
    H, weight = state.forms.variational_curvature, state.forms.volume_weight
    mean = np.sum(H * weight) / np.sum(weight)
    spread = np.sqrt(np.sum(weight * (H - mean) ** 2) / np.sum(weight)) / abs(mean)
    assert record.H_mean == pytest.approx(mean, rel=1e-12)
    assert record.H_relstd == pytest.approx(spread, rel=1e-12)

    polygon = regular_polygon(32)
    _, _, certificate = run_to_equilibrium(polygon, config)
    forms = fundamental_forms_mesh(polygon)
    assert certificate.pressure == pytest.approx(2.0 * np.mean(forms.variational_curvature), rel=1e-12)
    assert certificate.pressure != pytest.approx(2.0 * np.mean(forms.H), rel=1e-3)


def test_gauss_bonnet_is_recorded_every_step(torus):
    """Each diagnostics row carries the Gauss-Bonnet residual of its state"""
    _, diagnostics, _ = run_to_equilibrium(torus, FlowConfig(law="vpmcf", max_steps=5))
    assert len(diagnostics.records) == 6
    assert all(r.gauss_bonnet < 1e-8 for r in diagnostics.records)
    assert DIAGNOSTIC_COLUMNS[-1] == "gauss_bonnet"
    assert "gauss_bonnet" in diagnostics.records[-1].row()


def test_energy_increase_is_counted_and_certified(monkeypatch):
    """A step that raises the energy is counted, logged and written into the certificate"""
    real_step = flow_module.step

    def raised_energy(state, config):
        new_state, record = real_step(state, config)
        if new_state.step == 1:
            record = record.model_copy(update={"energy": record.energy + 1e-3})
        return new_state, record

    monkeypatch.setattr(flow_module, "step", raised_energy)
    _, diagnostics, _ = run_to_equilibrium(preset_mesh("ellipse"), FlowConfig(law="vpmcf", max_steps=3))
    assert diagnostics.energy_increases == 1

    config = FlowConfig()
    state = FlowState.start(regular_polygon(32), config)
    flagged = FlowDiagnostics(records=[record_state(state, config)], energy_increases=2)
    certificate = certify(state, flagged, config)
    assert certificate.energy_increases == 2
    assert "energy_increases = 2" in certificate.to_text()
