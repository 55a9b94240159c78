"""
Tests for the analytic families and their exact kinematics
"""
import numpy as np
import pytest

from src.families.families import (FAMILY_PRESETS, FamilySpec, ReparametrizedFamily, cmc_sphere_oracle,
                                   make_family, preset_family)
from src.geometry.forms import fundamental_forms_param, velocity_field
from src.utils.helpers import DomainError


@pytest.mark.parametrize("name", sorted(FAMILY_PRESETS))
def test_presets_are_outward_oriented(name):
    """Every preset normal points away from its interior point"""
    family = preset_family(name)
    s = family.sample_grid()
    forms = fundamental_forms_param(family, s, 0.0)
    outward = forms.position - family.interior_point(s, 0.0)
    assert np.all(np.einsum("pa,pa->p", forms.N, outward) > 0)


def test_unknown_preset():
    """Unknown preset names are rejected"""
    with pytest.raises(DomainError):
        preset_family("klein-bottle")


def test_expanding_sphere_velocity(expanding_sphere_family):
    """R = 1 + t/2 moves with C = 1/2 and no tangential velocity"""
    s = expanding_sphere_family.sample_grid()
    velocity = velocity_field(expanding_sphere_family, s, 0.3)
    np.testing.assert_allclose(velocity.C, 0.5, atol=1e-13)
    np.testing.assert_allclose(velocity.V, 0.0, atol=1e-13)


def test_translation_splits_into_normal_and_tangential():
    """A rigid translation e_z has C = N_z and V^i S_i = e_z - C N"""
    family = make_family(FamilySpec(kind="translating-surface", translation=[0.0, 0.0, 1.0]))
    s = family.sample_grid()
    forms = fundamental_forms_param(family, s, 0.0)
    velocity = velocity_field(family, s, 0.0, forms)
    np.testing.assert_allclose(velocity.C, forms.N[:, 2], atol=1e-13)
    np.testing.assert_allclose(velocity.ambient(forms), np.broadcast_to([0.0, 0.0, 1.0], forms.N.shape),
                               atol=1e-12)


def test_rotation_is_tangential(rotating_sphere_family):
    """A spinning round sphere has zero normal speed"""
    s = rotating_sphere_family.sample_grid()
    velocity = velocity_field(rotating_sphere_family, s, 0.2)
    np.testing.assert_allclose(velocity.C, 0.0, atol=1e-13)
    assert np.max(np.abs(velocity.V)) > 0.5


def test_exact_derivatives_match_differences():
    """Closed-form tangents and velocity agree with centered differences"""
    family = preset_family("perturbed")
    s = family.sample_grid()[::7]
    h = 1e-6
    plus = s.copy()
    plus[:, 1] += h
    minus = s.copy()
    minus[:, 1] -= h
    numeric = (family.position(plus, 0.0) - family.position(minus, 0.0)) / (2 * h)
    np.testing.assert_allclose(family.tangents(s, 0.0)[:, :, 1], numeric, atol=1e-8)
    dt = (family.position(s, h) - family.position(s, -h)) / (2 * h)
    np.testing.assert_allclose(family.velocity(s, 0.0), dt, atol=1e-8)


def test_torus_has_no_star_center():
    """Tori are not star-shaped and have no volume-integral center"""
    assert preset_family("torus").star_center(0.0) is None
    assert preset_family("sphere").star_center(0.0) is not None


def test_reparametrized_family_keeps_velocity():
    """Changing the chart leaves the ambient velocity field unchanged"""
    base = preset_family("ellipsoid")
    warped = ReparametrizedFamily(base, epsilon=0.3)
    s = warped.sample_grid()
    mapped, _, _ = warped._jet(s)
    np.testing.assert_allclose(warped.velocity(s, 0.0), base.velocity(mapped, 0.0), atol=1e-14)
    with pytest.raises(DomainError):
        ReparametrizedFamily(base, epsilon=1.0)


@pytest.mark.parametrize("spec", [
    FamilySpec(kind="sphere", radius=1.0, radius_rate=-20.0),
    FamilySpec(kind="sphere", radius=-1.0),
    FamilySpec(kind="perturbed-sphere", amplitude=0.6),
    FamilySpec(kind="perturbed-sphere"),
    FamilySpec(kind="rotating-sphere"),
    FamilySpec(kind="torus", radius=1.0, tube_radius=1.2),
    FamilySpec(kind="torus", dim=1),
    FamilySpec(kind="ellipsoid", axes=[1.0, -1.0, 1.0]),
    FamilySpec(kind="ellipsoid", axes=[1.0, 1.0]),
    FamilySpec(kind="sphere", axis_permutation=[0, 0, 1]),
    FamilySpec(kind="sphere", t_min=0.5, t_max=0.1),
])
def test_invalid_family_specs(spec):
    """Schedules and shapes outside the regular range raise DomainError"""
    with pytest.raises(DomainError):
        make_family(spec)


def test_sphere_oracle():
    """Closed-form sphere curvature and its domain"""
    assert cmc_sphere_oracle(2.0, 2).mean_curvature == pytest.approx(-1.0)
    assert cmc_sphere_oracle(0.5, 3).mean_curvature == pytest.approx(-6.0)
    with pytest.raises(DomainError):
        cmc_sphere_oracle(0.0, 2)
    with pytest.raises(DomainError):
        cmc_sphere_oracle(1.0, 0)
