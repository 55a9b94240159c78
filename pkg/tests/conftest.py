"""
Shared fixtures for the test suite
"""
import numpy as np
import pytest

from src.families.families import FamilySpec, make_family, preset_family
from src.geometry.mesh import icosphere, regular_polygon, torus_mesh


@pytest.fixture
def unit_sphere_family():
    """Static unit 2-sphere"""
    return make_family(FamilySpec(kind="sphere", name="unit"))


@pytest.fixture
def expanding_sphere_family():
    """Unit 2-sphere growing with R = 1 + t/2"""
    return make_family(FamilySpec(kind="sphere", name="expanding", radius_rate=0.5, t_max=1.0))


@pytest.fixture
def rotating_sphere_family():
    """Unit sphere spinning about the last axis with angular velocity 1"""
    return preset_family("rotate")


@pytest.fixture
def unit_icosphere():
    """Level-3 icosphere of radius 1"""
    return icosphere(3)


@pytest.fixture
def polygon():
    """Regular 256-gon of radius 2"""
    return regular_polygon(256, radius=2.0)


@pytest.fixture
def torus():
    """Coarse torus of revolution, chi = 0"""
    return torus_mesh(1.0, 0.4, 32, 16)


@pytest.fixture
def rng():
    """Seeded random generator"""
    return np.random.default_rng(7)
