"""
Global measurements of closed surfaces: area, enclosed volume, topology and
shape comparisons with the round sphere.
"""
import math
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from src.geometry.forms import ParamFamily, family_area, family_volume
from src.geometry.discrete import MeshForms, fundamental_forms_mesh
from src.geometry.mesh import DiscreteSurface, cell_measures, cell_vectors, validate_surface
from src.utils.logging import setup_logger

# Set up logger
logger = setup_logger("measure")

Surface = Union[DiscreteSurface, ParamFamily]


def surface_area(surface: Surface, t: float = 0.0, resolution: int = 64) -> float:
    """
    Total area of a closed surface (length for curves)

    Args:
        surface: Discrete surface or parametric family
        t: Time at which a family is evaluated
        resolution: Quadrature points per chart axis for families

    Returns:
        Area
    """
    if isinstance(surface, ParamFamily):
        return family_area(surface, t, resolution)
    return float(np.sum(cell_measures(surface)))


def enclosed_volume(surface: Surface, t: float = 0.0, resolution: int = 64) -> float:
    """
    Enclosed volume (1/(n+1)) of the closed integral of R.N dS

    A negative value means the cells are wound against the declared
    orientation; it is logged and returned unchanged.
    """
    if isinstance(surface, ParamFamily):
        volume = family_volume(surface, t, resolution)
    else:
        centroids = surface.vertices[surface.cells].mean(axis=1)
        volume = float(np.sum(np.einsum("fa,fa->f", centroids, cell_vectors(surface)))) / surface.ambient_dim
    if volume < 0:
        logger.warning(f"Negative enclosed volume {volume:.6g}: orientation is inverted")
    return volume


def component_count(surface: DiscreteSurface) -> int:
    """Number of connected components of the vertex graph"""
    edges = surface.edges
    count = surface.vertex_count
    graph = csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(count, count))
    components, _ = connected_components(graph, directed=False)
    return int(components)


def euler_characteristic(surface: DiscreteSurface) -> int:
    """
    chi = V - E + F (zero for every closed curve)

    Raises:
        TopologyError: If the surface is not a closed manifold
    """
    validate_surface(surface)
    vertices, edges = surface.vertex_count, len(surface.edges)
    if surface.is_curve:
        return vertices - edges
    return vertices - edges + len(surface.cells)


def gauss_bonnet_check(surface: DiscreteSurface, forms: Optional[MeshForms] = None) -> float:
    """
    Residual of discrete Gauss-Bonnet

    For meshes |sum of angle defects - 2 pi chi|; for curves the total signed
    turning of each component is 2 pi, so the residual is
    |sum of turning angles - 2 pi * components|.

    Pass the surface MeshForms to reuse their angle defects.
    """
    chi = euler_characteristic(surface)
    forms = forms if forms is not None else fundamental_forms_mesh(surface)
    total = float(np.sum(forms.angle_defect))
    if surface.is_curve:
        return abs(total - 2.0 * np.pi * component_count(surface))
    return abs(total - 2.0 * np.pi * chi)


def best_fit_sphere(surface: DiscreteSurface) -> Tuple[np.ndarray, float, float]:
    """
    Least-squares sphere through the vertices

    Solves |x|^2 = 2 c.x + k for (c, k); the radius is sqrt(k + |c|^2).

    Returns:
        (center, radius, max relative radial deviation)
    """
    x = surface.vertices
    lhs = np.hstack([2.0 * x, np.ones((len(x), 1))])
    rhs = np.einsum("va,va->v", x, x)
    solution, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    center, k = solution[:-1], solution[-1]
    radius = math.sqrt(max(k + float(center @ center), 0.0))
    deviation = float(np.max(np.abs(np.linalg.norm(x - center, axis=-1) - radius))) / radius
    return center, radius, deviation


def _unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def equivalent_radius(volume: float, ambient_dim: int) -> float:
    """Radius of the round ball with the given volume"""
    return (max(volume, 0.0) / _unit_ball_volume(ambient_dim)) ** (1.0 / ambient_dim)


def sphericity(surface: Surface, t: float = 0.0, resolution: int = 64) -> float:
    """Area of the volume-equivalent sphere divided by the current area"""
    adim = surface.ambient_dim
    radius = equivalent_radius(enclosed_volume(surface, t, resolution), adim)
    sphere_area = adim * _unit_ball_volume(adim) * radius ** (adim - 1)
    return sphere_area / surface_area(surface, t, resolution)


def _segments_cross(p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Proper crossings of one planar segment pq with segments (a, b)"""
    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])
    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _segment_hits_triangles(p: np.ndarray, q: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Segment pq against triangles (F, 3, 3), Moller-Trumbore with 0 < t < 1"""
    direction = q - p
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    pvec = np.cross(direction, e2)
    det = np.einsum("fa,fa->f", e1, pvec)
    valid = np.abs(det) > 1e-15
    inv = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
    tvec = p - tri[:, 0]
    u = np.einsum("fa,fa->f", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("a,fa->f", direction, qvec) * inv
    s = np.einsum("fa,fa->f", e2, qvec) * inv
    eps = 1e-12
    return valid & (u > eps) & (v > eps) & (u + v < 1 - eps) & (s > eps) & (s < 1 - eps)


def find_self_intersections(surface: DiscreteSurface) -> List[Tuple[int, int]]:
    """
    Brute-force search for edges piercing non-adjacent cells

    Quadratic in the mesh size; meant as an occasional debug check.

    Returns:
        Sorted (edge index, cell index) pairs
    """
    hits: List[Tuple[int, int]] = []
    cells = surface.cells
    pts = surface.vertices[cells]
    for index, (i, j) in enumerate(surface.edges):
        p, q = surface.vertices[i], surface.vertices[j]
        adjacent = np.any((cells == i) | (cells == j), axis=1)
        if surface.is_curve:
            crossing = _segments_cross(p, q, pts[:, 0], pts[:, 1])
        else:
            crossing = _segment_hits_triangles(p, q, pts)
        for cell in np.flatnonzero(crossing & ~adjacent):
            hits.append((index, int(cell)))
    if hits:
        logger.warning(f"Found {len(hits)} self-intersecting edge/cell pairs")
    return hits
