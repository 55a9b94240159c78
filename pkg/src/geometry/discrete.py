"""
Per-vertex discrete geometry of closed meshes and curves: normals, mean
curvature from the area gradient, angle-defect Gaussian curvature and the
dual-area divergence.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.geometry.mesh import DiscreteSurface, cell_vectors, check_cell_quality


@dataclass(frozen=True)
class MeshForms:
    """
    Per-vertex geometry summary of a discrete surface

    Attributes:
        N: Unit outward vertex normals (V, d)
        H: Mean curvature (V,), negative on outward spheres
        K: Angle defect (or turning angle for curves) per unit barycentric area (V,)
        area: Mixed Voronoi vertex areas (V,), the weights paired with H
        barycentric_area: One third (one half for curves) of the incident cell measures (V,)
        area_gradient: Gradient of total area with respect to each vertex (V, d)
        angle_defect: 2 pi minus the incident corner angles, or signed turning angle (V,)
        volume_weight: Length of the enclosed-volume gradient at each vertex (V,)
    """
    N: np.ndarray
    H: np.ndarray
    K: np.ndarray
    area: np.ndarray
    barycentric_area: np.ndarray
    area_gradient: np.ndarray
    angle_defect: np.ndarray
    volume_weight: np.ndarray

    @property
    def mean_curvature_vector(self) -> np.ndarray:
        """H N per vertex"""
        return self.H[:, None] * self.N

    @property
    def variational_curvature(self) -> np.ndarray:
        """
        Area gradient over volume gradient along N

        Moving vertex v by c N_v changes area and volume at the rates
        -H_var A_w c and A_w c with A_w the volume weight, so flows driven by
        this curvature descend area exactly at first order.
        """
        return -np.einsum("va,va->v", self.area_gradient, self.N) / self.volume_weight


def vertex_normals(surface: DiscreteSurface, vectors: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Area-weighted unit vertex normals and volume weights

    The enclosed-volume gradient at a vertex is the sum of the incident cell
    vectors divided by the ambient dimension; its direction is the normal and
    its length the volume weight.

    Returns:
        (N (V, d), volume weight (V,))
    """
    vectors = vectors if vectors is not None else cell_vectors(surface)
    ncorner = surface.cells.shape[1]
    gradient = surface.corner_matrix() @ np.repeat(vectors, ncorner, axis=0) / surface.ambient_dim
    weight = np.linalg.norm(gradient, axis=-1)
    return gradient / weight[:, None], weight


def corner_area_gradients(surface: DiscreteSurface) -> np.ndarray:
    """
    Gradient of each cell measure with respect to each of its corners

    For a triangle (i, j, k) the gradient at x_i is (1/2) n x (x_k - x_j);
    for a segment it is minus / plus the unit tangent at its start / end.

    Returns:
        Array (cells, corners, d)
    """
    pts = surface.vertices[surface.cells]
    if surface.is_curve:
        d = pts[:, 1] - pts[:, 0]
        unit = d / np.linalg.norm(d, axis=-1, keepdims=True)
        return np.stack([-unit, unit], axis=1)
    raw = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
    unit = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    opposite = np.roll(pts, -2, axis=1) - np.roll(pts, -1, axis=1)  # x_k - x_j at corner i
    return 0.5 * np.cross(unit[:, None, :], opposite)


def _corner_angles(pts: np.ndarray) -> np.ndarray:
    e1 = np.roll(pts, -1, axis=1) - pts
    e2 = np.roll(pts, -2, axis=1) - pts
    cross = np.linalg.norm(np.cross(e1, e2), axis=-1)
    dot = np.einsum("fca,fca->fc", e1, e2)
    return np.arctan2(cross, dot)


def _mixed_corner_areas(pts: np.ndarray, face_areas: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Voronoi share of each corner, with the obtuse-triangle fallback"""
    # cotangent at the corner opposite each edge
    cot = 1.0 / np.tan(angles)
    e_next = np.roll(pts, -1, axis=1) - pts   # x_j - x_i
    e_prev = np.roll(pts, -2, axis=1) - pts   # x_k - x_i
    len_next = np.einsum("fca,fca->fc", e_next, e_next)
    len_prev = np.einsum("fca,fca->fc", e_prev, e_prev)
    voronoi = 0.125 * (len_next * np.roll(cot, -2, axis=1) + len_prev * np.roll(cot, -1, axis=1))
    obtuse = angles > 0.5 * np.pi
    any_obtuse = obtuse.any(axis=1)
    share = np.where(obtuse, 0.5, 0.25) * face_areas[:, None]
    return np.where(any_obtuse[:, None], share, voronoi)


def fundamental_forms_mesh(surface: DiscreteSurface) -> MeshForms:
    """
    Discrete normals and curvatures at every vertex

    The mean curvature is H_v = -(dA/dx_v . N_v) / A_v with A_v the mixed
    Voronoi area, so an outward round sphere of radius R gives H close to
    -2/R and a regular polygon gives exactly -1/R. The Gaussian curvature is
    the angle defect divided by the barycentric area.

    Args:
        surface: Closed mesh or curve

    Returns:
        MeshForms with per-vertex quantities

    Raises:
        MeshQualityError: On a degenerate cell
    """
    measures = check_cell_quality(surface)
    corners = surface.corner_matrix()
    pts = surface.vertices[surface.cells]
    vec = cell_vectors(surface)
    ncorner = surface.cells.shape[1]

    grad = corners @ corner_area_gradients(surface).reshape(-1, surface.ambient_dim)
    normal, weight = vertex_normals(surface, vec)
    barycentric = corners @ np.repeat(measures / ncorner, ncorner)

    if surface.is_curve:
        area = barycentric
        start = pts[:, 1] - pts[:, 0]
        incoming = np.empty_like(start)
        outgoing = np.empty_like(start)
        incoming[surface.cells[:, 1]] = start
        outgoing[surface.cells[:, 0]] = start
        turn = np.arctan2(incoming[:, 0] * outgoing[:, 1] - incoming[:, 1] * outgoing[:, 0],
                          np.einsum("va,va->v", incoming, outgoing))
        defect = surface.orientation * turn
    else:
        angles = _corner_angles(pts)
        area = corners @ _mixed_corner_areas(pts, measures, angles).ravel()
        defect = 2.0 * np.pi - corners @ angles.ravel()

    mean = -np.einsum("va,va->v", grad, normal) / area
    return MeshForms(
        N=normal,
        H=mean,
        K=defect / barycentric,
        area=area,
        barycentric_area=barycentric,
        area_gradient=grad,
        angle_defect=defect,
        volume_weight=weight,
    )


def mesh_divergence(surface: DiscreteSurface, field: np.ndarray, forms: MeshForms = None) -> np.ndarray:
    """
    Dual-area divergence of a per-vertex ambient vector field

    div_v = -(1/A_v) sum over incident cells of (dA_f/dx_v) . W_f with W_f the
    cell average of the field; the weighted sum of div_v A_v vanishes on
    every closed surface.

    Args:
        surface: Closed mesh or curve
        field: Vertex vectors (V, d)
        forms: Precomputed MeshForms for the same surface

    Returns:
        Divergence per vertex (V,)
    """
    forms = forms if forms is not None else fundamental_forms_mesh(surface)
    cell_field = field[surface.cells].mean(axis=1)
    flux = np.einsum("fca,fa->fc", corner_area_gradients(surface), cell_field)
    return -(surface.corner_matrix() @ flux.ravel()) / forms.area
