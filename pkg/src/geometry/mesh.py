"""
Discrete closed hypersurfaces: triangulated 2-surfaces in 3-space and closed
polygonal curves in the plane, with validation and standard generators.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.sparse import csr_matrix

from src.config import FACE_FLOOR
from src.utils.helpers import MeshQualityError, TopologyError
from src.utils.logging import setup_logger

# Set up logger
logger = setup_logger("mesh")


@dataclass(frozen=True)
class DiscreteSurface:
    """
    Closed discrete hypersurface

    Attributes:
        vertices: Ambient positions (V, 3) for triangle meshes or (V, 2) for curves
        cells: Triangles (F, 3) or oriented segments (E, 2)
        orientation: +1 when counter-clockwise triangles (or segments traversed
            with the interior on the left) give outward normals, -1 otherwise
    """
    vertices: np.ndarray
    cells: np.ndarray
    orientation: int = 1
    _edges: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.int64))

    @classmethod
    def from_cycle(cls, points: np.ndarray, orientation: int = 1) -> "DiscreteSurface":
        """Closed curve from vertices listed in cycle order"""
        count = len(points)
        index = np.arange(count)
        return cls(points, np.stack([index, (index + 1) % count], axis=-1), orientation)

    @property
    def is_curve(self) -> bool:
        return self.cells.shape[1] == 2

    @property
    def dim(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges (E, 2), smaller index first"""
        if not self._edges:
            if self.is_curve:
                pairs = self.cells
            else:
                pairs = self.cells[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
            self._edges.append(np.unique(np.sort(pairs, axis=1), axis=0))
        return self._edges[0]

    def corner_matrix(self) -> csr_matrix:
        """Sparse (V, cells * corners) map that sums per-corner values onto vertices"""
        corners = self.cells.ravel()
        data = np.ones(corners.size)
        return csr_matrix((data, (corners, np.arange(corners.size))),
                          shape=(self.vertex_count, corners.size))

    def with_vertices(self, vertices: np.ndarray) -> "DiscreteSurface":
        """Same connectivity at new positions"""
        return DiscreteSurface(vertices, self.cells, self.orientation, self._edges)


def cell_vectors(surface: DiscreteSurface) -> np.ndarray:
    """
    Oriented cell area vectors (cells, ambient)

    Triangles give (1/2)(b - a) x (c - a); segments a->b give (dy, -dx), the
    right-hand normal scaled by the length.
    """
    pts = surface.vertices[surface.cells]
    if surface.is_curve:
        d = pts[:, 1] - pts[:, 0]
        vec = np.stack([d[:, 1], -d[:, 0]], axis=-1)
    else:
        vec = 0.5 * np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
    return surface.orientation * vec


def cell_measures(surface: DiscreteSurface) -> np.ndarray:
    """Face areas (or segment lengths)"""
    return np.linalg.norm(cell_vectors(surface), axis=-1)


def check_cell_quality(surface: DiscreteSurface) -> np.ndarray:
    """
    Reject cells whose measure falls below FACE_FLOOR times the mean

    Returns:
        Cell measures

    Raises:
        MeshQualityError: On a degenerate cell
    """
    measures = cell_measures(surface)
    floor = FACE_FLOOR * float(np.mean(measures)) if measures.size else 0.0
    bad = np.flatnonzero(measures <= floor)
    if bad.size:
        raise MeshQualityError(
            f"{bad.size} degenerate cell(s), first {int(bad[0])} with measure {measures[bad[0]]:.3e}"
        )
    return measures


def validate_surface(surface: DiscreteSurface) -> None:
    """
    Check that a discrete surface is a closed, consistently oriented manifold

    Raises:
        TopologyError: Wrong dimensions, boundary, non-manifold edges or mixed winding
        MeshQualityError: Degenerate cells
    """
    cells = surface.cells
    count = surface.vertex_count
    if cells.ndim != 2 or cells.shape[1] not in (2, 3):
        raise TopologyError(f"Cells must be segments or triangles, got shape {cells.shape}")
    if surface.ambient_dim != surface.dim + 1:
        raise TopologyError(
            f"{surface.dim}-cells need {surface.dim + 1}-dimensional vertices, got {surface.ambient_dim}"
        )
    if cells.size and (cells.min() < 0 or cells.max() >= count):
        raise TopologyError("Cell index out of range")
    if np.any(cells[:, 0] == cells[:, 1]) or (not surface.is_curve and (
            np.any(cells[:, 1] == cells[:, 2]) or np.any(cells[:, 2] == cells[:, 0]))):
        raise TopologyError("Cell with a repeated vertex")

    if surface.is_curve:
        if count < 3:
            raise TopologyError(f"A closed curve needs at least 3 vertices, got {count}")
        starts = np.bincount(cells[:, 0], minlength=count)
        ends = np.bincount(cells[:, 1], minlength=count)
        if np.any(starts != 1) or np.any(ends != 1):
            raise TopologyError("Curve is not a union of closed vertex cycles")
    else:
        if count < 4:
            raise TopologyError(f"A closed mesh needs at least 4 vertices, got {count}")
        directed = cells[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
        undirected, uses = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
        if np.any(uses != 2):
            bad = undirected[uses != 2][0]
            raise TopologyError(
                f"Edge ({bad[0]}, {bad[1]}) is shared by {uses[uses != 2][0]} faces; mesh must be closed and manifold"
            )
        _, twice = np.unique(directed, axis=0, return_counts=True)
        if np.any(twice != 1):
            raise TopologyError("Inconsistent face winding: mesh is not consistently oriented")
    check_cell_quality(surface)


# Generators

def regular_polygon(count: int, radius: float = 1.0, center=(0.0, 0.0)) -> DiscreteSurface:
    """Counter-clockwise regular polygon inscribed in a circle"""
    angle = np.arange(count) * (2.0 * np.pi / count)
    points = np.stack([np.cos(angle), np.sin(angle)], axis=-1) * radius + np.asarray(center, dtype=float)
    return DiscreteSurface.from_cycle(points)


_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
_ICOSAHEDRON_VERTICES = np.array([
    [-1, _GOLDEN, 0], [1, _GOLDEN, 0], [-1, -_GOLDEN, 0], [1, -_GOLDEN, 0],
    [0, -1, _GOLDEN], [0, 1, _GOLDEN], [0, -1, -_GOLDEN], [0, 1, -_GOLDEN],
    [_GOLDEN, 0, -1], [_GOLDEN, 0, 1], [-_GOLDEN, 0, -1], [-_GOLDEN, 0, 1],
], dtype=float)
_ICOSAHEDRON_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def _orient_about(vertices: np.ndarray, faces: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Flip faces whose normal points toward a center the surface is star-shaped about"""
    pts = vertices[faces]
    normals = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
    inward = np.einsum("fa,fa->f", normals, pts.mean(axis=1) - center) < 0
    faces = faces.copy()
    faces[inward] = faces[inward][:, ::-1]
    return faces


def _subdivide(vertices: np.ndarray, faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split every triangle into four at its edge midpoints"""
    directed = faces[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    edges, inverse = np.unique(np.sort(directed, axis=1), axis=0, return_inverse=True)
    mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    mid = (len(vertices) + inverse.reshape(-1)).reshape(-1, 3)
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    ab, bc, ca = mid[:, 0], mid[:, 1], mid[:, 2]
    new_faces = np.concatenate([
        np.stack([a, ab, ca], axis=-1),
        np.stack([b, bc, ab], axis=-1),
        np.stack([c, ca, bc], axis=-1),
        np.stack([ab, bc, ca], axis=-1),
    ])
    return np.concatenate([vertices, mids]), new_faces


def icosphere(level: int = 3, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> DiscreteSurface:
    """
    Geodesic sphere from a subdivided icosahedron

    Args:
        level: Number of 1-to-4 subdivisions (level 0 is the icosahedron)
        radius: Sphere radius
        center: Sphere center

    Returns:
        Outward-oriented triangle mesh with 10 * 4^level + 2 vertices
    """
    vertices = _ICOSAHEDRON_VERTICES / np.linalg.norm(_ICOSAHEDRON_VERTICES[0])
    faces = _orient_about(vertices, _ICOSAHEDRON_FACES, np.zeros(3))
    for _ in range(level):
        vertices, faces = _subdivide(vertices, faces)
        vertices /= np.linalg.norm(vertices, axis=-1, keepdims=True)
    return DiscreteSurface(vertices * radius + np.asarray(center, dtype=float), faces)


def ellipsoid_mesh(axes=(1.2, 1.0, 0.9), level: int = 4) -> DiscreteSurface:
    """Icosphere scaled to the given semi-axes"""
    sphere = icosphere(level)
    return sphere.with_vertices(sphere.vertices * np.asarray(axes, dtype=float))


def bumpy_sphere_mesh(level: int = 4, amplitude: float = 0.15, mode: int = 3,
                      zonal: bool = False, radius: float = 1.0) -> DiscreteSurface:
    """
    Icosphere with radial perturbation r = radius (1 + amplitude Y)

    Y is Re (x + i y)^m (sectoral) or cos(m theta) (zonal) on the unit sphere.
    """
    sphere = icosphere(level)
    x, y, z = sphere.vertices.T
    if zonal:
        shape = np.cos(mode * np.arccos(np.clip(z, -1.0, 1.0)))
    else:
        shape = np.real((x + 1j * y) ** mode)
    scale = radius * (1.0 + amplitude * shape)
    return sphere.with_vertices(sphere.vertices * scale[:, None])


def torus_mesh(major: float = 1.0, minor: float = 0.4, ring_count: int = 48,
               tube_count: int = 24) -> DiscreteSurface:
    """Grid triangulation of a torus of revolution about the third axis"""
    u = np.arange(ring_count) * (2.0 * np.pi / ring_count)
    v = np.arange(tube_count) * (2.0 * np.pi / tube_count)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major + minor * np.cos(vv)
    vertices = np.stack([ring * np.cos(uu), ring * np.sin(uu), minor * np.sin(vv)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(ring_count), np.arange(tube_count), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % ring_count, (j + 1) % tube_count
    a, b, c, d = i * tube_count + j, ip * tube_count + j, ip * tube_count + jp, i * tube_count + jp
    faces = np.concatenate([np.stack([a, b, c], axis=-1), np.stack([a, c, d], axis=-1)])
    # outward means away from the tube center circle
    pts = vertices[faces[0]]
    normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
    centroid = pts.mean(axis=0)
    axis_point = major * np.array([centroid[0], centroid[1], 0.0]) / np.hypot(centroid[0], centroid[1])
    if np.dot(normal, centroid - axis_point) < 0:
        faces = faces[:, ::-1]
    return DiscreteSurface(vertices, faces)


def cube_mesh(size: float = 1.0) -> DiscreteSurface:
    """Axis-aligned cube [0, size]^3 split into 12 triangles"""
    vertices = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float) * size
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = np.array([tri for q in quads for tri in ((q[0], q[1], q[2]), (q[0], q[2], q[3]))])
    return DiscreteSurface(vertices, _orient_about(vertices, faces, np.full(3, 0.5 * size)))


def disjoint_union(*surfaces: DiscreteSurface) -> DiscreteSurface:
    """Concatenate surfaces of the same kind into one surface with several components"""
    if not surfaces:
        raise TopologyError("Nothing to join")
    if len({s.cells.shape[1] for s in surfaces}) != 1:
        raise TopologyError("Cannot join curves with triangle meshes")
    vertices, cells, offset = [], [], 0
    for s in surfaces:
        vertices.append(s.vertices)
        cells.append(s.cells if s.orientation == 1 else s.cells[:, ::-1])
        cells[-1] = cells[-1] + offset
        offset += s.vertex_count
    return DiscreteSurface(np.concatenate(vertices), np.concatenate(cells))


# Named starting surfaces for flow runs
MESH_PRESETS = {
    "circle": lambda: regular_polygon(128),
    "ellipse": lambda: DiscreteSurface.from_cycle(
        regular_polygon(128).vertices * np.array([1.5, 1.0])),
    "sphere": lambda: icosphere(3),
    "ellipsoid": lambda: ellipsoid_mesh((1.2, 1.0, 0.9), level=3),
    "bumpy": lambda: bumpy_sphere_mesh(level=3),
    "torus": lambda: torus_mesh(),
    "cube": lambda: _subdivided_cube(3),
}


def _subdivided_cube(level: int) -> DiscreteSurface:
    cube = cube_mesh(2.0)
    vertices, faces = cube.vertices - 1.0, cube.cells
    for _ in range(level):
        vertices, faces = _subdivide(vertices, faces)
    return DiscreteSurface(vertices, faces)


def preset_mesh(name: str) -> DiscreteSurface:
    """Build a named starting surface"""
    if name not in MESH_PRESETS:
        raise TopologyError(f"Unknown mesh '{name}'; known: {', '.join(sorted(MESH_PRESETS))}")
    return MESH_PRESETS[name]()
