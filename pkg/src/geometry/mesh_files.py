"""
Mesh and field files: Wavefront OBJ for triangle meshes, CSV for closed curves
and per-vertex scalar fields. Floats are written with 17 significant digits.
"""
from pathlib import Path
from typing import List, Union

import meshio
import numpy as np

from src.geometry.mesh import DiscreteSurface
from src.utils.helpers import ConfigError, TopologyError

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"


def _fan(polygons: np.ndarray) -> np.ndarray:
    """Triangles (k, 3) of a block of same-size polygons (k, m)"""
    if polygons.shape[1] == 3:
        return polygons
    return np.concatenate([polygons[:, [0, j, j + 1]] for j in range(1, polygons.shape[1] - 1)], axis=0)


def write_obj(surface: DiscreteSurface, path: PathLike) -> Path:
    """Write a triangle mesh as OBJ with 1-based face indices"""
    if surface.is_curve:
        raise TopologyError("OBJ output holds triangle meshes; write curves as CSV")
    cells = surface.cells if surface.orientation == 1 else surface.cells[:, ::-1]
    path = Path(path)
    with path.open("w") as handle:
        np.savetxt(handle, surface.vertices, fmt="v " + " ".join([FLOAT_FORMAT] * surface.vertices.shape[1]))
        np.savetxt(handle, cells + 1, fmt="f %d %d %d")
    return path


def read_obj(path: PathLike) -> DiscreteSurface:
    """
    Read vertices and faces from an OBJ file through meshio

    Polygon blocks are fan-triangulated in file order.

    Raises:
        ConfigError: If the file is missing, unreadable or holds no faces
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Mesh file not found: {path}")
    try:
        mesh = meshio.read(path, file_format="obj")
    except (meshio.ReadError, ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: cannot read OBJ mesh ({exc})") from exc
    blocks = [np.asarray(block.data, dtype=int) for block in mesh.cells]
    faces = [_fan(block) for block in blocks if block.ndim == 2 and block.shape[1] >= 3]
    if len(mesh.points) == 0 or not faces:
        raise ConfigError(f"{path}: no vertices or faces")
    return DiscreteSurface(np.asarray(mesh.points, dtype=float)[:, :3], np.concatenate(faces, axis=0))


def _cycle_order(surface: DiscreteSurface) -> List[int]:
    order = [int(surface.cells[0, 0])]
    following = dict(zip(surface.cells[:, 0].tolist(), surface.cells[:, 1].tolist()))
    while following[order[-1]] != order[0]:
        order.append(following[order[-1]])
    if len(order) != surface.vertex_count:
        raise TopologyError("Curve CSV output holds one component")
    return order[::-1] if surface.orientation == -1 else order


def write_curve_csv(surface: DiscreteSurface, path: PathLike) -> Path:
    """Write a single closed curve as `x,y` rows in cycle order"""
    if not surface.is_curve:
        raise TopologyError("Curve CSV output needs a closed curve")
    path = Path(path)
    np.savetxt(path, surface.vertices[_cycle_order(surface)], fmt=FLOAT_FORMAT, delimiter=",",
               header="x,y", comments="")
    return path


def read_curve_csv(path: PathLike) -> DiscreteSurface:
    """Read a closed curve from `x,y` rows (an optional header is skipped)"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Curve file not found: {path}")
    try:
        table = np.genfromtxt(path, delimiter=",", dtype=float, ndmin=2, invalid_raise=True)
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse curve ({exc})") from exc
    if table.size and np.all(np.isnan(table[0])):
        table = table[1:]
    if table.ndim != 2 or table.shape[1] < 2 or np.any(np.isnan(table[:, :2])):
        raise ConfigError(f"{path}: expected numeric x,y rows")
    if len(table) < 3:
        raise ConfigError(f"{path}: a closed curve needs at least 3 points")
    return DiscreteSurface.from_cycle(table[:, :2].copy())


def read_surface(path: PathLike) -> DiscreteSurface:
    """Dispatch on the file suffix: .obj meshes or .csv curves"""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return read_obj(path)
    if suffix == ".csv":
        return read_curve_csv(path)
    raise ConfigError(f"Unsupported surface file type '{suffix}' (use .obj or .csv)")


def write_surface(surface: DiscreteSurface, path: PathLike) -> Path:
    """Write a mesh as OBJ or a curve as CSV, matching the surface kind"""
    if surface.is_curve:
        return write_curve_csv(surface, path)
    return write_obj(surface, path)


def write_field_csv(values: np.ndarray, path: PathLike) -> Path:
    """Write a per-vertex scalar field as `vertex_id,value` rows"""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    np.savetxt(path, np.column_stack([np.arange(len(values)), values]), fmt=["%d", FLOAT_FORMAT],
               delimiter=",", header="vertex_id,value", comments="")
    return path
