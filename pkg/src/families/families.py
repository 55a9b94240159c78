"""
Analytic time-dependent embeddings used as verification oracles.
"""
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.families.charts import mode_function, polar_sample_axes, unit_sphere_chart
from src.geometry.chart import gauss_legendre, periodic_trapezoid, tensor_grid, tensor_rule
from src.geometry.forms import ParamFamily
from src.utils.helpers import DomainError
from src.utils.logging import setup_logger

# Set up logger
logger = setup_logger("families")

POLE_MARGIN = 1e-2
AMPLITUDE_LIMIT = 0.5

FamilyKind = Literal["sphere", "ellipsoid", "torus", "perturbed-sphere",
                     "translating-surface", "rotating-sphere"]


class FamilySpec(BaseModel):
    """Declarative description of an analytic family and its time schedule"""
    model_config = ConfigDict(extra="forbid")

    kind: FamilyKind = "sphere"
    name: Optional[str] = None
    dim: int = Field(default=2, ge=1, le=3)
    radius: float = 1.0
    radius_rate: float = 0.0
    radius_accel: float = 0.0
    axes: Optional[List[float]] = None
    axis_permutation: Optional[List[int]] = None
    amplitude: float = 0.0
    amplitude_rate: float = 0.0
    mode: int = Field(default=2, ge=0)
    zonal: bool = False
    center: Optional[List[float]] = None
    translation: Optional[List[float]] = None
    angular_velocity: float = 0.0
    tube_radius: float = 0.4
    tube_rate: float = 0.0
    t_min: float = -0.1
    t_max: float = 0.1


class AffineRadialFamily(ParamFamily):
    """
    R(s, t) = c(t) + Q(t) L [rho(t) (1 + a(t) Y(s)) u(s)]

    u is the unit n-sphere chart, Y a perturbation mode, L a fixed linear map
    (semi-axes and axis permutation), Q(t) a rotation in the plane of the
    first two ambient axes and c(t) a uniformly translating center.
    """

    def __init__(self, dim: int, linear: np.ndarray, radius: Tuple[float, float, float],
                 amplitude: Tuple[float, float] = (0.0, 0.0), mode: int = 2, zonal: bool = False,
                 center: Optional[np.ndarray] = None, translation: Optional[np.ndarray] = None,
                 angular_velocity: float = 0.0, name: str = "affine-radial"):
        super().__init__(dim)
        adim = dim + 1
        self.name = name
        self.linear = np.asarray(linear, dtype=float).reshape(adim, adim)
        self.radius = radius
        self.amplitude = amplitude
        self.mode = mode
        self.zonal = zonal
        self.center0 = np.zeros(adim) if center is None else np.asarray(center, dtype=float)
        self.translation = np.zeros(adim) if translation is None else np.asarray(translation, dtype=float)
        self.angular_velocity = angular_velocity
        self.calibrate_orientation()

    # schedules
    def rho(self, t: float) -> Tuple[float, float, float]:
        r0, v, a = self.radius
        return r0 + v * t + 0.5 * a * t * t, v + a * t, a

    def alpha(self, t: float) -> Tuple[float, float]:
        a0, a1 = self.amplitude
        return a0 + a1 * t, a1

    def center(self, t: float) -> np.ndarray:
        return self.center0 + t * self.translation

    def rotation(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        adim = self.ambient_dim
        angle = self.angular_velocity * t
        q = np.eye(adim)
        dq = np.zeros((adim, adim))
        c, sn = np.cos(angle), np.sin(angle)
        q[0, 0], q[0, 1], q[1, 0], q[1, 1] = c, -sn, sn, c
        w = self.angular_velocity
        dq[0, 0], dq[0, 1], dq[1, 0], dq[1, 1] = -w * sn, -w * c, w * c, -w * sn
        return q, dq

    def _radial(self, s: np.ndarray, t: float):
        rho, _, _ = self.rho(t)
        alpha, _ = self.alpha(t)
        if self.amplitude == (0.0, 0.0):
            count, dim = s.shape
            return rho * np.ones(count), np.zeros((count, dim)), np.zeros((count, dim, dim))
        y, dy, d2y = mode_function(s, self.mode, self.zonal)
        return rho * (1.0 + alpha * y), rho * alpha * dy, rho * alpha * d2y

    def _map(self, t: float) -> np.ndarray:
        q, _ = self.rotation(t)
        return q @ self.linear

    def position(self, s: np.ndarray, t: float) -> np.ndarray:
        u, _, _ = unit_sphere_chart(s)
        r, _, _ = self._radial(s, t)
        return self.center(t) + np.einsum("ab,pb->pa", self._map(t), r[:, None] * u)

    def tangents(self, s: np.ndarray, t: float) -> np.ndarray:
        u, du, _ = unit_sphere_chart(s)
        r, dr, _ = self._radial(s, t)
        local = u[:, :, None] * dr[:, None, :] + r[:, None, None] * du
        return np.einsum("ab,pbi->pai", self._map(t), local)

    def hessian(self, s: np.ndarray, t: float) -> np.ndarray:
        u, du, d2u = unit_sphere_chart(s)
        r, dr, d2r = self._radial(s, t)
        local = (u[:, :, None, None] * d2r[:, None, :, :]
                 + du[:, :, :, None] * dr[:, None, None, :]
                 + du[:, :, None, :] * dr[:, None, :, None]
                 + r[:, None, None, None] * d2u)
        return np.einsum("ab,pbij->paij", self._map(t), local)

    def velocity(self, s: np.ndarray, t: float) -> np.ndarray:
        u, _, _ = unit_sphere_chart(s)
        rho, drho, _ = self.rho(t)
        alpha, dalpha = self.alpha(t)
        if self.amplitude == (0.0, 0.0):
            y = np.zeros(s.shape[0])
        else:
            y, _, _ = mode_function(s, self.mode, self.zonal)
        r = rho * (1.0 + alpha * y)
        dr = drho * (1.0 + alpha * y) + rho * dalpha * y
        q, dq = self.rotation(t)
        moving = np.einsum("ab,pb->pa", dq @ self.linear, r[:, None] * u)
        growing = np.einsum("ab,pb->pa", q @ self.linear, dr[:, None] * u)
        return self.translation + moving + growing

    def sample_grid(self) -> np.ndarray:
        if self.dim == 3:
            return tensor_grid(polar_sample_axes(3, POLE_MARGIN, 9, 17))
        return tensor_grid(polar_sample_axes(self.dim, POLE_MARGIN))

    def quadrature(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        rules = [gauss_legendre(resolution, 0.0, np.pi) for _ in range(self.dim - 1)]
        rules.append(periodic_trapezoid(resolution))
        return tensor_rule(rules)

    def stencil_steps(self, s: np.ndarray, step: Optional[float] = None) -> np.ndarray:
        """Shrink polar-axis steps near the chart poles so stencils never cross them"""
        steps = np.full(s.shape, step or self.spatial_step, dtype=float)
        polar = s[:, :-1]
        to_pole = np.minimum(np.abs(polar), np.abs(np.pi - polar))
        steps[:, :-1] = np.minimum(steps[:, :-1], 0.25 * to_pole)
        return steps

    def interior_point(self, s: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(self.center(t), (s.shape[0], self.ambient_dim))

    def star_center(self, t: float) -> Optional[np.ndarray]:
        return self.center(t)


class TorusFamily(ParamFamily):
    """
    Torus of revolution about the third axis with a tube-radius schedule

    Chart s = (v, u): v runs around the tube, u around the symmetry axis.
    """

    def __init__(self, major: float, tube: Tuple[float, float], center: Optional[np.ndarray] = None,
                 translation: Optional[np.ndarray] = None, name: str = "torus"):
        super().__init__(2)
        self.name = name
        self.major = major
        self.tube = tube
        self.center0 = np.zeros(3) if center is None else np.asarray(center, dtype=float)
        self.translation = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        self.calibrate_orientation()

    def _b(self, t: float) -> Tuple[float, float]:
        return self.tube[0] + self.tube[1] * t, self.tube[1]

    def position(self, s: np.ndarray, t: float) -> np.ndarray:
        v, u = s[:, 0], s[:, 1]
        b, _ = self._b(t)
        ring = self.major + b * np.cos(v)
        pts = np.stack([ring * np.cos(u), ring * np.sin(u), b * np.sin(v)], axis=-1)
        return pts + self.center0 + t * self.translation

    def tangents(self, s: np.ndarray, t: float) -> np.ndarray:
        v, u = s[:, 0], s[:, 1]
        b, _ = self._b(t)
        ring = self.major + b * np.cos(v)
        dv = np.stack([-b * np.sin(v) * np.cos(u), -b * np.sin(v) * np.sin(u), b * np.cos(v)], axis=-1)
        du = np.stack([-ring * np.sin(u), ring * np.cos(u), np.zeros_like(u)], axis=-1)
        return np.stack([dv, du], axis=-1)

    def hessian(self, s: np.ndarray, t: float) -> np.ndarray:
        v, u = s[:, 0], s[:, 1]
        b, _ = self._b(t)
        ring = self.major + b * np.cos(v)
        zero = np.zeros_like(u)
        dvv = np.stack([-b * np.cos(v) * np.cos(u), -b * np.cos(v) * np.sin(u), -b * np.sin(v)], axis=-1)
        duv = np.stack([b * np.sin(v) * np.sin(u), -b * np.sin(v) * np.cos(u), zero], axis=-1)
        duu = np.stack([-ring * np.cos(u), -ring * np.sin(u), zero], axis=-1)
        hess = np.empty((s.shape[0], 3, 2, 2))
        hess[:, :, 0, 0] = dvv
        hess[:, :, 0, 1] = duv
        hess[:, :, 1, 0] = duv
        hess[:, :, 1, 1] = duu
        return hess

    def velocity(self, s: np.ndarray, t: float) -> np.ndarray:
        v, u = s[:, 0], s[:, 1]
        _, db = self._b(t)
        tube_dir = np.stack([np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), np.sin(v)], axis=-1)
        return self.translation + db * tube_dir

    def sample_grid(self) -> np.ndarray:
        return tensor_grid([np.arange(17) * (2 * np.pi / 17), np.arange(33) * (2 * np.pi / 33)])

    def quadrature(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        return tensor_rule([periodic_trapezoid(resolution), periodic_trapezoid(resolution)])

    def interior_point(self, s: np.ndarray, t: float) -> np.ndarray:
        u = s[:, 1]
        ring = np.stack([self.major * np.cos(u), self.major * np.sin(u), np.zeros_like(u)], axis=-1)
        return ring + self.center0 + t * self.translation


class ReparametrizedFamily(ParamFamily):
    """
    A family viewed through the chart map s_i = s'_i + (eps/2) sin(2 s'_i)

    The map fixes 0, pi and 2 pi, so polar and periodic ranges are preserved.
    """

    def __init__(self, base: ParamFamily, epsilon: float = 0.2):
        if not 0.0 <= epsilon < 1.0:
            raise DomainError(f"Reparametrization strength must lie in [0, 1), got {epsilon}")
        super().__init__(base.dim, base.fd_step, base.spatial_step)
        self.base = base
        self.epsilon = epsilon
        self.name = f"{base.name}~reparam"
        self.orientation = base.orientation

    def _jet(self, s: np.ndarray):
        e = self.epsilon
        return s + 0.5 * e * np.sin(2 * s), 1.0 + e * np.cos(2 * s), -2.0 * e * np.sin(2 * s)

    def position(self, s: np.ndarray, t: float) -> np.ndarray:
        g, _, _ = self._jet(s)
        return self.base.position(g, t)

    def tangents(self, s: np.ndarray, t: float) -> np.ndarray:
        g, dg, _ = self._jet(s)
        return self.base.tangents(g, t) * dg[:, None, :]

    def hessian(self, s: np.ndarray, t: float) -> np.ndarray:
        g, dg, d2g = self._jet(s)
        hess = self.base.hessian(g, t) * dg[:, None, :, None] * dg[:, None, None, :]
        tangents = self.base.tangents(g, t)
        for i in range(self.dim):
            hess[:, :, i, i] += tangents[:, :, i] * d2g[:, None, i]
        return hess

    def velocity(self, s: np.ndarray, t: float) -> np.ndarray:
        g, _, _ = self._jet(s)
        return self.base.velocity(g, t)

    def sample_grid(self) -> np.ndarray:
        return self.base.sample_grid()

    def quadrature(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        nodes, weights = self.base.quadrature(resolution)
        _, dg, _ = self._jet(nodes)
        return nodes, weights * np.prod(dg, axis=-1)

    def stencil_steps(self, s: np.ndarray, step: Optional[float] = None) -> np.ndarray:
        return self.base.stencil_steps(s, step or self.spatial_step)

    def interior_point(self, s: np.ndarray, t: float) -> np.ndarray:
        g, _, _ = self._jet(s)
        return self.base.interior_point(g, t)

    def star_center(self, t: float) -> Optional[np.ndarray]:
        return self.base.star_center(t)


def _check_schedule(spec: FamilySpec) -> None:
    """Reject schedules that leave the regular range on [t_min, t_max]"""
    if spec.t_max < spec.t_min:
        raise DomainError(f"Empty time window [{spec.t_min}, {spec.t_max}]")
    times = [spec.t_min, spec.t_max]
    if spec.radius_accel != 0.0:
        vertex = -spec.radius_rate / spec.radius_accel
        if spec.t_min < vertex < spec.t_max:
            times.append(vertex)
    radii = [spec.radius + spec.radius_rate * t + 0.5 * spec.radius_accel * t * t for t in times]
    if min(radii) <= 0.0:
        raise DomainError(f"Radius schedule reaches {min(radii):.4g} <= 0 on the time window")
    amplitudes = [abs(spec.amplitude + spec.amplitude_rate * t) for t in (spec.t_min, spec.t_max)]
    if max(amplitudes) >= AMPLITUDE_LIMIT:
        raise DomainError(
            f"Perturbation amplitude {max(amplitudes):.4g} reaches the embedding limit {AMPLITUDE_LIMIT}"
        )


def _vector(values: Optional[List[float]], adim: int, label: str) -> Optional[np.ndarray]:
    if values is None:
        return None
    if len(values) != adim:
        raise DomainError(f"{label} needs {adim} components, got {len(values)}")
    return np.asarray(values, dtype=float)


def _linear_map(spec: FamilySpec) -> np.ndarray:
    adim = spec.dim + 1
    axes = np.ones(adim) if spec.axes is None else _vector(spec.axes, adim, "axes")
    if np.any(axes <= 0.0):
        raise DomainError(f"Semi-axes must be positive, got {axes.tolist()}")
    perm = list(range(adim)) if spec.axis_permutation is None else list(spec.axis_permutation)
    if sorted(perm) != list(range(adim)):
        raise DomainError(f"axis_permutation must permute 0..{adim - 1}, got {perm}")
    linear = np.zeros((adim, adim))
    for k, target in enumerate(perm):
        linear[target, k] = axes[target]
    return linear


def make_family(spec: FamilySpec) -> ParamFamily:
    """
    Build a parametric family with exact derivatives from a spec

    Args:
        spec: Family description

    Returns:
        ParamFamily whose velocity decomposes exactly into (C, V^i)

    Raises:
        DomainError: If the schedule or shape parameters leave the regular range
    """
    _check_schedule(spec)
    adim = spec.dim + 1
    name = spec.name or spec.kind
    center = _vector(spec.center, adim, "center")
    translation = _vector(spec.translation, adim, "translation")

    if spec.kind == "torus":
        if spec.dim != 2:
            raise DomainError("Torus families are two-dimensional")
        tubes = [spec.tube_radius + spec.tube_rate * t for t in (spec.t_min, spec.t_max)]
        if min(tubes) <= 0.0 or max(tubes) >= spec.radius:
            raise DomainError(f"Tube radius must stay in (0, {spec.radius}) on the time window")
        family = TorusFamily(spec.radius, (spec.tube_radius, spec.tube_rate), center, translation, name)
    else:
        if spec.kind == "translating-surface" and (translation is None or not np.any(translation)):
            translation = np.zeros(adim)
            translation[-1] = 1.0
        if spec.kind == "rotating-sphere" and spec.angular_velocity == 0.0:
            raise DomainError("rotating-sphere needs a nonzero angular_velocity")
        if spec.kind == "perturbed-sphere" and spec.amplitude == 0.0 and spec.amplitude_rate == 0.0:
            raise DomainError("perturbed-sphere needs a nonzero amplitude or amplitude_rate")
        family = AffineRadialFamily(
            spec.dim, _linear_map(spec),
            (spec.radius, spec.radius_rate, spec.radius_accel),
            (spec.amplitude, spec.amplitude_rate), spec.mode, spec.zonal,
            center, translation, spec.angular_velocity, name,
        )
    logger.debug(f"Built family {name} (kind={spec.kind}, dim={spec.dim})")
    return family


@dataclass(frozen=True)
class SphereOracle:
    """Closed-form curvature of the round n-sphere of radius R"""
    radius: float
    dim: int

    @property
    def mean_curvature(self) -> float:
        return -self.dim / self.radius

    def curvature_tensor(self, metric: np.ndarray) -> np.ndarray:
        """B_ij = -S_ij / R"""
        return -np.asarray(metric) / self.radius


def cmc_sphere_oracle(radius: float, dim: int) -> SphereOracle:
    """Closed-form curvature of the round sphere: B_ij = -S_ij/R and H = -n/R"""
    if radius <= 0.0:
        raise DomainError(f"Sphere radius must be positive, got {radius}")
    if dim < 1:
        raise DomainError(f"Sphere dimension must be positive, got {dim}")
    return SphereOracle(radius=radius, dim=dim)


# Named families for the verification suite and run configs
FAMILY_PRESETS: Dict[str, FamilySpec] = {
    "sphere": FamilySpec(kind="sphere", name="sphere", radius=1.0, radius_rate=0.3, radius_accel=0.8),
    "static": FamilySpec(kind="sphere", name="static", radius=1.0),
    "circle": FamilySpec(kind="sphere", name="circle", dim=1, radius=2.0, radius_rate=-0.4, radius_accel=0.6),
    "sphere3": FamilySpec(kind="sphere", name="sphere3", dim=3, radius=1.0, radius_rate=0.25, radius_accel=0.5),
    "ellipsoid": FamilySpec(kind="ellipsoid", name="ellipsoid", axes=[1.2, 1.0, 0.8],
                            radius_rate=0.2, radius_accel=0.3, angular_velocity=0.7),
    "translate": FamilySpec(kind="translating-surface", name="translate", axes=[1.1, 1.0, 0.9],
                            translation=[0.0, 0.0, 0.6]),
    "perturbed": FamilySpec(kind="perturbed-sphere", name="perturbed", amplitude=0.1,
                            amplitude_rate=0.5, radius_rate=0.1, mode=2),
    "rotate": FamilySpec(kind="rotating-sphere", name="rotate", angular_velocity=1.0),
    "torus": FamilySpec(kind="torus", name="torus", radius=1.0, tube_radius=0.4, tube_rate=0.3,
                        translation=[0.2, -0.1, 0.3]),
}


def preset_family(name: str) -> ParamFamily:
    """Build a named preset family"""
    if name not in FAMILY_PRESETS:
        raise DomainError(f"Unknown family '{name}'; known: {', '.join(sorted(FAMILY_PRESETS))}")
    return make_family(FAMILY_PRESETS[name])
