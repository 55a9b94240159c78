"""
Scalar fields on moving surfaces: the continuity law for surface densities
and the residuals of the surface momentum balance.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from src.geometry.discrete import MeshForms, fundamental_forms_mesh, mesh_divergence
from src.geometry.forms import ParamFamily, VelocityField, fundamental_forms_param, velocity_field
from src.geometry.mesh import DiscreteSurface
from src.utils.helpers import DomainError, StencilError, StepSizeError
from src.utils.logging import setup_logger
from src.geometry.kinematics import ChartKinematics, SurfaceScalar

# Set up logger
logger = setup_logger("pde")

AmbientScalar = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SurfaceField:
    """
    Scalar samples with the area weight each sample carries

    Attributes:
        values: Per-vertex or per-chart-sample values (P,)
        weights: Dual areas on meshes, quadrature weight times sqrt|S| on charts (P,)
    """
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.values.shape != self.weights.shape:
            raise DomainError(f"Field has {self.values.shape} values but {self.weights.shape} weights")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Field values must be finite")

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.weights

    def total(self) -> float:
        return float(np.sum(self.masses))


def mesh_field(surface: DiscreteSurface, values, forms: Optional[MeshForms] = None) -> SurfaceField:
    """Attach mixed Voronoi vertex areas to per-vertex values (scalars broadcast)"""
    forms = forms if forms is not None else fundamental_forms_mesh(surface)
    values = np.broadcast_to(np.asarray(values, dtype=float), forms.area.shape).copy()
    return SurfaceField(values, forms.area)


def divergence(surface: DiscreteSurface, field: np.ndarray, forms: Optional[MeshForms] = None) -> np.ndarray:
    """
    Dual-area divergence of a vertex tangent field

    The normal component of the field is removed first; the area-weighted sum
    of the result vanishes on every closed surface.
    """
    forms = forms if forms is not None else fundamental_forms_mesh(surface)
    tangential = field - np.einsum("va,va->v", field, forms.N)[:, None] * forms.N
    return mesh_divergence(surface, tangential, forms)


def advect_density(rho: SurfaceField, velocity: VelocityField, forms: MeshForms, dt: float,
                   surface: Optional[DiscreteSurface] = None) -> SurfaceField:
    """
    One explicit step of the local continuity law at moving vertices

    Vertices follow the full velocity C N + V, so the vertex rate of the
    density is rho (C H - div V); with V = 0 this is rho C H. The weights are
    advanced with the matching area rate so each vertex mass changes only at
    second order in dt.

    Args:
        rho: Density with its vertex areas
        velocity: Normal speeds and ambient tangent vectors per vertex
        forms: Discrete geometry of the current surface
        dt: Time step
        surface: Current surface, needed when the tangential velocity is nonzero

    Returns:
        Density at the new time

    Raises:
        StepSizeError: If the step drives a density negative
    """
    rate = velocity.C * forms.H
    if np.any(velocity.V):
        if surface is None:
            raise DomainError("Tangential advection needs the current surface")
        rate = rate - divergence(surface, velocity.V, forms)
    values = rho.values * (1.0 + dt * rate)
    if np.any(values < 0):
        raise StepSizeError(f"Density became negative (min {values.min():.3e}); reduce dt={dt:.3e}")
    return SurfaceField(values, rho.weights * (1.0 - dt * rate))


def transport_mass(rho: SurfaceField, surface: DiscreteSurface, forms: Optional[MeshForms] = None) -> SurfaceField:
    """Carry vertex masses to a moved surface: the new density is m_v / A_v"""
    forms = forms if forms is not None else fundamental_forms_mesh(surface)
    if forms.area.shape != rho.values.shape:
        raise DomainError("Mass transport needs the same vertices on both surfaces")
    return SurfaceField(rho.masses / forms.area, forms.area)


def total_mass(rho: Union[SurfaceField, np.ndarray], surface: Optional[DiscreteSurface] = None) -> float:
    """
    Quadrature of rho dS

    A SurfaceField carries its own weights; bare vertex values are weighted
    with the mixed Voronoi areas of the given surface.
    """
    if isinstance(rho, SurfaceField):
        return rho.total()
    if surface is None:
        raise DomainError("Vertex values need a surface to integrate over")
    return mesh_field(surface, rho).total()


# Chart-sample densities

def chart_density(family: ParamFamily, density0: np.ndarray, t0: float, s: np.ndarray, t: float) -> np.ndarray:
    """Lagrangian density at fixed chart points: rho_0 sqrt|S(t0)| / sqrt|S(t)|"""
    start = fundamental_forms_param(family, s, t0).sqrt_det
    now = fundamental_forms_param(family, s, t).sqrt_det
    return np.asarray(density0, dtype=float) * start / now


def chart_field(family: ParamFamily, values, t: float, resolution: int = 32) -> Tuple[np.ndarray, SurfaceField]:
    """Density samples at the family quadrature nodes, weighted by w sqrt|S|"""
    nodes, weights = family.quadrature(resolution)
    forms = fundamental_forms_param(family, nodes, t)
    values = values(nodes) if callable(values) else np.broadcast_to(values, weights.shape)
    return nodes, SurfaceField(np.array(values, dtype=float), weights * forms.sqrt_det)


def advect_density_chart(family: ParamFamily, field: SurfaceField, s: np.ndarray, t: float, dt: float) -> SurfaceField:
    """
    Explicit Euler step of d_t rho = rho (C B_i^i - nabla_i V^i) at fixed chart points

    Includes the tangential divergence, so it is exercised by rotating and
    translating families as well as by pure normal motion.
    """
    kin = ChartKinematics(family, s, t)
    rate = kin.C * kin.forms.H - kin.divergence_V
    values = field.values * (1.0 + dt * rate)
    if np.any(values < 0):
        raise StepSizeError(f"Density became negative (min {values.min():.3e}); reduce dt={dt:.3e}")
    later = fundamental_forms_param(family, s, t + dt).sqrt_det
    return SurfaceField(values, field.weights * later / kin.forms.sqrt_det)


# Momentum balance

def derivative_weights(times: Sequence[float], at: float) -> np.ndarray:
    """Weights of the Lagrange-interpolant derivative at `at` over the given levels"""
    times = np.asarray(times, dtype=float)
    count = len(times)
    weights = np.zeros(count)
    for j in range(count):
        for m in range(count):
            if m == j:
                continue
            term = 1.0 / (times[j] - times[m])
            for l in range(count):
                if l != j and l != m:
                    term *= (at - times[l]) / (times[j] - times[l])
            weights[j] += term
    return weights


@dataclass(frozen=True)
class TimeStencil:
    """
    Normal speed and tangential components sampled at fixed chart points on
    consecutive time levels; rates are taken at time `at`
    """
    times: Tuple[float, ...]
    C: Tuple[np.ndarray, ...]
    V: Tuple[np.ndarray, ...]
    at: float

    def __post_init__(self):
        if len(self.times) < 2:
            raise StencilError(f"Time stencil needs at least two levels, got {len(self.times)}")
        if len(self.C) != len(self.times) or len(self.V) != len(self.times):
            raise StencilError("Every time level needs both C and V samples")
        if np.any(np.diff(self.times) <= 0):
            raise StencilError(f"Time levels must increase strictly: {self.times}")
        if not self.times[0] <= self.at <= self.times[-1]:
            raise StencilError(f"Evaluation time {self.at} lies outside the levels {self.times}")

    @classmethod
    def sample(cls, family: ParamFamily, s: np.ndarray, t: float, h: float, levels: int = 3) -> "TimeStencil":
        """Sample a family on `levels` equally spaced times centered on t (forward for two)"""
        if levels < 2:
            raise StencilError(f"Time stencil needs at least two levels, got {levels}")
        offset = 0 if levels == 2 else (levels - 1) / 2.0
        times = tuple(t + (k - offset) * h for k in range(levels))
        fields = [velocity_field(family, s, tt) for tt in times]
        return cls(times, tuple(f.C for f in fields), tuple(f.V for f in fields), t)

    def rate(self, levels: Sequence[np.ndarray]) -> np.ndarray:
        """Time derivative at `at` of a quantity sampled on the stencil levels"""
        if len(levels) != len(self.times):
            raise StencilError(f"Expected {len(self.times)} levels, got {len(levels)}")
        weights = derivative_weights(self.times, self.at)
        return sum(w * np.asarray(level) for w, level in zip(weights, levels))


def momentum_residuals(family: ParamFamily, s: np.ndarray, density: np.ndarray, tension: SurfaceScalar,
                       pressure: AmbientScalar, stencil: TimeStencil) -> Tuple[np.ndarray, np.ndarray]:
    """
    Residuals of the surface momentum balance at chart points

    Tangential: rho (nabla-dot V_i + V^j nabla_j V_i - C nabla_i C - C V^j B_ij) + nabla_i sigma.
    Normal: the bracket rho (nabla-dot C + 2 V^i nabla_i C + V^i V^j B_ij) - d_t sigma - P + sigma B_i^i,
    which vanishes at equilibrium and otherwise must stay constant along the motion.

    Args:
        family: Parametric family the fields live on
        s: Chart points (P, n)
        density: Surface density at the stencil time (P,)
        tension: Surface tension as a function of (family, s, t)
        pressure: Ambient pressure as a function of (x, t)
        stencil: Time levels of C and V^i for the invariant time derivatives

    Returns:
        (normal residual (P,), tangential residual with a lower index (P, n))
    """
    t = stencil.at
    kin = ChartKinematics(family, s, t)
    forms = kin.forms
    C, V = kin.C, kin.V
    rho = np.asarray(density, dtype=float)

    v_grad_c = np.einsum("pi,pi->p", V, kin.grad_C)
    dot_C = stencil.rate(stencil.C) - v_grad_c
    dot_V = (stencil.rate(stencil.V)
             - np.einsum("pk,pkj->pj", V, kin.cov_V)
             + np.einsum("pjk,pk->pj", kin.time_connection.values, V))
    dot_V_lower = np.einsum("pij,pj->pi", forms.metric, dot_V)
    convective = np.einsum("pj,pji->pi", V, kin.cov_V_lower)
    curvature_v = np.einsum("pj,pij->pi", V, forms.B)
    tension_gradient = kin.scalar_gradient(tension)
    tangential = (rho[:, None] * (dot_V_lower + convective - C[:, None] * kin.grad_C - C[:, None] * curvature_v)
                  + tension_gradient)

    sigma = tension(family, s, t)
    tension_rate = stencil.rate([tension(family, s, tt) for tt in stencil.times])
    normal = (rho * (dot_C + 2.0 * v_grad_c + np.einsum("pi,pij,pj->p", V, forms.B, V))
              - tension_rate - pressure(forms.position, t) + sigma * forms.H)
    logger.debug(f"Momentum residuals on {family.name}: normal {np.max(np.abs(normal)):.3e}, "
                 f"tangential {np.max(np.abs(tangential)):.3e}")
    return normal, tangential
