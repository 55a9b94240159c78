"""
Curvature-driven evolution of closed meshes and curves

Vertices move along the outward normal with speed C. Mean-curvature flow uses
C = mu sigma H; the volume-preserving and Young-Laplace relaxation laws use
C = mu (sigma H - P_t), where the multiplier P_t keeps the enclosed volume
fixed. H is negative on outward spheres, so a tensioned round sphere sits at
P = sigma H < 0.
"""
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy.sparse import csr_matrix, diags

from src.geometry.discrete import MeshForms, fundamental_forms_mesh, vertex_normals
from src.geometry.forms import FundamentalForms, VelocityField
from src.geometry.measure import (best_fit_sphere, component_count, enclosed_volume, equivalent_radius,
                                  euler_characteristic, find_self_intersections, gauss_bonnet_check,
                                  sphericity, surface_area)
from src.geometry.mesh import DiscreteSurface
from src.pde.pde import SurfaceField, mesh_field, transport_mass
from src.utils.helpers import DomainError, StepSizeError, TopologyError, format_float
from src.utils.logging import setup_logger

# Set up logger
logger = setup_logger("flow")

MIN_STEP = 1e-12
ENERGY_TOLERANCE = 1e-10
LAW_ALIASES = {
    "volume-preserving-mcf": "vpmcf",
    "young-laplace-relaxation": "yl",
    "mean-curvature-flow": "mcf",
}
DIAGNOSTIC_COLUMNS = ["step", "time", "area", "volume", "chi", "H_mean", "H_relstd",
                      "energy", "sphericity", "max_C", "mass_total", "gauss_bonnet"]


class FlowConfig(BaseModel):
    """Flow law, material constants, step controller and stop criteria"""
    law: Literal["mcf", "vpmcf", "yl"] = "vpmcf"
    sigma: float = Field(default=1.0, gt=0)
    mu: float = Field(default=1.0, gt=0)
    safety: float = Field(default=0.5, gt=0, le=1)
    max_step: float = Field(default=1e-2, gt=0)
    max_time: Optional[float] = Field(default=None, gt=0)
    tau_h: float = Field(default=1e-3, gt=0)
    max_steps: int = Field(default=100_000, ge=0)
    tangential: bool = False
    tangential_weight: float = Field(default=0.1, ge=0, le=1)
    volume_projection: bool = True
    check_intersections: bool = False
    density: float = Field(default=1.0, ge=0)
    physical_pressure: bool = False

    @field_validator("law", mode="before")
    @classmethod
    def resolve_alias(cls, value):
        """Accept the long law names"""
        if isinstance(value, str):
            return LAW_ALIASES.get(value.strip().lower(), value.strip().lower())
        return value

    @property
    def preserves_volume(self) -> bool:
        return self.law != "mcf"


class FlowRecord(BaseModel):
    """Diagnostics of one recorded state"""
    step: int
    time: float
    area: float
    volume: float
    chi: int
    gauss_bonnet: float
    H_mean: float
    H_relstd: float
    energy: float
    sphericity: float
    max_C: float
    max_displacement: float = 0.0
    mass_total: float

    def row(self) -> dict:
        values = self.model_dump()
        return {k: (format_float(values[k]) if isinstance(values[k], float) else values[k])
                for k in DIAGNOSTIC_COLUMNS}


class FlowDiagnostics(BaseModel):
    """Per-step records of a flow run"""
    records: List[FlowRecord] = Field(default_factory=list)
    energy_increases: int = 0

    @property
    def chi_constant(self) -> bool:
        return len({r.chi for r in self.records}) <= 1

    @property
    def last(self) -> FlowRecord:
        return self.records[-1]

    @property
    def max_gauss_bonnet(self) -> float:
        return max(r.gauss_bonnet for r in self.records)

    def volume_drift(self) -> float:
        first = self.records[0].volume
        return abs(self.last.volume - first) / abs(first) if first else 0.0

    def write_csv(self, path) -> Path:
        """Write one row of DIAGNOSTIC_COLUMNS per record"""
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=DIAGNOSTIC_COLUMNS)
            writer.writeheader()
            writer.writerows(r.row() for r in self.records)
        return path


class EquilibriumCertificate(BaseModel):
    """Evidence that a relaxed surface is a constant-mean-curvature sphere"""
    steps: int
    time: float
    H_mean: float
    H_relstd: float
    pressure: float
    young_laplace_max: float
    radius: float
    equivalent_radius: float
    center: List[float]
    radial_deviation: float
    volume_drift: float
    gauss_bonnet_max: float = 0.0
    energy_increases: int = 0
    physical_pressure: bool = False

    def to_text(self) -> str:
        """Human-readable certificate"""
        if self.physical_pressure:
            pressure = f"pressure (physical sign) = {format_float(-self.pressure)}"
        else:
            pressure = f"pressure P = sigma*H_mean = {format_float(self.pressure)}"
        lines = [
            "equilibrium certificate",
            f"steps = {self.steps}",
            f"time = {format_float(self.time)}",
            f"H_mean = {format_float(self.H_mean)}",
            f"H_relstd = {format_float(self.H_relstd)}",
            pressure,
            f"young_laplace_max = {format_float(self.young_laplace_max)}",
            f"best_fit_radius = {format_float(self.radius)}",
            f"equivalent_radius = {format_float(self.equivalent_radius)}",
            "best_fit_center = " + " ".join(format_float(c) for c in self.center),
            f"radial_deviation = {format_float(self.radial_deviation)}",
            f"volume_drift = {format_float(self.volume_drift)}",
            f"gauss_bonnet_max = {format_float(self.gauss_bonnet_max)}",
            f"energy_increases = {self.energy_increases}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FlowState:
    """Surface with its geometry, time, step count, target volume and carried density"""
    surface: DiscreteSurface
    forms: MeshForms
    time: float
    step: int
    target_volume: float
    chi: int
    density: SurfaceField

    @classmethod
    def start(cls, surface: DiscreteSurface, config: FlowConfig, density=None) -> "FlowState":
        """Initial state; the density defaults to the uniform config.density"""
        chi = euler_characteristic(surface)
        forms = fundamental_forms_mesh(surface)
        values = config.density if density is None else density
        return cls(surface, forms, 0.0, 0, enclosed_volume(surface), chi, mesh_field(surface, values, forms))


def pressure_multiplier(forms: MeshForms, sigma: float) -> float:
    """P_t = sum(sigma H A_w) / sum(A_w), the volume-weighted mean of sigma H"""
    weight = forms.volume_weight
    return float(np.sum(sigma * forms.variational_curvature * weight) / np.sum(weight))


def velocity_law(surface: DiscreteSurface, forms: MeshForms, config: FlowConfig) -> VelocityField:
    """
    Normal speed of every vertex under the configured law

    The curvature is the variational one (area gradient over volume
    gradient), so sum(C A_w) = 0 holds exactly for the volume-preserving laws
    and sigma * area decreases at first order. The tangential part is zero.

    Returns:
        VelocityField with C (V,) and zero ambient tangent vectors (V, d)
    """
    H = forms.variational_curvature
    if config.law == "mcf":
        C = config.mu * config.sigma * H
    else:
        C = config.mu * (config.sigma * H - pressure_multiplier(forms, config.sigma))
    return VelocityField(C=C, V=np.zeros_like(forms.N))


def _adjacency(surface: DiscreteSurface) -> csr_matrix:
    edges = surface.edges
    count = surface.vertex_count
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(count, count))


def tangential_smoothing(surface: DiscreteSurface, forms: MeshForms) -> np.ndarray:
    """Umbrella Laplacian of the vertex positions with its normal part removed"""
    adjacency = _adjacency(surface)
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    umbrella = diags(1.0 / degree) @ adjacency @ surface.vertices - surface.vertices
    return umbrella - np.einsum("va,va->v", umbrella, forms.N)[:, None] * forms.N


def project_volume(surface: DiscreteSurface, target: float, iterations: int = 8) -> DiscreteSurface:
    """
    Offset all vertices uniformly along their normals until the enclosed volume
    matches the target (Newton iterations, d volume / d offset = sum of A_w)
    """
    for _ in range(iterations):
        volume = enclosed_volume(surface)
        if abs(volume - target) <= 1e-14 * abs(target):
            break
        normals, weight = vertex_normals(surface)
        offset = (target - volume) / float(np.sum(weight))
        surface = surface.with_vertices(surface.vertices + offset * normals)
    return surface


def min_edge_length(surface: DiscreteSurface) -> float:
    edges = surface.edges
    return float(np.min(np.linalg.norm(surface.vertices[edges[:, 1]] - surface.vertices[edges[:, 0]], axis=-1)))


def choose_step(surface: DiscreteSurface, C: np.ndarray, config: FlowConfig, time: float) -> float:
    """
    Explicit step: safety * min(h^2 / (2 n mu sigma), 0.1 h / max|C|), capped by
    max_step and the remaining time

    Raises:
        StepSizeError: If the step falls below 1e-12
    """
    h = min_edge_length(surface)
    dt = h * h / (2.0 * surface.dim * config.mu * config.sigma)
    speed = float(np.max(np.abs(C))) if C.size else 0.0
    if speed > 0:
        dt = min(dt, 0.1 * h / speed)
    dt = min(config.safety * dt, config.max_step)
    if config.max_time is not None:
        dt = min(dt, config.max_time - time)
    if dt < MIN_STEP:
        raise StepSizeError(f"Step collapsed to {dt:.3e} at t={time:.6g} (min edge {h:.3e})")
    return dt


def _relstd(values: np.ndarray, weights: np.ndarray) -> Tuple[float, float]:
    mean = float(np.sum(values * weights) / np.sum(weights))
    std = math.sqrt(float(np.sum(weights * (values - mean) ** 2) / np.sum(weights)))
    return mean, std / abs(mean) if mean else math.inf


def record_state(state: FlowState, config: FlowConfig, max_C: float = 0.0,
                 displacement: float = 0.0) -> FlowRecord:
    """
    Diagnostics of a flow state

    H statistics are taken over the variational curvature with volume-gradient
    weights, the quantity the flow drives to a constant.
    """
    area = surface_area(state.surface)
    H_mean, H_relstd = _relstd(state.forms.variational_curvature, state.forms.volume_weight)
    return FlowRecord(
        step=state.step,
        time=state.time,
        area=area,
        volume=enclosed_volume(state.surface),
        chi=state.chi,
        gauss_bonnet=gauss_bonnet_check(state.surface, state.forms),
        H_mean=H_mean,
        H_relstd=H_relstd,
        energy=config.sigma * area,
        sphericity=sphericity(state.surface),
        max_C=max_C,
        max_displacement=displacement,
        mass_total=state.density.total(),
    )


def step(state: FlowState, config: FlowConfig) -> Tuple[FlowState, FlowRecord]:
    """
    Advance one explicit step

    Moves vertices by dt C N (plus optional tangential smoothing), restores
    the target volume for the volume-preserving laws, carries vertex masses
    and checks that the Euler characteristic is unchanged.

    Args:
        state: Current flow state
        config: Flow configuration

    Returns:
        New state and its diagnostics record

    Raises:
        StepSizeError: On step collapse
        MeshQualityError: On a degenerate cell
        TopologyError: If the Euler characteristic changes
    """
    surface, forms = state.surface, state.forms
    velocity = velocity_law(surface, forms, config)
    dt = choose_step(surface, velocity.C, config, state.time)
    displacement = dt * velocity.ambient(forms)
    if config.tangential:
        displacement = displacement + config.tangential_weight * tangential_smoothing(surface, forms)
    moved = surface.with_vertices(surface.vertices + displacement)
    if config.preserves_volume and config.volume_projection:
        moved = project_volume(moved, state.target_volume)

    chi = euler_characteristic(moved)
    if chi != state.chi:
        raise TopologyError(f"Euler characteristic changed from {state.chi} to {chi} at step {state.step + 1}")
    moved_forms = fundamental_forms_mesh(moved)
    new_state = FlowState(
        surface=moved,
        forms=moved_forms,
        time=state.time + dt,
        step=state.step + 1,
        target_volume=state.target_volume,
        chi=chi,
        density=transport_mass(state.density, moved, moved_forms),
    )
    shift = float(np.max(np.linalg.norm(moved.vertices - surface.vertices, axis=-1)))
    return new_state, record_state(new_state, config, float(np.max(np.abs(velocity.C))), shift)


def is_equilibrium(record: FlowRecord, config: FlowConfig) -> bool:
    """Constant mean curvature within tau_H; mean-curvature flow has no such state"""
    return config.preserves_volume and record.H_relstd < config.tau_h


def certify(state: FlowState, diagnostics: FlowDiagnostics, config: FlowConfig) -> EquilibriumCertificate:
    """Compare a relaxed surface with its best-fit and volume-equivalent spheres"""
    record = diagnostics.last
    pressure = config.sigma * record.H_mean
    residual = young_laplace_residual(state.forms, pressure, config.sigma, variational=True)
    center, radius, deviation = best_fit_sphere(state.surface)
    return EquilibriumCertificate(
        steps=state.step,
        time=state.time,
        H_mean=record.H_mean,
        H_relstd=record.H_relstd,
        pressure=pressure,
        young_laplace_max=residual.max,
        radius=radius,
        equivalent_radius=equivalent_radius(record.volume, state.surface.ambient_dim),
        center=[float(c) for c in center],
        radial_deviation=deviation,
        volume_drift=diagnostics.volume_drift(),
        gauss_bonnet_max=diagnostics.max_gauss_bonnet,
        energy_increases=diagnostics.energy_increases,
        physical_pressure=config.physical_pressure,
    )


Observer = Callable[[FlowState, FlowRecord], None]


def run_to_equilibrium(surface: DiscreteSurface, config: FlowConfig, observer: Optional[Observer] = None,
                       density: Optional[np.ndarray] = None
                       ) -> Tuple[DiscreteSurface, FlowDiagnostics, Optional[EquilibriumCertificate]]:
    """
    Step until the mean curvature is uniform or the budget is exhausted

    The certificate is issued only for a converged volume-preserving run on a
    surface with Euler characteristic 2 (or a single closed curve).
    Mean-curvature flow runs until max_time or max_steps.

    Args:
        surface: Closed mesh or curve
        config: Flow configuration
        observer: Called with every state and record, including the initial one
        density: Initial vertex densities carried by Lagrangian mass transport

    Returns:
        Final surface, diagnostics and the certificate (None when not issued)
    """
    state = FlowState.start(surface, config, density)
    record = record_state(state, config)
    diagnostics = FlowDiagnostics(records=[record])
    if observer:
        observer(state, record)
    logger.info(f"Starting {config.law} flow: {surface.vertex_count} vertices, chi={state.chi}, "
                f"area={record.area:.6g}, volume={record.volume:.6g}")

    while not is_equilibrium(record, config) and state.step < config.max_steps:
        if config.max_time is not None and state.time >= config.max_time - MIN_STEP:
            break
        previous = record.energy
        state, record = step(state, config)
        diagnostics.records.append(record)
        if config.preserves_volume and record.energy - previous > ENERGY_TOLERANCE * max(1.0, abs(previous)):
            diagnostics.energy_increases += 1
            logger.warning(f"Energy rose by {record.energy - previous:.3e} at step {state.step}")
        if observer:
            observer(state, record)

    if config.check_intersections:
        hits = find_self_intersections(state.surface)
        if hits:
            raise TopologyError(f"Surface self-intersects at {len(hits)} edge/cell pair(s)")

    spherical = component_count(state.surface) == 1 if state.surface.is_curve else state.chi == 2
    certificate = None
    if is_equilibrium(record, config):
        if spherical:
            certificate = certify(state, diagnostics, config)
            if certificate.energy_increases:
                logger.warning(f"Certificate issued after {certificate.energy_increases} energy increase(s)")
            logger.info(f"Equilibrium after {state.step} steps: H_mean={record.H_mean:.6g}, "
                        f"radial deviation {certificate.radial_deviation:.3e}")
        else:
            logger.info(f"Constant mean curvature after {state.step} steps, but chi={state.chi}: no sphere certificate")
    elif config.preserves_volume:
        logger.warning(f"No equilibrium after {state.step} steps (H_relstd={record.H_relstd:.3e}, "
                       f"tau_H={config.tau_h:.1e})")
    else:
        logger.info(f"Flow stopped at t={state.time:.6g} after {state.step} steps")
    return state.surface, diagnostics, certificate


def lagrangian_energy(surface: DiscreteSurface, density, velocity: VelocityField, config: FlowConfig,
                      pressure: Optional[float] = None) -> Tuple[float, float, float]:
    """
    Kinetic, potential and Lagrangian energy of a moving discrete surface

    T = (1/2) sum rho_v |v_v|^2 A_v with v = C N + V, U = P Volume + sigma Area;
    P defaults to the multiplier P_t of the volume-preserving laws and to 0
    under mean-curvature flow.

    Returns:
        (T, U, T - U)
    """
    forms = fundamental_forms_mesh(surface)
    rho = density if isinstance(density, SurfaceField) else mesh_field(surface, density, forms)
    ambient = velocity.ambient(forms)
    kinetic = 0.5 * float(np.sum(rho.weights * rho.values * np.einsum("va,va->v", ambient, ambient)))
    if pressure is None:
        pressure = pressure_multiplier(forms, config.sigma) if config.preserves_volume else 0.0
    potential = pressure * enclosed_volume(surface) + config.sigma * surface_area(surface)
    return kinetic, potential, kinetic - potential


@dataclass(frozen=True)
class YoungLaplaceResidual:
    """P - sigma H per sample with max and root-mean-square summaries"""
    values: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values ** 2)))


def young_laplace_residual(target: Union[DiscreteSurface, MeshForms, FundamentalForms], pressure: float,
                           sigma: float, variational: bool = False) -> YoungLaplaceResidual:
    """
    Residual P - sigma H of the equilibrium condition

    Args:
        target: Mesh, its MeshForms, or FundamentalForms of a family at chart points
        pressure: Constant pressure in the internal sign convention (negative on tensioned spheres)
        sigma: Constant surface tension
        variational: Use the variational mesh curvature instead of the mixed Voronoi one
    """
    if sigma <= 0:
        raise DomainError(f"Surface tension must be positive, got {sigma}")
    if isinstance(target, DiscreteSurface):
        target = fundamental_forms_mesh(target)
    if isinstance(target, MeshForms) and variational:
        H = target.variational_curvature
    else:
        H = target.H
    return YoungLaplaceResidual(pressure - sigma * np.asarray(H))


def write_certificate(certificate: Optional[EquilibriumCertificate], path, note: str = "") -> Path:
    """Write the certificate text, or the reason none was issued"""
    path = Path(path)
    text = certificate.to_text() if certificate else f"no certificate\n{note}\n"
    path.write_text(text)
    return path
