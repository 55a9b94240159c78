"""
Numerical verification of moving-surface transport identities

Every check evaluates both sides of an identity on a parametric family,
reports the max residual for each time step and estimates the convergence
order from the two finest steps.
"""
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from src.config import EXACT_TOLERANCE, ORDER_SLACK, THREADS
from src.geometry.chart import chart_gradient, gauss_legendre, time_derivative
from src.geometry.forms import ParamFamily, check_weingarten, fundamental_forms_param
from src.pde.pde import chart_density
from src.utils.helpers import DomainError, IdentityFailure, format_float
from src.utils.logging import setup_logger
from src.geometry.kinematics import (ChartKinematics, SurfaceScalar, basis_time_connection,
                                     time_rate)

# Set up logger
logger = setup_logger("verifier")

AmbientScalar = Callable[[np.ndarray, float], np.ndarray]

DEFAULT_STEPS = (1e-3, 5e-4)
NOISE_FACTOR = 64.0
REPORT_COLUMNS = ["identity", "family", "h", "max_residual", "order_estimate", "noise_floor"]
RADIAL_NODES = 12


class IdentityReport(BaseModel):
    """Residuals of one identity on one family over a ladder of time steps"""
    identity: str
    family: str
    time: float
    points: int
    steps: List[float]
    residuals: List[float]
    max_residual: float
    order_estimate: Optional[float] = None
    nominal_order: Optional[int] = 2
    noise_floor: float = EXACT_TOLERANCE
    passed: bool

    @property
    def exact(self) -> bool:
        """Checked against a fixed tolerance, without a convergence order"""
        return self.nominal_order is None

    def rows(self) -> List[Dict[str, str]]:
        """CSV rows of REPORT_COLUMNS, one per step (a single `h = nan` row for exact checks)"""
        order = "nan" if self.order_estimate is None else format_float(self.order_estimate)
        return [
            {"identity": self.identity, "family": self.family, "h": format_float(h),
             "max_residual": format_float(r), "order_estimate": order,
             "noise_floor": format_float(self.noise_floor)}
            for h, r in zip(self.steps, self.residuals)
        ]


class SuiteOptions(BaseModel):
    """Settings shared by all checks of a verification run"""
    t: float = 0.0
    steps: List[float] = Field(default_factory=lambda: list(DEFAULT_STEPS))
    time_order: int = Field(default=2, ge=2, le=4)
    resolution: int = Field(default=40, ge=4)
    curvature_coefficient: float = -2.0
    identities: Optional[List[str]] = None

    @field_validator("steps", "identities", mode="before")
    @classmethod
    def split_list(cls, value):
        """Accept comma-separated strings from config files and flags"""
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("steps")
    @classmethod
    def positive_steps(cls, value: List[float]) -> List[float]:
        if not value or any(h <= 0 for h in value):
            raise ValueError("time steps must be a non-empty list of positive numbers")
        return value

    @field_validator("time_order")
    @classmethod
    def even_order(cls, value: int) -> int:
        if value not in (2, 4):
            raise ValueError("time_order must be 2 or 4")
        return value


# Default test fields

def default_surface_scalar(family: ParamFamily, s: np.ndarray, t: float) -> np.ndarray:
    """F = 1 + x_last + x_0^2 / 2 restricted to the surface"""
    x = family.position(s, t)
    return 1.0 + x[:, -1] + 0.5 * x[:, 0] ** 2


def default_volume_scalar(x: np.ndarray, t: float) -> np.ndarray:
    """F = 1 + x_0^2 + t x_last"""
    return 1.0 + x[..., 0] ** 2 + t * x[..., -1]


def default_density(s: np.ndarray) -> np.ndarray:
    """rho_0 = 1 + cos(s_0) / 4"""
    return 1.0 + 0.25 * np.cos(s[:, 0])


def default_pressure(x: np.ndarray, t: float) -> np.ndarray:
    """P = 1 + x_0 / 2 + t / 5"""
    return 1.0 + 0.5 * x[..., 0] + 0.2 * t


def default_tension(family: ParamFamily, s: np.ndarray, t: float) -> np.ndarray:
    """sigma = 1 + (0.1 + 0.3 t) cos(s_0)"""
    return 1.0 + (0.1 + 0.3 * t) * np.cos(s[:, 0])


# Report assembly

def _max(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if np.size(values) else 0.0


def _scale(*arrays: np.ndarray) -> float:
    return max(1.0, *(_max(a) for a in arrays))


def order_estimate(steps: Sequence[float], residuals: Sequence[float]) -> Optional[float]:
    """p = log(r1 / r2) / log(h1 / h2) from the two finest steps"""
    if len(steps) < 2:
        return None
    h1, h2 = steps[-2], steps[-1]
    r1, r2 = residuals[-2], residuals[-1]
    if r1 <= 0.0 or r2 <= 0.0 or h1 == h2:
        return None
    return math.log(r1 / r2) / math.log(h1 / h2)


def noise_floor(family: ParamFamily, steps: Sequence[float], scale: float, spatial_order: int) -> float:
    """Residual level reachable in double precision for the differences involved"""
    eps = float(np.finfo(float).eps)
    rounding = 1.0 / min(steps) + family.spatial_step ** (-spatial_order)
    return EXACT_TOLERANCE + NOISE_FACTOR * eps * scale * rounding


def _report(identity: str, family: ParamFamily, t: float, points: int, steps: Sequence[float],
            evaluate: Callable[[float], Tuple[float, float]], spatial_order: int, nominal: int) -> IdentityReport:
    steps = sorted((float(h) for h in steps), reverse=True)
    results = [evaluate(h) for h in steps]
    residuals = [r for r, _ in results]
    scale = max(sc for _, sc in results)
    order = order_estimate(steps, residuals)
    floor = noise_floor(family, steps, scale, spatial_order)
    passed = residuals[-1] <= floor or (order is not None and order >= nominal - ORDER_SLACK)
    report = IdentityReport(
        identity=identity,
        family=family.name,
        time=t,
        points=points,
        steps=steps,
        residuals=residuals,
        max_residual=residuals[-1],
        order_estimate=order,
        nominal_order=nominal,
        noise_floor=floor,
        passed=passed,
    )
    _log_report(report)
    return report


def _log_report(report: IdentityReport) -> None:
    where = f"{report.identity} on {report.family}"
    if not report.passed:
        logger.warning(f"{where} FAILED: residuals {report.residuals}, order {report.order_estimate}, "
                       f"floor {report.noise_floor:.3e}")
    elif (not report.exact and report.max_residual > EXACT_TOLERANCE
          and (report.order_estimate is None or report.order_estimate < report.nominal_order - ORDER_SLACK)):
        logger.warning(f"{where}: residual {report.max_residual:.3e} passes only at the noise floor "
                       f"{report.noise_floor:.3e}")
    else:
        logger.info(f"{where}: residual {report.max_residual:.3e}, order {report.order_estimate}")


def _exact_report(identity: str, family: ParamFamily, t: float, points: int, residual: float,
                  scale: float) -> IdentityReport:
    """Report of an identity without time differences, held to EXACT_TOLERANCE times the scale"""
    tolerance = EXACT_TOLERANCE * scale
    report = IdentityReport(
        identity=identity,
        family=family.name,
        time=t,
        points=points,
        steps=[float("nan")],
        residuals=[residual],
        max_residual=residual,
        nominal_order=None,
        noise_floor=tolerance,
        passed=residual <= tolerance,
    )
    _log_report(report)
    return report


# Pointwise identities on the sample grid

def check_metric_evolution(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                           order: int = 2, curvature_coefficient: float = -2.0) -> IdentityReport:
    """
    d_t S_ij = nabla_i V_j + nabla_j V_i - 2 C B_ij

    Args:
        family: Parametric family
        t: Time
        steps: Time steps for the centered difference of S_ij
        order: Time-difference order (2 or 4)
        curvature_coefficient: Coefficient of C B_ij; anything but -2 must fail

    Returns:
        IdentityReport
    """
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    symmetric = kin.cov_V_lower + np.swapaxes(kin.cov_V_lower, -1, -2)
    rhs = symmetric + curvature_coefficient * kin.C[:, None, None] * kin.forms.B

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = time_rate(family, s, t, h, lambda f, v: f.metric, order)
        return _max(lhs - rhs), _scale(lhs, rhs)

    return _report("metric", family, t, len(s), steps, evaluate, 1, order)


def check_area_evolution(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                         order: int = 2) -> IdentityReport:
    """d_t sqrt|S| = sqrt|S| (nabla_i V^i - C B_i^i)"""
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    rhs = kin.forms.sqrt_det * (kin.divergence_V - kin.C * kin.forms.H)

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = time_rate(family, s, t, h, lambda f, v: f.sqrt_det, order)
        return _max(lhs - rhs), _scale(lhs, rhs)

    return _report("area", family, t, len(s), steps, evaluate, 1, order)


def check_metrilinic(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                     order: int = 2) -> IdentityReport:
    """The invariant time derivative of the metric vanishes"""
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    lowered = kin.time_connection.lower(kin.forms)

    def evaluate(h: float) -> Tuple[float, float]:
        rate = time_rate(family, s, t, h, lambda f, v: f.metric, order)
        dot_metric = rate - lowered - np.swapaxes(lowered, -1, -2)
        return _max(dot_metric), _scale(rate, lowered)

    return _report("metrilinic", family, t, len(s), steps, evaluate, 1, order)


def _normal_residual(family: ParamFamily, kin: ChartKinematics, h: float, order: int) -> Tuple[float, float]:
    """(d_t - V^k d_k) N against -nabla^i C S_i"""
    rate = time_rate(family, kin.s, kin.t, h, lambda f, v: f.N, order)
    lhs = rate - np.einsum("pak,pk->pa", kin.grad_N(), kin.V)
    rhs = -np.einsum("pai,pi->pa", kin.forms.shift, kin.grad_C_up)
    return _max(lhs - rhs), _scale(rate, rhs)


def check_normal_transport(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                           order: int = 2) -> IdentityReport:
    """nabla-dot N = -(nabla^i C) S_i"""
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    return _report("normal", family, t, len(s), steps,
                   lambda h: _normal_residual(family, kin, h, order), 1, order)


def check_curvature_transport(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                              order: int = 2) -> IdentityReport:
    """nabla-dot B_ij = -nabla_i nabla_j C + C B_ik B^k_j"""
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    forms = kin.forms
    gdot = kin.time_connection.values
    B = forms.B
    correction = (np.einsum("pk,pkij->pij", kin.V, kin.grad_B)
                  + np.einsum("pki,pkj->pij", gdot, B)
                  + np.einsum("pkj,pik->pij", gdot, B))
    rhs = -kin.hess_C + kin.C[:, None, None] * np.einsum("pik,pkl,plj->pij", B, forms.metric_inv, B)

    def evaluate(h: float) -> Tuple[float, float]:
        rate = time_rate(family, s, t, h, lambda f, v: f.B, order)
        return _max(rate - correction - rhs), _scale(rate, rhs)

    return _report("curvature", family, t, len(s), steps, evaluate, 2, order)


def check_thomas(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                 order: int = 2) -> IdentityReport:
    """
    The three Thomas identities, grouped into one report

    The normal-transport form is checked as in check_normal_transport. The
    velocity-gradient form is checked as N . d_i V = nabla_i C + V^k B_ik,
    which is N . nabla_i V = nabla_i C when the tangential velocity vanishes.
    The basis form uses the full invariant derivative
    nabla-dot S_i = d_t S_i - V^k B_ki N - Gamma-dot^k_i S_k.
    """
    s = family.sample_grid()
    kin = ChartKinematics(family, s, t)
    forms = kin.forms
    dv = chart_gradient(lambda q: family.velocity(q, t), s, kin.step)
    grad_v_normal = np.einsum("pa,pai->pi", forms.N, dv)
    grad_v_rhs = kin.grad_C + np.einsum("pk,pik->pi", kin.V, forms.B)
    grad_v_residual = _max(grad_v_normal - grad_v_rhs)
    gdot = kin.time_connection.values
    convected = np.einsum("pk,pki->pi", kin.V, forms.B)

    def evaluate(h: float) -> Tuple[float, float]:
        normal_residual, normal_scale = _normal_residual(family, kin, h, order)
        rate = time_derivative(lambda tt: family.tangents(s, tt), t, h, order)
        dot_basis = (rate
                     - forms.N[:, :, None] * convected[:, None, :]
                     - np.einsum("pki,pak->pai", gdot, forms.shift))
        basis_residual = _max(np.einsum("pa,pai->pi", forms.N, dot_basis) - kin.grad_C)
        residual = max(normal_residual, grad_v_residual, basis_residual)
        return residual, max(normal_scale, _scale(rate, grad_v_rhs))

    return _report("thomas", family, t, len(s), steps, evaluate, 1, order)


def check_weingarten_identity(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                              order: int = 2) -> IdentityReport:
    """
    Flat-ambient Gauss-Weingarten relations

    No time difference is involved, so `steps` and `order` are ignored and the
    residual is held to EXACT_TOLERANCE instead of a convergence order.
    """
    s = family.sample_grid()
    weingarten, gauss = check_weingarten(family, s, t)
    forms = fundamental_forms_param(family, s, t)
    scale = _scale(forms.B, forms.shift)
    return _exact_report("weingarten", family, t, len(s), max(weingarten, gauss), scale)


def check_time_connection(family: ParamFamily, t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS,
                          order: int = 2) -> IdentityReport:
    """Gamma-dot^i_j = nabla_j V^i - C B^i_j against X_a^i d_t S_j^a"""
    s = family.sample_grid()
    kinematic = ChartKinematics(family, s, t).time_connection.values

    def evaluate(h: float) -> Tuple[float, float]:
        observed = basis_time_connection(family, s, t, h).values
        return _max(observed - kinematic), _scale(observed, kinematic)

    return _report("time_connection", family, t, len(s), steps, evaluate, 1, 2)


# Integral theorems on the family quadrature

def _quadrature(family: ParamFamily, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    if family.dim >= 3:
        resolution = min(resolution, 20)
    return family.quadrature(resolution)


def cone_integral(family: ParamFamily, field: AmbientScalar, t: float, nodes: np.ndarray,
                  weights: np.ndarray, radial: int = RADIAL_NODES) -> float:
    """
    Integral over the enclosed region of a star-shaped family

    Uses x = c + lam (R(s) - c) with dOmega = lam^n ((R - c) . N) sqrt|S| dlam ds.

    Raises:
        DomainError: If the family has no star center
    """
    center = family.star_center(t)
    if center is None:
        raise DomainError(f"Family {family.name} has no star center for volume integrals")
    forms = fundamental_forms_param(family, nodes, t)
    ray = forms.position - center
    lam, lam_w = gauss_legendre(radial, 0.0, 1.0)
    inner = np.zeros(len(nodes))
    for lk, wk in zip(lam, lam_w):
        inner += wk * lk ** family.dim * field(center + lk * ray, t)
    return float(np.sum(weights * forms.sqrt_det * np.einsum("pa,pa->p", ray, forms.N) * inner))


def _surface_integral(family: ParamFamily, values: Callable[[np.ndarray, float], np.ndarray],
                      nodes: np.ndarray, weights: np.ndarray, t: float) -> float:
    forms = fundamental_forms_param(family, nodes, t)
    return float(np.sum(weights * forms.sqrt_det * values(nodes, t)))


def check_surface_integral_theorem(family: ParamFamily, field: SurfaceScalar = default_surface_scalar,
                                   t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS, order: int = 2,
                                   resolution: int = 40) -> IdentityReport:
    """d/dt of the closed integral of F dS = integral of (nabla-dot F - C B_i^i F) dS"""
    nodes, weights = _quadrature(family, resolution)
    kin = ChartKinematics(family, nodes, t)
    forms = kin.forms
    F = field(family, nodes, t)
    convective = np.einsum("pi,pi->p", kin.V, kin.scalar_gradient(field))

    def integral(tt: float) -> float:
        return _surface_integral(family, lambda q, u: field(family, q, u), nodes, weights, tt)

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = float(time_derivative(integral, t, h, order))
        rate = time_derivative(lambda tt: field(family, nodes, tt), t, h, order)
        rhs = float(np.sum(weights * forms.sqrt_det * (rate - convective - kin.C * forms.H * F)))
        return abs(lhs - rhs), _scale(np.array([lhs, rhs]))

    return _report("surface_integral", family, t, len(nodes), steps, evaluate, 1, order)


def check_volume_integral_theorem(family: ParamFamily, field: AmbientScalar = default_volume_scalar,
                                  t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS, order: int = 2,
                                  resolution: int = 40) -> IdentityReport:
    """d/dt of the integral of F dOmega = integral of d_t F dOmega + closed integral of C F dS"""
    nodes, weights = _quadrature(family, resolution)
    kin = ChartKinematics(family, nodes, t)
    flux = float(np.sum(weights * kin.forms.sqrt_det * kin.C * field(kin.forms.position, t)))

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = float(time_derivative(lambda tt: cone_integral(family, field, tt, nodes, weights), t, h, order))
        def rate(x: np.ndarray, tt: float) -> np.ndarray:
            return time_derivative(lambda u: field(x, u), tt, h, order)
        rhs = cone_integral(family, rate, t, nodes, weights) + flux
        return abs(lhs - rhs), _scale(np.array([lhs, rhs]))

    return _report("volume_integral", family, t, len(nodes), steps, evaluate, 0, order)


def kinetic_energy(family: ParamFamily, density0: np.ndarray, t0: float, t: float,
                   nodes: np.ndarray, weights: np.ndarray) -> float:
    """(1/2) integral of rho V.V dS with rho carried from t0 by the continuity law"""
    forms = fundamental_forms_param(family, nodes, t)
    rho = chart_density(family, density0, t0, nodes, t)
    speed = np.einsum("pa,pa->p", family.velocity(nodes, t), family.velocity(nodes, t))
    return 0.5 * float(np.sum(weights * forms.sqrt_det * rho * speed))


def check_kinetic_energy_variation(family: ParamFamily,
                                   density: Callable[[np.ndarray], np.ndarray] = default_density,
                                   t: float = 0.0, steps: Sequence[float] = DEFAULT_STEPS, order: int = 2,
                                   resolution: int = 40) -> IdentityReport:
    """
    dT/dt against the closed integral of
    rho [C (nabla-dot C + 2 V^i nabla_i C + V^i V^j B_ij)
         + V_j (nabla-dot V^j + V^i nabla_i V^j - C nabla^j C - C V^i B^j_i)]
    with rho equal to the given density at time t
    """
    nodes, weights = _quadrature(family, resolution)
    kin = ChartKinematics(family, nodes, t)
    forms = kin.forms
    rho = density(nodes)
    C, V = kin.C, kin.V
    gdot = kin.time_connection.values
    curvature_vv = np.einsum("pi,pij,pj->p", V, forms.B, V)
    v_grad_c = np.einsum("pi,pi->p", V, kin.grad_C)
    v_grad_v = np.einsum("pk,pkj->pj", V, kin.cov_V)
    mixed_bv = np.einsum("pjk,pki,pi->pj", forms.metric_inv, forms.B, V)

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = float(time_derivative(
            lambda tt: kinetic_energy(family, rho, t, tt, nodes, weights), t, h, order))
        dC = time_rate(family, nodes, t, h, lambda f, v: v.C, order)
        dV = time_rate(family, nodes, t, h, lambda f, v: v.V, order)
        dot_C = dC - v_grad_c
        dot_V = dV - v_grad_v + np.einsum("pjk,pk->pj", gdot, V)
        normal = dot_C + 2.0 * v_grad_c + curvature_vv
        tangential = dot_V + v_grad_v - C[:, None] * kin.grad_C_up - C[:, None] * mixed_bv
        integrand = rho * (C * normal + np.einsum("pj,pj->p", kin.V_lower, tangential))
        rhs = float(np.sum(weights * forms.sqrt_det * integrand))
        return abs(lhs - rhs), _scale(np.array([lhs, rhs]))

    return _report("kinetic_energy", family, t, len(nodes), steps, evaluate, 1, order)


def check_potential_energy_variation(family: ParamFamily, pressure: AmbientScalar = default_pressure,
                                     tension: SurfaceScalar = default_tension, t: float = 0.0,
                                     steps: Sequence[float] = DEFAULT_STEPS, order: int = 2,
                                     resolution: int = 40) -> IdentityReport:
    """
    d/dt (integral of P dOmega + closed integral of sigma dS) against
    integral of d_t P dOmega + closed integral of (nabla-dot sigma + C (P - sigma B_i^i)) dS
    """
    nodes, weights = _quadrature(family, resolution)
    kin = ChartKinematics(family, nodes, t)
    forms = kin.forms
    sigma = tension(family, nodes, t)
    convective = np.einsum("pi,pi->p", kin.V, kin.scalar_gradient(tension))
    load = kin.C * (pressure(forms.position, t) - sigma * forms.H)

    def energy(tt: float) -> float:
        bulk = cone_integral(family, pressure, tt, nodes, weights)
        return bulk + _surface_integral(family, lambda q, u: tension(family, q, u), nodes, weights, tt)

    def evaluate(h: float) -> Tuple[float, float]:
        lhs = float(time_derivative(energy, t, h, order))
        def rate(x: np.ndarray, tt: float) -> np.ndarray:
            return time_derivative(lambda u: pressure(x, u), tt, h, order)
        tension_rate = time_derivative(lambda tt: tension(family, nodes, tt), t, h, order)
        surface = np.sum(weights * forms.sqrt_det * (tension_rate - convective + load))
        rhs = cone_integral(family, rate, t, nodes, weights) + float(surface)
        return abs(lhs - rhs), _scale(np.array([lhs, rhs]))

    return _report("potential_energy", family, t, len(nodes), steps, evaluate, 1, order)


# Suite

POINTWISE_CHECKS = {
    "metric": check_metric_evolution,
    "area": check_area_evolution,
    "metrilinic": check_metrilinic,
    "normal": check_normal_transport,
    "curvature": check_curvature_transport,
    "thomas": check_thomas,
    "weingarten": check_weingarten_identity,
    "time_connection": check_time_connection,
}
INTEGRAL_CHECKS = {
    "surface_integral": check_surface_integral_theorem,
    "volume_integral": check_volume_integral_theorem,
    "kinetic_energy": check_kinetic_energy_variation,
    "potential_energy": check_potential_energy_variation,
}
IDENTITY_NAMES = list(POINTWISE_CHECKS) + list(INTEGRAL_CHECKS)
NEEDS_STAR_CENTER = {"volume_integral", "potential_energy"}


def run_check(name: str, family: ParamFamily, options: SuiteOptions) -> IdentityReport:
    """Run one named identity check with suite options"""
    common = dict(t=options.t, steps=options.steps, order=options.time_order)
    if name == "metric":
        return check_metric_evolution(family, curvature_coefficient=options.curvature_coefficient, **common)
    if name in POINTWISE_CHECKS:
        return POINTWISE_CHECKS[name](family, **common)
    if name in INTEGRAL_CHECKS:
        return INTEGRAL_CHECKS[name](family, resolution=options.resolution, **common)
    raise DomainError(f"Unknown identity '{name}'; known: {', '.join(IDENTITY_NAMES)}")


def run_suite(families: Sequence[ParamFamily], options: Optional[SuiteOptions] = None) -> List[IdentityReport]:
    """
    Run every selected identity on every family

    Checks run in a thread pool of CMSFLOW_THREADS workers; the result order
    follows the family order, then the identity order.

    Args:
        families: Families to verify
        options: Suite options

    Returns:
        Identity reports
    """
    options = options or SuiteOptions()
    names = options.identities or IDENTITY_NAMES
    unknown = [n for n in names if n not in IDENTITY_NAMES]
    if unknown:
        raise DomainError(f"Unknown identities {unknown}; known: {', '.join(IDENTITY_NAMES)}")
    tasks = []
    for family in families:
        for name in names:
            if name in NEEDS_STAR_CENTER and family.star_center(options.t) is None:
                logger.info(f"Skipping {name} on {family.name}: enclosed region is not star-shaped")
                continue
            tasks.append((name, family))
    logger.info(f"Running {len(tasks)} identity checks on {len(families)} families with {THREADS} thread(s)")
    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        futures = [pool.submit(run_check, name, family, options) for name, family in tasks]
        return [f.result() for f in futures]


def write_report_csv(reports: Sequence[IdentityReport], path) -> Path:
    """Write one row per identity, family and step; the noise floor sits next to the residual"""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for report in reports:
            writer.writerows(report.rows())
    return path


def assert_all_passed(reports: Sequence[IdentityReport]) -> None:
    """
    Raises:
        IdentityFailure: Naming the first failing identity and family
    """
    failed = [r for r in reports if not r.passed]
    if failed:
        first = failed[0]
        raise IdentityFailure(
            f"{len(failed)} identity check(s) failed; first: {first.identity} on {first.family} "
            f"(residual {first.max_residual:.3e}, order {first.order_estimate})"
        )
