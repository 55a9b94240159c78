"""
Parametric hypersurfaces: the embedding contract, pointwise fundamental forms,
velocity decomposition and chart quadrature.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.config import DET_FLOOR, SPATIAL_STEP
from src.geometry.chart import chart_gradient
from src.utils.helpers import DomainError, SingularEmbeddingError


class ParamFamily(ABC):
    """
    Time-dependent embedding R(s, t) of an n-dimensional chart into R^(n+1)

    Subclasses provide the position map and may override the exact
    derivative hooks; missing derivatives fall back to centered differences
    with step ``fd_step``. The ambient frame is the fixed Cartesian basis.
    """
    name = "family"

    def __init__(self, dim: int, fd_step: float = 1e-5, spatial_step: float = SPATIAL_STEP):
        if dim < 1:
            raise DomainError(f"Surface dimension must be positive, got {dim}")
        self.dim = dim
        self.fd_step = fd_step
        self.spatial_step = spatial_step
        self.orientation = 1

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    @abstractmethod
    def position(self, s: np.ndarray, t: float) -> np.ndarray:
        """Ambient positions R^a of shape (P, n+1)"""

    @abstractmethod
    def sample_grid(self) -> np.ndarray:
        """Chart points (P, n) used for pointwise identity checks"""

    @abstractmethod
    def quadrature(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        """Chart nodes (P, n) and weights (P,) for integrals over the closed surface"""

    def tangents(self, s: np.ndarray, t: float) -> np.ndarray:
        """Shift tensor X^a_i = d_i R^a of shape (P, n+1, n)"""
        h = self.fd_step
        cols = []
        for i in range(self.dim):
            plus, minus = s.copy(), s.copy()
            plus[:, i] += h
            minus[:, i] -= h
            cols.append((self.position(plus, t) - self.position(minus, t)) / (2 * h))
        return np.stack(cols, axis=-1)

    def hessian(self, s: np.ndarray, t: float) -> np.ndarray:
        """Second derivatives d_i d_j R^a of shape (P, n+1, n, n)"""
        h = self.fd_step
        cols = []
        for i in range(self.dim):
            plus, minus = s.copy(), s.copy()
            plus[:, i] += h
            minus[:, i] -= h
            cols.append((self.tangents(plus, t) - self.tangents(minus, t)) / (2 * h))
        hess = np.stack(cols, axis=-1)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    def velocity(self, s: np.ndarray, t: float) -> np.ndarray:
        """Surface velocity d_t R^a at fixed chart point, shape (P, n+1)"""
        h = self.fd_step
        return (self.position(s, t + h) - self.position(s, t - h)) / (2 * h)

    def stencil_steps(self, s: np.ndarray, step: Optional[float] = None) -> np.ndarray:
        """Per-point chart steps (P, n) for spatial differences; constant by default"""
        return np.full(np.shape(s), step or self.spatial_step, dtype=float)

    def interior_point(self, s: np.ndarray, t: float) -> np.ndarray:
        """A point enclosed by the surface near each chart point, used for orientation"""
        return np.zeros((s.shape[0], self.ambient_dim))

    def star_center(self, t: float) -> Optional[np.ndarray]:
        """Center from which the enclosed region is star-shaped, if any"""
        return None

    def calibrate_orientation(self, t: float = 0.0) -> None:
        """Fix the orientation sign so that normals point out of the enclosed region"""
        s0 = self.sample_grid()[:1]
        self.orientation = 1
        normal = fundamental_forms_param(self, s0, t).N[0]
        outward = self.position(s0, t)[0] - self.interior_point(s0, t)[0]
        self.orientation = 1 if float(np.dot(normal, outward)) > 0 else -1


@dataclass(frozen=True)
class FundamentalForms:
    """Pointwise geometry of a parametric hypersurface at P chart points"""
    position: np.ndarray        # R^a (P, n+1)
    shift: np.ndarray           # X^a_i (P, n+1, n)
    dual_shift: np.ndarray      # X_a^i (P, n, n+1)
    metric: np.ndarray          # S_ij (P, n, n)
    metric_inv: np.ndarray      # S^ij (P, n, n)
    sqrt_det: np.ndarray        # sqrt|S| (P,)
    N: np.ndarray               # unit normal (P, n+1)
    B: np.ndarray               # curvature tensor B_ij (P, n, n)
    H: np.ndarray               # mean curvature B_i^i (P,)
    christoffel: np.ndarray     # Gamma^k_ij (P, n, n, n)

    @property
    def mixed_curvature(self) -> np.ndarray:
        """B_i^j of shape (P, n, n), first index lower"""
        return np.einsum("pik,pkj->pij", self.B, self.metric_inv)

    @property
    def count(self) -> int:
        return self.position.shape[0]


@dataclass(frozen=True)
class VelocityField:
    """
    Normal speed C (P,) and tangential velocity V

    On parametric families V holds contravariant components V^i (P, n); on
    meshes, which have no chart, it holds ambient tangent vectors (P, n+1).
    """
    C: np.ndarray
    V: np.ndarray

    def ambient(self, forms) -> np.ndarray:
        """Reconstruct the ambient velocity C N + V^i S_i"""
        normal = self.C[:, None] * forms.N
        if isinstance(forms, FundamentalForms):
            return normal + surface_to_ambient(forms, self.V)
        return normal + self.V


def _cofactor_normal(shift: np.ndarray) -> np.ndarray:
    """Generalized cross product: component a is det[e_a; S_1; ...; S_n]"""
    count, adim, _ = shift.shape
    normal = np.empty((count, adim))
    rows = np.transpose(shift, (0, 2, 1))
    for a in range(adim):
        mat = np.zeros((count, adim, adim))
        mat[:, 0, a] = 1.0
        mat[:, 1:, :] = rows
        normal[:, a] = np.linalg.det(mat)
    return normal


def fundamental_forms_param(family: ParamFamily, s: np.ndarray, t: float,
                            check: bool = True) -> FundamentalForms:
    """
    Evaluate metric, normal, curvature and connection of a family at chart points

    The curvature tensor is the normal projection B_ij = N . d_i S_j, so the
    Weingarten relation reads d_i N = -B_i^j S_j and an outward-oriented
    sphere of radius R has B_ij = -S_ij / R.

    Args:
        family: Parametric family
        s: Chart points (P, n) or a single point (n,)
        t: Time
        check: Reject points whose metric determinant is below the floor

    Returns:
        FundamentalForms at every point

    Raises:
        SingularEmbeddingError: If |S| <= DET_FLOOR at a checked point
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    shift = family.tangents(s, t)
    hess = family.hessian(s, t)
    metric = np.einsum("pai,paj->pij", shift, shift)
    det = np.linalg.det(metric)
    if check and np.any(det <= DET_FLOOR):
        worst = int(np.argmin(det))
        raise SingularEmbeddingError(
            f"Metric determinant {det[worst]:.3e} at chart point {s[worst].tolist()} "
            f"(t={t}) is below {DET_FLOOR:g}"
        )
    metric_inv = np.linalg.inv(metric)
    normal = family.orientation * _cofactor_normal(shift)
    normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
    dual = np.einsum("pij,paj->pia", metric_inv, shift)
    curvature = np.einsum("pa,paij->pij", normal, hess)
    curvature = 0.5 * (curvature + np.swapaxes(curvature, -1, -2))
    christoffel = np.einsum("pka,paij->pkij", dual, hess)
    mean = np.einsum("pij,pij->p", metric_inv, curvature)
    return FundamentalForms(
        position=family.position(s, t),
        shift=shift,
        dual_shift=dual,
        metric=metric,
        metric_inv=metric_inv,
        sqrt_det=np.sqrt(np.abs(det)),
        N=normal,
        B=curvature,
        H=mean,
        christoffel=christoffel,
    )


def decompose_ambient_vector(forms: FundamentalForms, vector: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split an ambient vector into its normal part A.N and tangential parts A^i

    Args:
        forms: Fundamental forms at P points
        vector: Ambient vector (n+1,) or per-point vectors (P, n+1)

    Returns:
        Normal components (P,) and contravariant tangential components (P, n)
    """
    vector = np.broadcast_to(np.asarray(vector, dtype=float), forms.N.shape)
    normal = np.einsum("pa,pa->p", vector, forms.N)
    return normal, ambient_to_surface(forms, vector)


def ambient_to_surface(forms: FundamentalForms, vector: np.ndarray) -> np.ndarray:
    """A^i = X_a^i A^a"""
    vector = np.broadcast_to(np.asarray(vector, dtype=float), forms.N.shape)
    return np.einsum("pia,pa->pi", forms.dual_shift, vector)


def surface_to_ambient(forms: FundamentalForms, components: np.ndarray) -> np.ndarray:
    """V^a = X^a_i V^i"""
    return np.einsum("pai,pi->pa", forms.shift, components)


def velocity_field(family: ParamFamily, s: np.ndarray, t: float,
                   forms: Optional[FundamentalForms] = None, check: bool = True) -> VelocityField:
    """Decompose d_t R of a family into normal speed and tangential components"""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    forms = forms if forms is not None else fundamental_forms_param(family, s, t, check=check)
    C, V = decompose_ambient_vector(forms, family.velocity(s, t))
    return VelocityField(C=C, V=V)


def check_weingarten(family: ParamFamily, s: np.ndarray, t: float,
                     step: Optional[float] = None) -> Tuple[float, float]:
    """
    Residuals of the flat-ambient Gauss-Weingarten relations

    The normal is differentiated numerically along the chart and compared with
    -B_i^j S_j; the exact second derivatives are compared with the Gauss
    formula Gamma^k_ij S_k + B_ij N.

    Returns:
        (max Weingarten residual, max Gauss-formula residual)
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    forms = fundamental_forms_param(family, s, t)
    steps = family.stencil_steps(s, step)
    dN = chart_gradient(lambda q: fundamental_forms_param(family, q, t, check=False).N, s, steps)
    weingarten = dN + np.einsum("pij,paj->pai", forms.mixed_curvature, forms.shift)
    gauss = (family.hessian(s, t)
             - np.einsum("pkij,pak->paij", forms.christoffel, forms.shift)
             - np.einsum("pij,pa->paij", forms.B, forms.N))
    return float(np.max(np.abs(weingarten))), float(np.max(np.abs(gauss)))


def integrate(family: ParamFamily, integrand: Callable[[np.ndarray, FundamentalForms], np.ndarray],
              t: float, resolution: int = 64) -> float:
    """Integral of a surface field over the closed surface using the family quadrature"""
    nodes, weights = family.quadrature(resolution)
    forms = fundamental_forms_param(family, nodes, t)
    return float(np.sum(weights * forms.sqrt_det * integrand(nodes, forms)))


def family_area(family: ParamFamily, t: float, resolution: int = 64) -> float:
    """Total area (length, hyper-area) of the surface at time t"""
    return integrate(family, lambda s, f: np.ones(f.count), t, resolution)


def family_volume(family: ParamFamily, t: float, resolution: int = 64) -> float:
    """Enclosed volume (1/(n+1)) of the closed integral of R.N"""
    scale = 1.0 / family.ambient_dim
    return integrate(family, lambda s, f: scale * np.einsum("pa,pa->p", f.position, f.N), t, resolution)
