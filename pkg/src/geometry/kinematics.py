"""
Chart-level kinematics of a moving surface: covariant derivatives of the
velocity components, the time connection and time rates at fixed chart points.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from src.geometry.chart import chart_gradient, chart_hessian, time_derivative
from src.geometry.forms import (FundamentalForms, ParamFamily, VelocityField,
                                fundamental_forms_param, velocity_field)

# Surface scalar field: (family, chart points, time) -> values (P,)
SurfaceScalar = Callable[[ParamFamily, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class TimeConnection:
    """Gamma-dot^i_j = nabla_j V^i - C B^i_j, stored as (P, i, j)"""
    values: np.ndarray

    def lower(self, forms: FundamentalForms) -> np.ndarray:
        """Gamma-dot_ij with the upper index lowered, stored as (P, i, j)"""
        return np.einsum("pik,pkj->pij", forms.metric, self.values)


class ChartKinematics:
    """
    Geometry and velocity of a family at fixed chart points and one time

    Spatial derivatives of C and V^i are sixth-order central differences with
    the family's spatial step; the family's own derivatives are used for the
    embedding. All quantities are computed lazily and cached.
    """

    def __init__(self, family: ParamFamily, s: np.ndarray, t: float, spatial_step: Optional[float] = None):
        self.family = family
        self.s = np.atleast_2d(np.asarray(s, dtype=float))
        self.t = t
        self.step = family.stencil_steps(self.s, spatial_step)

    def _field(self, q: np.ndarray, t: Optional[float] = None) -> VelocityField:
        return velocity_field(self.family, q, self.t if t is None else t, check=False)

    @cached_property
    def forms(self) -> FundamentalForms:
        return fundamental_forms_param(self.family, self.s, self.t)

    @cached_property
    def velocity(self) -> VelocityField:
        return velocity_field(self.family, self.s, self.t, self.forms)

    @property
    def C(self) -> np.ndarray:
        return self.velocity.C

    @property
    def V(self) -> np.ndarray:
        return self.velocity.V

    @cached_property
    def V_lower(self) -> np.ndarray:
        """V_i = S_ij V^j"""
        return np.einsum("pij,pj->pi", self.forms.metric, self.V)

    @cached_property
    def grad_C(self) -> np.ndarray:
        """d_i C (P, i)"""
        return chart_gradient(lambda q: self._field(q).C, self.s, self.step)

    @cached_property
    def grad_C_up(self) -> np.ndarray:
        """nabla^i C (P, i)"""
        return np.einsum("pij,pj->pi", self.forms.metric_inv, self.grad_C)

    @cached_property
    def hess_C(self) -> np.ndarray:
        """nabla_i nabla_j C = d_i d_j C - Gamma^k_ij d_k C"""
        raw = chart_hessian(lambda q: self._field(q).C, self.s, self.step)
        return raw - np.einsum("pkij,pk->pij", self.forms.christoffel, self.grad_C)

    @cached_property
    def partial_V(self) -> np.ndarray:
        """d_i V^j stored as (P, i, j)"""
        return np.swapaxes(chart_gradient(lambda q: self._field(q).V, self.s, self.step), -1, -2)

    @cached_property
    def cov_V(self) -> np.ndarray:
        """nabla_i V^j = d_i V^j + Gamma^j_ik V^k, stored as (P, i, j)"""
        return self.partial_V + np.einsum("pjik,pk->pij", self.forms.christoffel, self.V)

    @cached_property
    def cov_V_lower(self) -> np.ndarray:
        """nabla_i V_j stored as (P, i, j)"""
        return np.einsum("pik,pjk->pij", self.cov_V, self.forms.metric)

    @cached_property
    def divergence_V(self) -> np.ndarray:
        """nabla_i V^i"""
        return np.einsum("pii->p", self.cov_V)

    @cached_property
    def time_connection(self) -> TimeConnection:
        """Gamma-dot^i_j = nabla_j V^i - C B^i_j with B^i_j = S^ik B_kj"""
        mixed = np.einsum("pik,pkj->pij", self.forms.metric_inv, self.forms.B)
        return TimeConnection(np.swapaxes(self.cov_V, -1, -2) - self.C[:, None, None] * mixed)

    @cached_property
    def grad_B(self) -> np.ndarray:
        """nabla_k B_ij stored as (P, k, i, j)"""
        raw = chart_gradient(lambda q: fundamental_forms_param(self.family, q, self.t, check=False).B,
                             self.s, self.step)
        raw = np.moveaxis(raw, -1, 1)
        gamma = self.forms.christoffel
        B = self.forms.B
        return (raw
                - np.einsum("pmki,pmj->pkij", gamma, B)
                - np.einsum("pmkj,pim->pkij", gamma, B))

    def grad_N(self) -> np.ndarray:
        """d_k N stored as (P, a, k)"""
        return chart_gradient(lambda q: fundamental_forms_param(self.family, q, self.t, check=False).N,
                              self.s, self.step)

    def scalar_gradient(self, field: SurfaceScalar) -> np.ndarray:
        """d_i F of a surface scalar at this time (P, i)"""
        return chart_gradient(lambda q: field(self.family, q, self.t), self.s, self.step)


def time_rate(family: ParamFamily, s: np.ndarray, t: float, h: float,
              quantity: Callable[[FundamentalForms, VelocityField], np.ndarray], order: int = 2) -> np.ndarray:
    """
    Centered time derivative at fixed chart points of a pointwise quantity

    Args:
        family: Parametric family
        s: Chart points (P, n)
        t: Time
        h: Time step
        quantity: Maps (forms, velocity) at one time to values
        order: 2 or 4

    Returns:
        d_t of the quantity at (s, t)
    """
    def at(tt: float) -> np.ndarray:
        forms = fundamental_forms_param(family, s, tt)
        return quantity(forms, velocity_field(family, s, tt, forms))
    return time_derivative(at, t, h, order)


def time_connection(family: ParamFamily, s: np.ndarray, t: float) -> TimeConnection:
    """Gamma-dot^i_j of a family at chart points"""
    return ChartKinematics(family, s, t).time_connection


def basis_time_connection(family: ParamFamily, s: np.ndarray, t: float, h: float) -> TimeConnection:
    """
    Tangential part of the basis rate, X_a^i d_t S_j^a, from time differences

    Equal to nabla_j V^i - C B^i_j when the kinematics are consistent.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    forms = fundamental_forms_param(family, s, t)
    rate = time_derivative(lambda tt: family.tangents(s, tt), t, h)
    return TimeConnection(np.einsum("pia,paj->pij", forms.dual_shift, rate))
