"""
Exact charts and chart functions with first and second derivatives.

Chart coordinates on the unit n-sphere are (psi_1, ..., psi_{n-1}, phi):
polar angles in (0, pi) followed by the azimuth in [0, 2 pi). The polar
axis of the outermost angle is the last ambient axis.
"""
from typing import Tuple

import numpy as np

Jet = Tuple[np.ndarray, np.ndarray, np.ndarray]


def unit_sphere_chart(s: np.ndarray) -> Jet:
    """
    Unit n-sphere embedding u(s) with exact derivatives

    Args:
        s: Chart points (P, n)

    Returns:
        u (P, n+1), du (P, n+1, n), d2u (P, n+1, n, n)
    """
    count, dim = s.shape
    if dim == 1:
        phi = s[:, 0]
        c, sn = np.cos(phi), np.sin(phi)
        u = np.stack([c, sn], axis=-1)
        du = np.stack([-sn, c], axis=-1)[:, :, None]
        d2u = np.stack([-c, -sn], axis=-1)[:, :, None, None]
        return u, du, d2u

    psi = s[:, 0]
    c, sn = np.cos(psi)[:, None], np.sin(psi)[:, None]
    v, dv, d2v = unit_sphere_chart(s[:, 1:])
    inner = dim  # ambient dimension of the inner sphere

    u = np.empty((count, dim + 1))
    u[:, :inner] = sn * v
    u[:, inner] = c[:, 0]

    du = np.zeros((count, dim + 1, dim))
    du[:, :inner, 0] = c * v
    du[:, inner, 0] = -sn[:, 0]
    du[:, :inner, 1:] = sn[:, :, None] * dv

    d2u = np.zeros((count, dim + 1, dim, dim))
    d2u[:, :inner, 0, 0] = -sn * v
    d2u[:, inner, 0, 0] = -c[:, 0]
    d2u[:, :inner, 0, 1:] = c[:, :, None] * dv
    d2u[:, :inner, 1:, 0] = c[:, :, None] * dv
    d2u[:, :inner, 1:, 1:] = sn[:, :, None, None] * d2v
    return u, du, d2u


def _polar_factor(x: np.ndarray, mode: int, zonal: bool) -> Jet:
    if zonal:
        return np.cos(mode * x), -mode * np.sin(mode * x), -mode ** 2 * np.cos(mode * x)
    if mode == 0:
        return np.ones_like(x), np.zeros_like(x), np.zeros_like(x)
    sn, c = np.sin(x), np.cos(x)
    f = sn ** mode
    df = mode * sn ** (mode - 1) * c
    if mode == 1:
        d2f = -sn
    else:
        d2f = mode * (mode - 1) * sn ** (mode - 2) * c ** 2 - mode * f
    return f, df, d2f


def _azimuth_factor(x: np.ndarray, mode: int, zonal: bool) -> Jet:
    if zonal:
        return np.ones_like(x), np.zeros_like(x), np.zeros_like(x)
    return np.cos(mode * x), -mode * np.sin(mode * x), -mode ** 2 * np.cos(mode * x)


def mode_function(s: np.ndarray, mode: int, zonal: bool = False) -> Jet:
    """
    Smooth perturbation mode on the sphere chart with exact derivatives

    Sectoral modes are sin^m(psi_1) ... sin^m(psi_{n-1}) cos(m phi), the
    restriction of Re (x + i y)^m; zonal modes are cos(m psi_1), a polynomial
    in the polar coordinate. Both are smooth through the chart poles.

    Args:
        s: Chart points (P, n)
        mode: Mode number m
        zonal: Select the zonal family instead of the sectoral one

    Returns:
        Y (P,), dY (P, n), d2Y (P, n, n)
    """
    count, dim = s.shape
    factors = []
    for axis in range(dim):
        if axis == dim - 1:
            factors.append(_azimuth_factor(s[:, axis], mode, zonal and dim > 1))
        elif zonal and axis > 0:
            factors.append((np.ones(count), np.zeros(count), np.zeros(count)))
        else:
            factors.append(_polar_factor(s[:, axis], mode, zonal))
    f = np.stack([fac[0] for fac in factors], axis=-1)
    df = np.stack([fac[1] for fac in factors], axis=-1)
    d2f = np.stack([fac[2] for fac in factors], axis=-1)

    def product_except(skip):
        out = np.ones(count)
        for k in range(dim):
            if k not in skip:
                out = out * f[:, k]
        return out

    value = product_except(())
    grad = np.stack([df[:, i] * product_except((i,)) for i in range(dim)], axis=-1)
    hess = np.empty((count, dim, dim))
    for i in range(dim):
        for j in range(dim):
            if i == j:
                hess[:, i, i] = d2f[:, i] * product_except((i,))
            else:
                hess[:, i, j] = df[:, i] * df[:, j] * product_except((i, j))
    return value, grad, hess


def polar_sample_axes(dim: int, delta: float, polar_count: int = 17, azimuth_count: int = 33):
    """Per-axis sample coordinates: polar angles in [delta, pi - delta], azimuth over a period"""
    axes = [np.linspace(delta, np.pi - delta, polar_count) for _ in range(dim - 1)]
    axes.append(np.arange(azimuth_count) * (2.0 * np.pi / azimuth_count))
    return axes
