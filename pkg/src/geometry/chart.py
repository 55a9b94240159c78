"""
Chart calculus: quadrature rules on coordinate charts and finite-difference
stencils in chart coordinates and in time.
"""
from typing import Callable, Sequence, Tuple, Union

import numpy as np

Step = Union[float, np.ndarray]

# Sixth-order central first-derivative stencil (offsets -3..3)
_OFFSETS = np.array([-3, -2, -1, 1, 2, 3], dtype=float)
_WEIGHTS = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0
# Sixth-order second-derivative stencil: center weight first, then _OFFSETS order
_SECOND_WEIGHTS = np.array([-490.0, 2.0, -27.0, 270.0, 270.0, -27.0, 2.0]) / 180.0


def gauss_legendre(count: int, lower: float, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [lower, upper]"""
    x, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def periodic_trapezoid(count: int, period: float = 2.0 * np.pi) -> Tuple[np.ndarray, np.ndarray]:
    """Trapezoid rule on a periodic interval [0, period)"""
    nodes = np.arange(count) * (period / count)
    return nodes, np.full(count, period / count)


def tensor_rule(rules: Sequence[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor-product quadrature from one-dimensional rules

    Args:
        rules: One (nodes, weights) pair per chart axis

    Returns:
        Nodes of shape (P, n) and weights of shape (P,)
    """
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def tensor_grid(axes: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor-product sample points of shape (P, n)"""
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def chart_derivative(func: Callable[[np.ndarray], np.ndarray], s: np.ndarray,
                     step: Step, axis: int) -> np.ndarray:
    """
    Sixth-order central difference of a chart field along one chart axis

    Args:
        func: Maps chart points (P, n) to values (P, ...)
        s: Chart points (P, n)
        step: Chart step, scalar or per point and axis (P, n)
        axis: Chart axis to differentiate along

    Returns:
        Derivative values with the shape of func(s)
    """
    h = np.broadcast_to(np.asarray(step, dtype=float), s.shape)[:, axis]
    result = None
    for offset, weight in zip(_OFFSETS, _WEIGHTS):
        shifted = s.copy()
        shifted[:, axis] += offset * h
        term = weight * func(shifted)
        result = term if result is None else result + term
    return result / h.reshape((-1,) + (1,) * (result.ndim - 1))


def chart_gradient(func: Callable[[np.ndarray], np.ndarray], s: np.ndarray, step: Step) -> np.ndarray:
    """Partial derivatives along every chart axis, stacked on a new last axis"""
    return np.stack([chart_derivative(func, s, step, i) for i in range(s.shape[1])], axis=-1)


def chart_hessian(func: Callable[[np.ndarray], np.ndarray], s: np.ndarray, step: Step) -> np.ndarray:
    """
    Second partial derivatives, stacked on two new last axes (i, j)

    Pure second derivatives use the sixth-order seven-point stencil and mixed
    ones the tensor product of first-derivative stencils, so no evaluation
    lies more than three steps from s along any axis.
    """
    dim = s.shape[1]
    steps = np.broadcast_to(np.asarray(step, dtype=float), s.shape)
    rows = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        h = steps[:, i]
        total = _SECOND_WEIGHTS[0] * func(s)
        for offset, weight in zip(_OFFSETS, _SECOND_WEIGHTS[1:]):
            shifted = s.copy()
            shifted[:, i] += offset * h
            total = total + weight * func(shifted)
        rows[i][i] = total / (h ** 2).reshape((-1,) + (1,) * (total.ndim - 1))
        for j in range(i + 1, dim):
            mixed = chart_derivative(lambda q: chart_derivative(func, q, step, j), s, step, i)
            rows[i][j] = rows[j][i] = mixed
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def time_derivative(func: Callable[[float], np.ndarray], t: float, h: float, order: int = 2) -> np.ndarray:
    """
    Centered time derivative

    Args:
        func: Maps a time to values
        t: Evaluation time
        h: Time step
        order: 2 (three-point) or 4 (five-point)

    Returns:
        Derivative values with the shape of func(t)
    """
    if order == 4:
        return (func(t - 2 * h) - 8 * func(t - h) + 8 * func(t + h) - func(t + 2 * h)) / (12 * h)
    return (func(t + h) - func(t - h)) / (2 * h)
