"""Finite-difference verification of analytic gradients."""

from typing import Callable

import numpy as np

from .graph import DiffGraph, DiffValue

GraphBuilder = Callable[[DiffValue], DiffValue]


def _evaluate(f: GraphBuilder, point: np.ndarray) -> float:
    graph = DiffGraph()
    return float(f(graph.variable(point)).data.reshape(-1)[0])


def analytic_gradient(f: GraphBuilder, point: np.ndarray) -> np.ndarray:
    """Gradient of the scalar built by f at point, via one backward pass."""
    graph = DiffGraph()
    x = graph.variable(np.array(point, dtype=np.float64))
    graph.backward(f(x))
    return x.grad


def numeric_gradient(f: GraphBuilder, point: np.ndarray, step: float) -> np.ndarray:
    """Central-difference gradient, one coordinate at a time."""
    point = np.array(point, dtype=np.float64)
    numeric = np.zeros_like(point)
    for index in np.ndindex(point.shape):
        plus = point.copy()
        minus = point.copy()
        plus[index] += step
        minus[index] -= step
        numeric[index] = (_evaluate(f, plus) - _evaluate(f, minus)) / (2.0 * step)
    return numeric


def grad_check(f: GraphBuilder, point: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Args:
        f: Builds a scalar DiffValue from the leaf it is given
        point: Coordinates to differentiate at
        step: Central-difference half-width

    Returns:
        max |analytic - numeric| / (|numeric| + 1e-9) over all coordinates
    """
    analytic = analytic_gradient(f, point)
    numeric = numeric_gradient(f, point, step)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / (np.abs(numeric) + 1e-9)))
