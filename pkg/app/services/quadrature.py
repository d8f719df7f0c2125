"""Gauss-Legendre rules on intervals, element meshes and rectangles."""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..core.exceptions import InvalidIntervalError


@dataclass(frozen=True)
class QuadRule1D:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class QuadRule2D:
    points: np.ndarray  # (n, 2), x-major ordering
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (Golub-Welsch eigenvalue method)."""
    if order < 1:
        raise InvalidIntervalError(f"Quadrature order must be at least 1, got {order}")
    return np.polynomial.legendre.leggauss(order)


def gauss_rule(order: int, a: float, b: float) -> QuadRule1D:
    if not a < b:
        raise InvalidIntervalError(f"Invalid interval [{a}, {b}]")
    ref_nodes, ref_weights = reference_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return QuadRule1D(nodes=mid + half * ref_nodes, weights=half * ref_weights, order=order)


def tensor_rule(rule_x: QuadRule1D, rule_y: QuadRule1D) -> QuadRule2D:
    xx, yy = np.meshgrid(rule_x.nodes, rule_y.nodes, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(rule_x.weights, rule_y.weights).ravel()
    return QuadRule2D(points=points, weights=weights)


def composite_rule(breakpoints: Sequence[float], order: int) -> QuadRule1D:
    """Element-wise Gauss rule over consecutive breakpoints, concatenated."""
    breaks = np.asarray(breakpoints, dtype=float)
    if breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise InvalidIntervalError("Composite rule needs strictly increasing breakpoints")
    ref_nodes, ref_weights = reference_rule(order)
    half = 0.5 * np.diff(breaks)[:, None]
    mid = 0.5 * (breaks[:-1] + breaks[1:])[:, None]
    nodes = (mid + half * ref_nodes[None, :]).ravel()
    weights = (half * ref_weights[None, :]).ravel()
    return QuadRule1D(nodes=nodes, weights=weights, order=order)


def default_order(trial_degree: int, test_degree: int) -> int:
    """Points per element and direction used by assembly and variational losses."""
    return trial_degree + test_degree + 1
