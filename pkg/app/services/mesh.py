"""Uniform and boundary-layer-adapted point distributions on [0, 1] and [0, 1]^2.

The same breakpoints serve as FEM element boundaries, PINN collocation points
and the spans of VPINN test functions.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Union
import logging

import numpy as np

from ..core.exceptions import InsufficientPointsError, InvalidMeshError

logger = logging.getLogger(__name__)

# Halving increments converge to 1; the form with (x_{i-1} + x_{i-2}) leaves (0, 1) at i = 3.
ADAPTIVE_RECURRENCE = "x_i = x_{i-1} + (x_{i-1} - x_{i-2})/2"
PRINTED_RECURRENCE = "x_i = x_{i-1} + (x_{i-1} + x_{i-2})/2"

MIN_FILL_POINTS = 2


class MeshKind(str, Enum):
    UNIFORM = "uniform"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class Mesh1D:
    breakpoints: np.ndarray
    kind: MeshKind = MeshKind.UNIFORM
    eps: Optional[float] = None

    def __post_init__(self):
        breaks = np.ascontiguousarray(self.breakpoints, dtype=float)
        breaks.setflags(write=False)
        object.__setattr__(self, "breakpoints", breaks)
        if breaks.ndim != 1 or breaks.size < 2:
            raise InvalidMeshError("A mesh needs at least two breakpoints")
        if breaks[0] != 0.0 or breaks[-1] != 1.0:
            raise InvalidMeshError(f"Mesh must span [0, 1], got [{breaks[0]}, {breaks[-1]}]")
        if np.any(np.diff(breaks) <= 0):
            raise InvalidMeshError("Breakpoints must be strictly increasing")

    @property
    def n_points(self) -> int:
        return int(self.breakpoints.size)

    @property
    def n_elements(self) -> int:
        return self.n_points - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)


@dataclass(frozen=True)
class TensorMesh2D:
    mesh_x: Mesh1D
    mesh_y: Mesh1D

    @property
    def shape(self) -> tuple:
        return self.mesh_x.n_elements, self.mesh_y.n_elements


@dataclass(frozen=True)
class CollocationSet:
    """Interior points plus labeled boundary point sets, each of shape (n, dim)."""

    interior: np.ndarray
    boundary: Dict[str, np.ndarray]

    @property
    def all_points(self) -> np.ndarray:
        return np.concatenate([self.interior, *self.boundary.values()], axis=0)


def uniform_mesh(n_points: int) -> Mesh1D:
    if n_points < 2:
        raise InvalidMeshError(f"A uniform mesh needs at least 2 points, got {n_points}")
    return Mesh1D(np.linspace(0.0, 1.0, n_points), MeshKind.UNIFORM)


def geometric_prefix(eps: float) -> List[float]:
    """0, 0.5, 0.75, ... stopping at the first point with 1 - x < eps."""
    points = [0.0, 0.5]
    while 1.0 - points[-1] >= eps:
        points.append(points[-1] + (points[-1] - points[-2]) / 2.0)
    return points


def adaptive_mesh(n_points: int, eps: float) -> Mesh1D:
    """Geometric approach to x = 1 followed by a uniform fill of the layer.

    The fill points are spread evenly over (x_last, 1], which lies inside
    [1 - eps, 1], so the result stays strictly increasing.
    """
    if not 0.0 < eps < 0.5:
        raise InvalidMeshError(f"Layer width eps must lie in (0, 0.5), got {eps}")
    prefix = geometric_prefix(eps)
    n_fill = n_points - len(prefix)
    if n_fill < MIN_FILL_POINTS:
        raise InsufficientPointsError(
            f"{n_points} points cannot hold the {len(prefix)}-point geometric prefix "
            f"plus {MIN_FILL_POINTS} layer points for eps={eps}"
        )
    last = prefix[-1]
    fill = last + (1.0 - last) * np.arange(1, n_fill + 1) / n_fill
    fill[-1] = 1.0
    breaks = np.concatenate([prefix, fill])
    logger.debug(f"Adaptive mesh eps={eps}: {len(prefix)} prefix points, {n_fill} layer points")
    return Mesh1D(breaks, MeshKind.ADAPTIVE, eps)


def bisect(mesh: Mesh1D, levels: int = 1) -> Mesh1D:
    """Split every element in two, ``levels`` times; the result is nested in ``mesh``."""
    if levels < 0:
        raise InvalidMeshError(f"Bisection levels must be non-negative, got {levels}")
    breaks = np.asarray(mesh.breakpoints)
    for _ in range(levels):
        midpoints = 0.5 * (breaks[:-1] + breaks[1:])
        breaks = np.insert(breaks, np.arange(1, breaks.size), midpoints)
    return Mesh1D(breaks, mesh.kind, mesh.eps)


def refined_points(n_points: int, refinements: int) -> int:
    return (n_points - 1) * 2 ** refinements + 1


def make_mesh(kind: Union[MeshKind, str], n_points: int, eps: float, refinements: int = 0) -> Mesh1D:
    if MeshKind(kind) is MeshKind.ADAPTIVE:
        mesh = adaptive_mesh(n_points, eps)
    else:
        mesh = uniform_mesh(n_points)
    return bisect(mesh, refinements) if refinements else mesh


def make_mesh_2d(kind: Union[MeshKind, str], n_points: int, eps: float, refinements: int = 0) -> TensorMesh2D:
    """Tensor mesh with the layer adaptation in x only; y is always uniform.

    ``refinements`` bisects every element in both directions, so a sequence
    of increasing levels refines the layer elements as well.
    """
    return TensorMesh2D(
        make_mesh(kind, n_points, eps, refinements), make_mesh(MeshKind.UNIFORM, n_points, eps, refinements)
    )


def collocation_points(mesh: Union[Mesh1D, TensorMesh2D]) -> CollocationSet:
    if isinstance(mesh, Mesh1D):
        x = mesh.breakpoints
        return CollocationSet(
            interior=x[1:-1, None].copy(),
            boundary={"x0": np.array([[x[0]]]), "x1": np.array([[x[-1]]])},
        )

    xs = mesh.mesh_x.breakpoints
    ys = mesh.mesh_y.breakpoints
    xx, yy = np.meshgrid(xs[1:-1], ys[1:-1], indexing="ij")
    interior = np.column_stack([xx.ravel(), yy.ravel()])
    # corners belong to the x = 0 and x = 1 edges
    boundary = {
        "left": np.column_stack([np.zeros_like(ys), ys]),
        "right": np.column_stack([np.ones_like(ys), ys]),
        "bottom": np.column_stack([xs[1:-1], np.zeros(xs.size - 2)]),
        "top": np.column_stack([xs[1:-1], np.ones(xs.size - 2)]),
    }
    return CollocationSet(interior=interior, boundary=boundary)
