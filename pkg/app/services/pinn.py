"""Pointwise residual losses for the 1D model problem and the Eriksson-Johnson problem."""
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union
import logging

import numpy as np
import torch

from ..core.exceptions import DimensionMismatchError, EmptyPointSetError
from .fem2d import ProblemEJ
from .mesh import Mesh1D, TensorMesh2D, collocation_points
from .neural import (
    DTYPE,
    AnalyticSurrogate,
    JetModel,
    JetValue,
    LossReport,
    as_points,
    eval_with_input_derivs,
    loss_gradient,
)

logger = logging.getLogger(__name__)


class BoundaryKind:
    DIRICHLET = "dirichlet"
    ROBIN = "robin"


@dataclass(frozen=True)
class BoundarySet:
    points: np.ndarray
    targets: np.ndarray
    kind: str = BoundaryKind.DIRICHLET


@dataclass(frozen=True)
class PinnProblem:
    dimension: int
    eps: float
    interior: np.ndarray
    boundary: Dict[str, BoundarySet]
    bc_weight: float = 1.0
    beta: Tuple[float, float] = (1.0, 0.0)
    _interior_tensor: torch.Tensor = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DimensionMismatchError(f"Dimension must be 1 or 2, got {self.dimension}")
        interior = np.asarray(self.interior, dtype=float).reshape(-1, self.dimension)
        object.__setattr__(self, "interior", interior)
        if interior.shape[0] == 0:
            raise EmptyPointSetError("The interior collocation set is empty")
        for name, bset in self.boundary.items():
            if len(bset.points) == 0:
                raise EmptyPointSetError(f"Boundary set {name!r} is empty")
        object.__setattr__(self, "_interior_tensor", as_points(interior))

    @property
    def interior_tensor(self) -> torch.Tensor:
        return self._interior_tensor


def build_pinn_problem(mesh: Union[Mesh1D, TensorMesh2D], eps: float, bc_weight: float = 1.0) -> PinnProblem:
    """Collocation problem on the mesh points; boundary points only enter the BC terms."""
    points = collocation_points(mesh)
    if isinstance(mesh, Mesh1D):
        boundary = {
            "bc0": BoundarySet(points.boundary["x0"], np.array([1.0]), BoundaryKind.ROBIN),
            "bc1": BoundarySet(points.boundary["x1"], np.array([0.0])),
        }
        return PinnProblem(1, eps, points.interior, boundary, bc_weight)

    ej = ProblemEJ(eps)
    boundary = {}
    for edge, pts in points.boundary.items():
        tangential = pts[:, 1] if edge in ("left", "right") else pts[:, 0]
        boundary[f"bc_{edge}"] = BoundarySet(pts, ej.boundary_data(edge, tangential))
    return PinnProblem(2, eps, points.interior, boundary, bc_weight, ej.beta)


def pde_residual(jet: JetValue, problem: PinnProblem) -> torch.Tensor:
    """1D: -eps u'' + u'.  2D: beta . grad u - eps Lap u."""
    if problem.dimension == 1:
        return -problem.eps * jet.hess_diag[:, 0] + jet.grad[:, 0]
    bx, by = problem.beta
    return bx * jet.grad[:, 0] + by * jet.grad[:, 1] - problem.eps * jet.laplacian


def boundary_components(model: JetModel, problem: PinnProblem) -> Dict[str, torch.Tensor]:
    """Mean squared boundary misfit per labeled set, scaled by ``bc_weight``."""
    components = {}
    for name, bset in problem.boundary.items():
        jet = eval_with_input_derivs(model, bset.points)
        if bset.kind == BoundaryKind.ROBIN:
            trace = -problem.eps * jet.grad[:, 0] + jet.value
        else:
            trace = jet.value
        misfit = trace - torch.as_tensor(bset.targets, dtype=DTYPE)
        components[name] = problem.bc_weight * torch.mean(misfit ** 2)
    return components


def pinn_components(model: JetModel, problem: PinnProblem) -> Dict[str, torch.Tensor]:
    if model.input_dim != problem.dimension:
        raise DimensionMismatchError(
            f"Network input dimension {model.input_dim} does not match problem dimension {problem.dimension}"
        )
    jet = model.jet(problem.interior_tensor)
    components = {"pde": torch.mean(pde_residual(jet, problem) ** 2)}
    components.update(boundary_components(model, problem))
    return components


def pinn_loss_1d(model: JetModel, problem: PinnProblem) -> LossReport:
    if problem.dimension != 1:
        raise DimensionMismatchError("pinn_loss_1d needs a one-dimensional problem")
    return loss_gradient(model, lambda m: pinn_components(m, problem))


def pinn_loss_2d(model: JetModel, problem: PinnProblem) -> LossReport:
    if problem.dimension != 2:
        raise DimensionMismatchError("pinn_loss_2d needs a two-dimensional problem")
    return loss_gradient(model, lambda m: pinn_components(m, problem))


def pinn_loss(model: JetModel, problem: PinnProblem) -> LossReport:
    if problem.dimension == 1:
        return pinn_loss_1d(model, problem)
    return pinn_loss_2d(model, problem)


def exact_surrogate_1d(eps: float) -> AnalyticSurrogate:
    """u = 1 - exp((x - 1) / eps) as a parameter-free model."""

    def jet(x: torch.Tensor) -> JetValue:
        e = torch.exp((x[:, 0] - 1.0) / eps)
        return JetValue(1.0 - e, (-e / eps)[:, None], (-e / eps ** 2)[:, None])

    return AnalyticSurrogate(1, jet)


def exact_surrogate_ej(problem: ProblemEJ) -> AnalyticSurrogate:
    r1, r2 = problem.r1, problem.r2
    denom = float(np.exp(-r1) - np.exp(-r2))

    def jet(points: torch.Tensor) -> JetValue:
        x, y = points[:, 0], points[:, 1]
        e1 = torch.exp(r1 * (x - 1.0))
        e2 = torch.exp(r2 * (x - 1.0))
        s, c = torch.sin(torch.pi * y), torch.cos(torch.pi * y)
        profile = (e1 - e2) / denom
        d_profile = (r1 * e1 - r2 * e2) / denom
        d2_profile = (r1 ** 2 * e1 - r2 ** 2 * e2) / denom
        grad = torch.stack([d_profile * s, torch.pi * profile * c], dim=1)
        hess = torch.stack([d2_profile * s, -torch.pi ** 2 * profile * s], dim=1)
        return JetValue(profile * s, grad, hess)

    return AnalyticSurrogate(2, jet)
