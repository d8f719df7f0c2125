"""Variational residual losses: the network residual tested against cubic B-splines.

Test function values and derivatives are tabulated once at the composite
Gauss nodes of the test mesh, so every loss evaluation is a pair of dense
matrix products per direction.

1D (v(1) = 0 for every test function):
    strong:  b(u, v) = int (-eps u'' + u') v,                  l(v) = 0
    weak:    b(u, v) = int eps u' v' + u' v  +  u(0) v(0),     l(v) = v(0)
2D (test functions vanish on the whole boundary):
    strong:  b(u, v) = int (beta . grad u - eps Lap u) v,      l(v) = 0
    weak:    b(u, v) = int eps grad u . grad v + (beta . grad u) v
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union
import logging

import numpy as np
import torch

from ..core.exceptions import DimensionMismatchError
from .bspline import BSplineBasis1D, build_basis
from .mesh import Mesh1D, TensorMesh2D
from .neural import DTYPE, JetModel, JetValue, LossReport, as_points, loss_gradient
from .pinn import PinnProblem, boundary_components, pde_residual
from .quadrature import composite_rule, default_order

logger = logging.getLogger(__name__)

TEST_DEGREE = 3


@dataclass(frozen=True)
class _Tabulated:
    """Active test functions of one direction at the composite quadrature nodes."""

    basis: BSplineBasis1D
    active: np.ndarray
    nodes: np.ndarray
    weights: torch.Tensor
    values: torch.Tensor  # (n_test, n_nodes)
    slopes: torch.Tensor
    at_zero: torch.Tensor


def _tabulate(basis: BSplineBasis1D, active: np.ndarray, order: int) -> _Tabulated:
    rule = composite_rule(basis.breakpoints, order)
    values = basis.evaluate(rule.nodes, 0)[:, active].T
    slopes = basis.evaluate(rule.nodes, 1)[:, active].T
    at_zero = basis.evaluate([0.0], 0)[0, active]
    return _Tabulated(
        basis=basis,
        active=active,
        nodes=rule.nodes,
        weights=torch.as_tensor(rule.weights, dtype=DTYPE),
        values=torch.as_tensor(values, dtype=DTYPE),
        slopes=torch.as_tensor(slopes, dtype=DTYPE),
        at_zero=torch.as_tensor(at_zero, dtype=DTYPE),
    )


@dataclass(frozen=True)
class TestSpace:
    dimension: int
    directions: Tuple[_Tabulated, ...]
    quad_order: int
    points: torch.Tensor
    gamma: float = 1.0

    __test__ = False  # not a pytest class

    @property
    def n_tests(self) -> int:
        return int(np.prod([d.active.size for d in self.directions]))

    def quadrature_points(self) -> torch.Tensor:
        return self.points


def _tensor_points(tabs) -> torch.Tensor:
    if len(tabs) == 1:
        return as_points(tabs[0].nodes)
    xx, yy = np.meshgrid(tabs[0].nodes, tabs[1].nodes, indexing="ij")
    return as_points(np.column_stack([xx.ravel(), yy.ravel()]))


def build_test_space(
    mesh: Union[Mesh1D, TensorMesh2D],
    degree: int = TEST_DEGREE,
    multiplicity: int = 1,
    quad_order: Optional[int] = None,
    gamma: float = 1.0,
) -> TestSpace:
    order = quad_order or default_order(1, degree)
    if isinstance(mesh, Mesh1D):
        basis = build_basis(degree, mesh.breakpoints, multiplicity)
        # drop the function that is nonzero at x = 1
        active = np.arange(basis.dimension - 1)
        tabs = (_tabulate(basis, active, order),)
        space = TestSpace(1, tabs, order, _tensor_points(tabs), gamma)
    else:
        tabs = []
        for breaks in (mesh.mesh_x.breakpoints, mesh.mesh_y.breakpoints):
            basis = build_basis(degree, breaks, multiplicity)
            tabs.append(_tabulate(basis, np.arange(1, basis.dimension - 1), order))
        space = TestSpace(2, tuple(tabs), order, _tensor_points(tabs), gamma)
    logger.debug(f"Test space: {space.n_tests} degree {degree} functions, quadrature order {order}")
    return space


def _check(model: JetModel, space: TestSpace, problem: PinnProblem) -> None:
    if model.input_dim != space.dimension or problem.dimension != space.dimension:
        raise DimensionMismatchError(
            f"Network dimension {model.input_dim}, test space dimension {space.dimension}, "
            f"problem dimension {problem.dimension} must agree"
        )


def _integrate_2d(space: TestSpace, field: torch.Tensor, dx: bool = False, dy: bool = False) -> torch.Tensor:
    tx, ty = space.directions
    grid = field.reshape(tx.nodes.size, ty.nodes.size) * torch.outer(tx.weights, ty.weights)
    left = tx.slopes if dx else tx.values
    right = ty.slopes if dy else ty.values
    return left @ grid @ right.T


def strong_residuals(
    model: JetModel, space: TestSpace, problem: PinnProblem, jet: Optional[JetValue] = None
) -> torch.Tensor:
    """b(u, v) - l(v) without integration by parts, one entry per test function."""
    if jet is None:
        jet = model.jet(space.quadrature_points())
    residual = pde_residual(jet, problem)
    if space.dimension == 1:
        t = space.directions[0]
        return t.values @ (t.weights * residual)
    return _integrate_2d(space, residual).reshape(-1)


def weak_residuals(
    model: JetModel, space: TestSpace, problem: PinnProblem, jet: Optional[JetValue] = None
) -> torch.Tensor:
    """b(u, v) - l(v) after integration by parts, scaled by ``gamma``."""
    if jet is None:
        jet = model.jet(space.quadrature_points())
    eps = problem.eps
    if space.dimension == 1:
        t = space.directions[0]
        du = jet.grad[:, 0]
        u0 = model.jet(as_points(np.zeros(1))).value[0]
        b = t.slopes @ (t.weights * eps * du) + t.values @ (t.weights * du) + u0 * t.at_zero
        return space.gamma * (b - t.at_zero)

    bx, by = problem.beta
    advective = bx * jet.grad[:, 0] + by * jet.grad[:, 1]
    b = (
        _integrate_2d(space, eps * jet.grad[:, 0], dx=True)
        + _integrate_2d(space, eps * jet.grad[:, 1], dy=True)
        + _integrate_2d(space, advective)
    )
    return space.gamma * b.reshape(-1)


def _components(model, space, problem, strong: bool, weak: bool, bc: bool) -> Dict[str, torch.Tensor]:
    _check(model, space, problem)
    components = {}
    jet = model.jet(space.quadrature_points()) if strong or weak else None
    if strong:
        components["strong"] = torch.mean(strong_residuals(model, space, problem, jet) ** 2)
    if weak:
        components["weak"] = torch.mean(weak_residuals(model, space, problem, jet) ** 2)
    if bc:
        components.update(boundary_components(model, problem))
    return components


def vpinn_strong_loss(model: JetModel, space: TestSpace, problem: PinnProblem) -> LossReport:
    return loss_gradient(model, lambda m: _components(m, space, problem, True, False, True))


def vpinn_weak_loss(model: JetModel, space: TestSpace, problem: PinnProblem) -> LossReport:
    return loss_gradient(model, lambda m: _components(m, space, problem, False, True, True))


def vpinn_combined_loss(
    model: JetModel, space: TestSpace, problem: PinnProblem, keep_parts: bool = False
) -> LossReport:
    """strong + weak + boundary terms, boundary counted once.

    With ``keep_parts`` the strong-only, weak-only and boundary-only reports
    are evaluated as well and attached under ``parts``.
    """
    parts = None
    if keep_parts:
        parts = {
            "strong": loss_gradient(model, lambda m: _components(m, space, problem, True, False, False)),
            "weak": loss_gradient(model, lambda m: _components(m, space, problem, False, True, False)),
            "bc": loss_gradient(model, lambda m: _components(m, space, problem, False, False, True)),
        }
    return loss_gradient(model, lambda m: _components(m, space, problem, True, True, True), parts)
