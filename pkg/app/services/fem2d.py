"""Eriksson-Johnson problem on tensor-product B-spline spaces.

    beta . grad u - eps Lap u = 0  in (0, 1)^2,   u = g on the boundary,
    g(0, y) = sin(pi y) and g = 0 on the other three edges.

Dirichlet data are imposed weakly (Nitsche). With n the outward normal and
sigma = C p^2 eps / h the edge penalty:

    b(u, v) = eps (grad u, grad v) + (beta . grad u, v)
              - (eps d_n u, v)_G - (u, eps d_n v)_G + sigma (u, v)_G
              - (beta . n u, v)_{G-}
    l(v)    = -(g, eps d_n v)_G + sigma (g, v)_G - (beta . n g, v)_{G-}

where G- is the inflow part of the boundary (beta . n < 0). Every term
separates in x and y, so global matrices are Kronecker products of 1D
matrices. Degrees of freedom are ordered ``i * dim_y + j``.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple
import logging

import numpy as np

from ..core.config import settings
from ..core.exceptions import (
    InvalidMeshError,
    InvalidParameterError,
    UnderdeterminedError,
    UnsupportedDegreeError,
)
from .bspline import BSplineBasis1D, build_basis
from .fem1d import ErrorNorms, integration_breakpoints
from .linalg import dense_solve
from .mesh import TensorMesh2D
from .quadrature import composite_rule, default_order

logger = logging.getLogger(__name__)

# the 3 in tau^-1 = |bx|/hx + |by|/hy + 3 p^2 eps / (hx^2 + hy^2)
SUPG_DIFFUSION_CONSTANT = 3.0
ERROR_QUAD_ORDER = 4
EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class ProblemEJ:
    eps: float
    beta: Tuple[float, float] = (1.0, 0.0)
    r1: float = field(init=False)
    r2: float = field(init=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidParameterError(f"Diffusion eps must be positive, got {self.eps}")
        root = np.sqrt(1.0 + 4.0 * self.eps ** 2 * np.pi ** 2)
        object.__setattr__(self, "r1", float((1.0 + root) / (2.0 * self.eps)))
        object.__setattr__(self, "r2", float((1.0 - root) / (2.0 * self.eps)))

    def boundary_data(self, edge: str, t: np.ndarray) -> np.ndarray:
        """Dirichlet data along ``edge`` as a function of the tangential coordinate."""
        t = np.asarray(t, dtype=float)
        if edge == "left":
            return np.sin(np.pi * t)
        return np.zeros_like(t)


class FemKind2D(str, Enum):
    GALERKIN = "galerkin"
    SUPG = "supg"
    RESMIN = "resmin"


@dataclass(frozen=True)
class FemSolution2D:
    basis_x: BSplineBasis1D
    basis_y: BSplineBasis1D
    coefficients: np.ndarray
    kind: FemKind2D
    trial_degree: int
    residual_norm: Optional[float] = None

    def __post_init__(self):
        if self.coefficients.size != self.basis_x.dimension * self.basis_y.dimension:
            raise ValueError("Coefficient count must equal dim_x * dim_y")

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return self.coefficients.reshape(self.basis_x.dimension, self.basis_y.dimension)

    def on_grid(self, xs, ys) -> np.ndarray:
        """Values on the tensor grid ``xs x ys``, shape ``(len(xs), len(ys))``."""
        return self.basis_x.evaluate(xs) @ self.coefficient_matrix @ self.basis_y.evaluate(ys).T

    def __call__(self, x, y) -> np.ndarray:
        bx = self.basis_x.evaluate(np.ravel(x))
        by = self.basis_y.evaluate(np.ravel(y))
        return np.einsum("ni,ij,nj->n", bx, self.coefficient_matrix, by)


def exact_solution_ej(problem: ProblemEJ, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r1, r2 = problem.r1, problem.r2
    denom = np.exp(-r1) - np.exp(-r2)
    profile = (np.exp(r1 * (x - 1.0)) - np.exp(r2 * (x - 1.0))) / denom
    return profile * np.sin(np.pi * y)


def exact_derivatives_ej(problem: ProblemEJ, x, y) -> Dict[str, np.ndarray]:
    """First and pure second derivatives of the exact solution: keys u_x, u_y, u_xx, u_yy."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r1, r2 = problem.r1, problem.r2
    denom = np.exp(-r1) - np.exp(-r2)
    e1 = np.exp(r1 * (x - 1.0))
    e2 = np.exp(r2 * (x - 1.0))
    s, c = np.sin(np.pi * y), np.cos(np.pi * y)
    profile = (e1 - e2) / denom
    return {
        "u_x": (r1 * e1 - r2 * e2) / denom * s,
        "u_y": np.pi * profile * c,
        "u_xx": (r1 ** 2 * e1 - r2 ** 2 * e2) / denom * s,
        "u_yy": -np.pi ** 2 * profile * s,
    }


@dataclass(frozen=True)
class _Direction:
    """Per-direction 1D ingredients: element matrices and boundary traces."""

    # element[g][a][e, k, i] = int_e d^g test_k d^a trial_i
    element: np.ndarray
    widths: np.ndarray
    trial_trace: np.ndarray  # [side, deriv, i]
    test_trace: np.ndarray
    test_basis: BSplineBasis1D
    breakpoints: np.ndarray

    @property
    def global_(self) -> np.ndarray:
        return self.element.sum(axis=2)


def _direction(trial: BSplineBasis1D, test: BSplineBasis1D, order: int) -> _Direction:
    if not np.array_equal(trial.breakpoints, test.breakpoints):
        raise InvalidMeshError("Trial and test bases must share breakpoints")
    breaks = trial.breakpoints
    rule = composite_rule(breaks, order)
    n_el = breaks.size - 1
    w = rule.weights.reshape(n_el, order)

    def tables(basis):
        return np.stack([basis.evaluate(rule.nodes, k).reshape(n_el, order, -1) for k in range(3)])

    tb, tt = tables(trial), tables(test)
    element = np.einsum("eq,geqk,aeqi->gaeki", w, tt, tb)

    def traces(basis):
        return np.stack([np.stack([basis.evaluate([side], k)[0] for k in range(2)]) for side in (0.0, 1.0)])

    return _Direction(element, np.diff(breaks), traces(trial), traces(test), test, breaks)


def _edge_geometry(edge: str) -> Tuple[int, int, float]:
    """(normal axis, side index, outward normal sign) of an edge."""
    return {"left": (0, 0, -1.0), "right": (0, 1, 1.0), "bottom": (1, 0, -1.0), "top": (1, 1, 1.0)}[edge]


def edge_penalty(penalty_constant: float, degree: int, eps: float, width: float) -> float:
    return penalty_constant * degree ** 2 * eps / width


def _tangential_load(problem: ProblemEJ, edge: str, along: _Direction, order: int) -> np.ndarray:
    rule = composite_rule(along.breakpoints, order)
    g = problem.boundary_data(edge, rule.nodes)
    return along.test_basis.evaluate(rule.nodes).T @ (rule.weights * g)


def _supg_block(problem: ProblemEJ, dx: _Direction, dy: _Direction, degree: int) -> np.ndarray:
    """sum_K tau_K (beta . grad u - eps Lap u, beta . grad v)_K."""
    bx, by = problem.beta
    eps = problem.eps
    hx, hy = np.meshgrid(dx.widths, dy.widths, indexing="ij")
    inv_tau = abs(bx) / hx + abs(by) / hy + SUPG_DIFFUSION_CONSTANT * degree ** 2 * eps / (hx ** 2 + hy ** 2)
    tau = 1.0 / inv_tau

    trial_ops = ((bx, 1, 0), (by, 0, 1), (-eps, 2, 0), (-eps, 0, 2))
    test_ops = ((bx, 1, 0), (by, 0, 1))
    block = np.zeros((dx.element.shape[3], dy.element.shape[3], dx.element.shape[4], dy.element.shape[4]))
    for c_test, gx, gy in test_ops:
        for c_trial, ax, ay in trial_ops:
            coeff = c_test * c_trial
            if coeff == 0.0:
                continue
            block += coeff * np.einsum(
                "ab,aki,blj->klij", tau, dx.element[gx, ax], dy.element[gy, ay], optimize=True
            )
    logger.debug(f"SUPG block from {tau.size} elements")
    n_test = block.shape[0] * block.shape[1]
    return block.reshape(n_test, -1)


def assemble_ej_system(
    problem: ProblemEJ,
    mesh: TensorMesh2D,
    trial: Tuple[BSplineBasis1D, BSplineBasis1D],
    test: Tuple[BSplineBasis1D, BSplineBasis1D],
    quad_order: Optional[int] = None,
    stabilization: bool = False,
    penalty_constant: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Weak-form matrix (rows: test, columns: trial) and load vector.

    With ``stabilization`` the SUPG streamline term is added; the load gains
    nothing from it because the source vanishes.
    """
    penalty_constant = settings.PENALTY_CONSTANT if penalty_constant is None else penalty_constant
    for basis, breaks in zip(trial + test, 2 * (mesh.mesh_x.breakpoints, mesh.mesh_y.breakpoints)):
        if not np.array_equal(basis.breakpoints, breaks):
            raise InvalidMeshError("Bases must be built on the mesh breakpoints")
    degree = trial[0].degree
    order = quad_order or default_order(degree, test[0].degree)
    dx = _direction(trial[0], test[0], order)
    dy = _direction(trial[1], test[1], order)
    mx, my = dx.global_, dy.global_
    eps = problem.eps
    bx, by = problem.beta

    matrix = eps * (np.kron(mx[1, 1], my[0, 0]) + np.kron(mx[0, 0], my[1, 1]))
    matrix += bx * np.kron(mx[0, 1], my[0, 0]) + by * np.kron(mx[0, 0], my[0, 1])
    load = np.zeros(matrix.shape[0])

    directions = (dx, dy)
    for edge in EDGES:
        axis, side, sign = _edge_geometry(edge)
        normal, along = directions[axis], directions[1 - axis]
        width = normal.widths[0] if side == 0 else normal.widths[-1]
        sigma = edge_penalty(penalty_constant, degree, eps, width)
        beta_n = sign * problem.beta[axis]
        inflow = -beta_n if beta_n < 0 else 0.0

        t_val, t_der = normal.test_trace[side]
        u_val, u_der = normal.trial_trace[side]
        normal_part = (
            -eps * sign * np.outer(t_val, u_der)
            - eps * sign * np.outer(t_der, u_val)
            + (sigma + inflow) * np.outer(t_val, u_val)
        )
        mass = along.global_[0, 0]
        matrix += np.kron(normal_part, mass) if axis == 0 else np.kron(mass, normal_part)

        g_load = _tangential_load(problem, edge, along, order + 3)
        if np.any(g_load):
            normal_load = -eps * sign * t_der + (sigma + inflow) * t_val
            load += np.kron(normal_load, g_load) if axis == 0 else np.kron(g_load, normal_load)

    if stabilization:
        matrix += _supg_block(problem, dx, dy, degree)
    logger.debug(f"Assembled EJ system {matrix.shape} (stabilization={stabilization})")
    return matrix, load


def gram_h1_2d(test: Tuple[BSplineBasis1D, BSplineBasis1D], quad_order: Optional[int] = None) -> np.ndarray:
    order = quad_order or default_order(test[0].degree, test[0].degree)
    mx = _direction(test[0], test[0], order).global_
    my = _direction(test[1], test[1], order).global_
    return (
        np.kron(mx[0, 0], my[0, 0])
        + np.kron(mx[1, 1], my[0, 0])
        + np.kron(mx[0, 0], my[1, 1])
    )


def tensor_basis(mesh: TensorMesh2D, degree: int, multiplicity: int) -> Tuple[BSplineBasis1D, BSplineBasis1D]:
    return (
        build_basis(degree, mesh.mesh_x.breakpoints, multiplicity),
        build_basis(degree, mesh.mesh_y.breakpoints, multiplicity),
    )


def solve_galerkin_2d(
    problem: ProblemEJ,
    mesh: TensorMesh2D,
    trial_degree: int = 2,
    trial_multiplicity: int = 1,
    quad_order: Optional[int] = None,
    penalty_constant: Optional[float] = None,
) -> FemSolution2D:
    """Nitsche-Galerkin without stabilization (trial = test)."""
    basis = tensor_basis(mesh, trial_degree, trial_multiplicity)
    matrix, load = assemble_ej_system(problem, mesh, basis, basis, quad_order, False, penalty_constant)
    coefficients = dense_solve(matrix, load)
    logger.info(f"Nitsche-Galerkin eps={problem.eps}: {coefficients.size} unknowns")
    return FemSolution2D(basis[0], basis[1], coefficients, FemKind2D.GALERKIN, trial_degree)


def solve_supg(
    problem: ProblemEJ,
    mesh: TensorMesh2D,
    trial_degree: int = 2,
    quad_order: Optional[int] = None,
    trial_multiplicity: int = 1,
    penalty_constant: Optional[float] = None,
) -> FemSolution2D:
    if trial_degree < 2:
        raise UnsupportedDegreeError(
            f"SUPG needs the Laplacian of the trial functions: degree >= 2, got {trial_degree}"
        )
    basis = tensor_basis(mesh, trial_degree, trial_multiplicity)
    matrix, load = assemble_ej_system(problem, mesh, basis, basis, quad_order, True, penalty_constant)
    coefficients = dense_solve(matrix, load)
    logger.info(f"SUPG eps={problem.eps} on {mesh.shape} elements: {coefficients.size} unknowns")
    return FemSolution2D(basis[0], basis[1], coefficients, FemKind2D.SUPG, trial_degree)


def solve_resmin_2d(
    problem: ProblemEJ,
    mesh: TensorMesh2D,
    trial_degree: int = 2,
    test_degree: int = 3,
    quad_order: Optional[int] = None,
    trial_multiplicity: int = 1,
    test_multiplicity: int = 1,
    penalty_constant: Optional[float] = None,
) -> FemSolution2D:
    """Residual minimization: [G B; B^T 0][r; u] = [l; 0] with G the H1 Gram of the test space."""
    trial = tensor_basis(mesh, trial_degree, trial_multiplicity)
    test = tensor_basis(mesh, test_degree, test_multiplicity)
    n_trial = trial[0].dimension * trial[1].dimension
    n_test = test[0].dimension * test[1].dimension
    if test_degree < trial_degree or n_test < n_trial:
        raise UnderdeterminedError(
            f"Test space (degree {test_degree}, {n_test} functions) is not richer than "
            f"trial space (degree {trial_degree}, {n_trial} functions)"
        )

    order = quad_order or default_order(trial_degree, test_degree)
    b, load = assemble_ej_system(problem, mesh, trial, test, order, False, penalty_constant)
    gram = gram_h1_2d(test, order)
    saddle = np.block([[gram, b], [b.T, np.zeros((n_trial, n_trial))]])
    solution = dense_solve(saddle, np.concatenate([load, np.zeros(n_trial)]))

    residual = solution[:n_test]
    residual_norm = float(np.sqrt(max(residual @ gram @ residual, 0.0)))
    logger.info(
        f"Residual minimization eps={problem.eps} on {mesh.shape} elements: "
        f"trial {n_trial}, test {n_test}, |r|_H1={residual_norm:.3e}"
    )
    return FemSolution2D(
        trial[0], trial[1], solution[n_test:], FemKind2D.RESMIN, trial_degree, residual_norm
    )


def error_norms_2d(
    on_grid: Callable[[np.ndarray, np.ndarray], np.ndarray],
    problem: ProblemEJ,
    mesh: TensorMesh2D,
    n_grid: Optional[int] = None,
    quad_order: int = ERROR_QUAD_ORDER,
) -> ErrorNorms:
    """L2 error by tensor quadrature, max and MSE on an ``n_grid x n_grid`` sample grid.

    ``on_grid(xs, ys)`` must return values of shape ``(len(xs), len(ys))``.
    """
    n_grid = n_grid or settings.EVAL_GRID_2D
    rule_x = composite_rule(integration_breakpoints(mesh.mesh_x.breakpoints, problem.eps), quad_order)
    breaks_y = np.unique(np.concatenate([mesh.mesh_y.breakpoints, np.linspace(0.0, 1.0, 51)]))
    rule_y = composite_rule(breaks_y, quad_order)
    xx, yy = np.meshgrid(rule_x.nodes, rule_y.nodes, indexing="ij")
    diff = on_grid(rule_x.nodes, rule_y.nodes) - exact_solution_ej(problem, xx, yy)
    l2 = float(np.sqrt(rule_x.weights @ diff ** 2 @ rule_y.weights))

    grid = np.linspace(0.0, 1.0, n_grid)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    pointwise = np.abs(on_grid(grid, grid) - exact_solution_ej(problem, gx, gy))
    outside = pointwise[grid <= 1.0 - 2.0 * problem.eps]
    return ErrorNorms(
        l2_error=l2,
        max_error=float(pointwise.max()),
        mse=float(np.mean(pointwise ** 2)),
        n_samples=n_grid * n_grid,
        max_error_outside_layer=float(outside.max()) if outside.size else 0.0,
    )
