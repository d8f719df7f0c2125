"""Galerkin and residual-minimization solvers for -eps u'' + u' = 0 on (0, 1).

Boundary conditions: -eps u'(0) + u(0) = 1 (Robin, natural in the weak form)
and u(1) = 0 (imposed strongly by dropping the last clamped basis function).
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple
import logging

import numpy as np

from ..core.config import settings
from ..core.exceptions import InvalidMeshError, InvalidParameterError, UnderdeterminedError
from .bspline import BSplineBasis1D
from .linalg import dense_solve
from .quadrature import composite_rule, default_order

logger = logging.getLogger(__name__)

ERROR_QUAD_ORDER = 8


@dataclass(frozen=True)
class Problem1D:
    eps: float
    advection: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidParameterError(f"Diffusion eps must be positive, got {self.eps}")


class FemKind(str, Enum):
    GALERKIN = "galerkin"
    RESMIN = "resmin"


@dataclass(frozen=True)
class FemSolution1D:
    basis: BSplineBasis1D
    coefficients: np.ndarray
    kind: FemKind
    residual_coefficients: Optional[np.ndarray] = None
    test_basis: Optional[BSplineBasis1D] = None
    residual_norm: Optional[float] = None

    def __post_init__(self):
        if self.coefficients.size != self.basis.dimension:
            raise ValueError("Coefficient count must equal the basis dimension")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return self.basis.evaluate(x, 0) @ self.coefficients

    def derivative(self, x, order: int = 1) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return self.basis.evaluate(x, order) @ self.coefficients


@dataclass(frozen=True)
class ErrorNorms:
    l2_error: float
    max_error: float
    mse: float
    n_samples: int
    max_error_outside_layer: float


def exact_solution_1d(problem: Problem1D, x):
    """u(x) = 1 - exp((x - 1) / eps)."""
    return 1.0 - np.exp((np.asarray(x, dtype=float) - 1.0) / problem.eps)


def exact_derivatives_1d(problem: Problem1D, x) -> Tuple[np.ndarray, np.ndarray]:
    e = np.exp((np.asarray(x, dtype=float) - 1.0) / problem.eps)
    return -e / problem.eps, -e / problem.eps ** 2


def _tables(basis: BSplineBasis1D, nodes: np.ndarray, order: int) -> np.ndarray:
    return np.stack([basis.evaluate(nodes, k) for k in range(order + 1)])


def _check_common_domain(*bases: BSplineBasis1D) -> np.ndarray:
    for basis in bases:
        if basis.domain != (0.0, 1.0):
            raise InvalidMeshError(f"Basis must span [0, 1], spans {basis.domain}")
    return np.unique(np.concatenate([b.breakpoints for b in bases]))


def assemble_system_1d(
    problem: Problem1D,
    trial: BSplineBasis1D,
    test: BSplineBasis1D,
    quad_order: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Full (unconstrained) matrix ``B[i, j] = b(trial_j, test_i)`` and load ``l[i]``.

    b(u, v) = (eps u', v') + (a u', v) + u(0) v(0),  l(v) = v(0).
    """
    breaks = _check_common_domain(trial, test)
    order = quad_order or default_order(trial.degree, test.degree)
    rule = composite_rule(breaks, order)
    w = rule.weights

    phi = _tables(trial, rule.nodes, 1)
    psi = _tables(test, rule.nodes, 1)
    matrix = problem.eps * (psi[1] * w[:, None]).T @ phi[1]
    matrix += problem.advection * (psi[0] * w[:, None]).T @ phi[1]

    phi0 = trial.evaluate([0.0], 0)[0]
    psi0 = test.evaluate([0.0], 0)[0]
    matrix += np.outer(psi0, phi0)
    return matrix, psi0.copy()


def gram_h1(basis: BSplineBasis1D, quad_order: Optional[int] = None) -> np.ndarray:
    """H1 Gram matrix (r, v) + (r', v')."""
    order = quad_order or default_order(basis.degree, basis.degree)
    rule = composite_rule(basis.breakpoints, order)
    tab = _tables(basis, rule.nodes, 1)
    w = rule.weights[:, None]
    return (tab[0] * w).T @ tab[0] + (tab[1] * w).T @ tab[1]


def _free(basis: BSplineBasis1D) -> slice:
    # clamped basis: u_h(1) is the last coefficient
    return slice(0, basis.dimension - 1)


def solve_galerkin(
    problem: Problem1D, basis: BSplineBasis1D, quad_order: Optional[int] = None
) -> FemSolution1D:
    matrix, load = assemble_system_1d(problem, basis, basis, quad_order)
    free = _free(basis)
    coefficients = np.zeros(basis.dimension)
    coefficients[free] = dense_solve(matrix[free, free], load[free])
    logger.info(f"Galerkin solve eps={problem.eps}: {basis.dimension - 1} unknowns")
    return FemSolution1D(basis=basis, coefficients=coefficients, kind=FemKind.GALERKIN)


def solve_resmin_1d(
    problem: Problem1D,
    trial: BSplineBasis1D,
    test: BSplineBasis1D,
    quad_order: Optional[int] = None,
) -> FemSolution1D:
    """Residual minimization: [G B; B^T 0][r; u] = [l; 0] with G the H1 test Gram."""
    n_trial = trial.dimension - 1
    n_test = test.dimension - 1
    if n_test < n_trial:
        raise UnderdeterminedError(
            f"Test space ({n_test} functions) smaller than trial space ({n_trial})"
        )

    order = quad_order or default_order(trial.degree, test.degree)
    matrix, load = assemble_system_1d(problem, trial, test, order)
    gram = gram_h1(test, order)
    tf, uf = _free(test), _free(trial)
    b = matrix[tf, uf]
    g = gram[tf, tf]

    saddle = np.block([[g, b], [b.T, np.zeros((n_trial, n_trial))]])
    rhs = np.concatenate([load[tf], np.zeros(n_trial)])
    solution = dense_solve(saddle, rhs)

    residual = np.zeros(test.dimension)
    residual[tf] = solution[:n_test]
    coefficients = np.zeros(trial.dimension)
    coefficients[uf] = solution[n_test:]
    residual_norm = float(np.sqrt(max(residual[tf] @ g @ residual[tf], 0.0)))
    logger.info(
        f"Residual minimization eps={problem.eps}: trial {n_trial}, test {n_test}, "
        f"|r|_H1={residual_norm:.3e}"
    )
    return FemSolution1D(
        basis=trial,
        coefficients=coefficients,
        kind=FemKind.RESMIN,
        residual_coefficients=residual,
        test_basis=test,
        residual_norm=residual_norm,
    )


def integration_breakpoints(base: Sequence[float], eps: float) -> np.ndarray:
    """Mesh breakpoints refined uniformly and across the outflow layer [1 - 10 eps, 1]."""
    layer = 1.0 - eps * np.linspace(0.0, 10.0, 41)
    extra = np.concatenate([np.linspace(0.0, 1.0, 101), layer[layer > 0.0]])
    return np.unique(np.concatenate([np.asarray(base, dtype=float), extra]))


def error_norms(
    approx: Callable[[np.ndarray], np.ndarray],
    problem: Problem1D,
    breakpoints: Sequence[float],
    quad_order: int = ERROR_QUAD_ORDER,
    n_samples: Optional[int] = None,
) -> ErrorNorms:
    """L2 error by element quadrature, max and MSE over a uniform sample grid."""
    n_samples = n_samples or settings.SAMPLE_POINTS_1D
    rule = composite_rule(integration_breakpoints(breakpoints, problem.eps), quad_order)
    diff = approx(rule.nodes) - exact_solution_1d(problem, rule.nodes)
    l2 = float(np.sqrt(rule.integrate(diff ** 2)))

    grid = np.linspace(0.0, 1.0, n_samples)
    pointwise = np.abs(approx(grid) - exact_solution_1d(problem, grid))
    outside = pointwise[grid <= 1.0 - 2.0 * problem.eps]
    return ErrorNorms(
        l2_error=l2,
        max_error=float(pointwise.max()),
        mse=float(np.mean(pointwise ** 2)),
        n_samples=n_samples,
        max_error_outside_layer=float(outside.max()) if outside.size else 0.0,
    )
