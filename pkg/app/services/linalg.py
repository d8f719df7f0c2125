import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from ..core.exceptions import SolverFailureError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-14


def dense_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Dense LU with partial pivoting; singular systems raise with a condition diagnostic."""
    n = matrix.shape[0]
    logger.debug(f"Dense LU solve of size {n}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.max(np.abs(matrix))), 1.0)
    if np.min(pivots) <= PIVOT_TOLERANCE * scale:
        condition = float(np.linalg.cond(matrix))
        logger.error(f"Singular system of size {n}: condition number {condition:.3e}")
        raise SolverFailureError(
            f"Singular linear system (size {n}, condition number {condition:.3e})",
            condition_number=condition,
        )
    solution = lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(solution)):
        raise SolverFailureError("Linear solve produced non-finite values")
    return solution
