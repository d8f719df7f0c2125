"""Univariate B-spline bases on clamped knot vectors.

Evaluation follows the classic knot-span / triangular-table scheme of
Piegl & Tiller (The NURBS Book, algorithms A2.1 and A2.3): locate the span
containing ``x`` by binary search, then build all ``degree + 1`` non-vanishing
functions and their derivatives from the same table.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple
import logging

import numpy as np

from ..core.exceptions import (
    InvalidContinuityError,
    InvalidMeshError,
    OutOfDomainError,
)

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 2


@dataclass(frozen=True)
class KnotVector:
    """Clamped, non-decreasing knot sequence of a given degree."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        p = self.degree
        if p < 0:
            raise InvalidContinuityError(f"Degree must be nonnegative, got {p}")
        if values.size < 2 * (p + 1):
            raise InvalidMeshError(f"Knot vector too short for degree {p}: {values.size} knots")
        if np.any(np.diff(values) < 0):
            raise InvalidMeshError("Knot values must be nondecreasing")

        lo, hi = values[0], values[-1]
        if not lo < hi:
            raise InvalidMeshError("Knot vector spans an empty domain")
        if np.count_nonzero(values == lo) != p + 1 or np.count_nonzero(values == hi) != p + 1:
            raise InvalidContinuityError(f"End knots must repeat exactly {p + 1} times")

        _, counts = np.unique(values, return_counts=True)
        if np.any(counts > p + 1):
            raise InvalidContinuityError(f"Knot multiplicity exceeds degree + 1 = {p + 1}")

    @property
    def domain(self) -> Tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.values)


@dataclass(frozen=True)
class BSplineBasis1D:
    """B-spline basis spanned by a clamped knot vector.

    Immutable after construction; evaluation never mutates state.
    """

    knots: KnotVector
    dimension: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dimension", self.knots.values.size - self.knots.degree - 1)

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def domain(self) -> Tuple[float, float]:
        return self.knots.domain

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots.breakpoints

    def find_span(self, x: float) -> int:
        """Index of the knot span holding ``x``.

        Interior knots use the right limit; the right end of the domain uses
        the left limit so the last span stays non-degenerate.
        """
        t = self.knots.values
        p = self.degree
        span = int(np.searchsorted(t, x, side="right")) - 1
        return min(max(span, p), self.dimension - 1)

    def ders_at(self, x: float, n: int) -> Tuple[int, np.ndarray]:
        """Values and derivatives up to order ``n`` of the functions active at ``x``.

        Returns ``(span, ders)`` where ``ders[k, j]`` is the k-th derivative of
        basis function ``span - degree + j``.
        """
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise OutOfDomainError(f"x={x} outside the basis domain [{lo}, {hi}]")

        t = self.knots.values
        p = self.degree
        span = self.find_span(x)
        ders = np.zeros((n + 1, p + 1))

        left = np.empty(p + 1)
        right = np.empty(p + 1)
        # ndu: basis values above the diagonal, knot differences below
        ndu = np.empty((p + 1, p + 1))
        ndu[0, 0] = 1.0
        for j in range(1, p + 1):
            left[j] = x - t[span + 1 - j]
            right[j] = t[span + j] - x
            saved = 0.0
            for r in range(j):
                ndu[j, r] = right[r + 1] + left[j - r]
                temp = ndu[r, j - 1] / ndu[j, r]
                ndu[r, j] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            ndu[j, j] = saved

        ders[0, :] = ndu[:, p]

        ne = min(n, p)
        a = np.empty((2, p + 1))
        for r in range(p + 1):
            s1, s2 = 0, 1
            a[0, 0] = 1.0
            for k in range(1, ne + 1):
                d = 0.0
                rk = r - k
                pk = p - k
                if r >= k:
                    a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                    d = a[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = k - 1 if r - 1 <= pk else p - r
                for j in range(j1, j2 + 1):
                    a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                    d += a[s2, j] * ndu[rk + j, pk]
                if r <= pk:
                    a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                    d += a[s2, k] * ndu[r, pk]
                ders[k, r] = d
                s1, s2 = s2, s1

        factor = p
        for k in range(1, ne + 1):
            ders[k, :] *= factor
            factor *= p - k

        return span, ders

    def eval_basis(self, x: float, deriv_order: int = 0) -> List[Tuple[int, float]]:
        """The ``degree + 1`` local entries ``(basis_index, value)`` at ``x``."""
        if deriv_order < 0 or deriv_order > min(MAX_DERIVATIVE_ORDER, self.degree):
            raise InvalidContinuityError(
                f"Derivative order {deriv_order} not available for degree {self.degree}"
            )
        span, ders = self.ders_at(x, deriv_order)
        first = span - self.degree
        return [(first + j, float(ders[deriv_order, j])) for j in range(self.degree + 1)]

    def evaluate(self, xs: Sequence[float], deriv_order: int = 0) -> np.ndarray:
        """Dense collocation matrix ``M[n, i] = d^k B_i(xs[n])``."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros((xs.size, self.dimension))
        for row, x in enumerate(xs):
            span, ders = self.ders_at(float(x), deriv_order)
            out[row, span - self.degree:span + 1] = ders[deriv_order]
        return out


def build_basis(degree: int, breakpoints: Sequence[float], interior_multiplicity: int) -> BSplineBasis1D:
    """Clamped basis repeating every interior breakpoint ``interior_multiplicity`` times.

    Multiplicity ``degree`` gives C0 separators, multiplicity 1 gives C^(degree-1).
    """
    if degree < 1:
        raise InvalidContinuityError(f"Degree must be at least 1, got {degree}")
    breaks = np.asarray(breakpoints, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2:
        raise InvalidMeshError("At least two breakpoints are required")
    if np.any(np.diff(breaks) <= 0):
        raise InvalidMeshError("Breakpoints must be strictly increasing")
    if not 1 <= interior_multiplicity <= degree:
        raise InvalidContinuityError(
            f"Interior multiplicity must lie in [1, {degree}], got {interior_multiplicity}"
        )

    knots = np.concatenate([
        np.full(degree + 1, breaks[0]),
        np.repeat(breaks[1:-1], interior_multiplicity),
        np.full(degree + 1, breaks[-1]),
    ])
    basis = BSplineBasis1D(KnotVector(knots, degree))
    logger.debug(
        f"Built degree {degree} basis on {breaks.size - 1} elements "
        f"(multiplicity {interior_multiplicity}): dimension {basis.dimension}"
    )
    return basis
