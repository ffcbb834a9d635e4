"""Generalized stepwise procedures with per-hypothesis critical functions.

A classic stepwise procedure compares ordered p-values against one threshold
sequence. Here every hypothesis i gets its own non-decreasing critical
function alpha_i(r) mapping a candidate rejection count r to a p-value
threshold. Writing psi(r) for the number of p-values at or below their
threshold at r, the rejection count is

    stepup:            R = max{0 <= r <= m : r <= psi(r)}
    stepdown:          R = min{1 <= r <= m+1 : r > psi(r)} - 1
    stepup-down (k):   the stepup rule restricted to r < k when k > psi(k),
                       otherwise the stepdown rule restricted to r > k

and hypothesis i is rejected iff P_i <= alpha_i(R). The returned count always
satisfies the self-consistency identity R = psi(R).

Comparisons are closed (<=) with exact floating point, no tolerance. A NaN
p-value marks an untestable hypothesis: it is never counted and never
rejected.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError


class CriticalFunctionSet:
    """Evaluable per-hypothesis thresholds alpha_i(r) for i = 1..size.

    ``evaluator(r)`` must return the vector of thresholds at the integer
    point r for r in {0, ..., size + 1}. Evaluations are memoized, and each
    newly evaluated point is checked against its already-evaluated
    neighbours: thresholds must be non-negative, zero at r = 0, and
    non-decreasing in r. A violation raises :class:`ValidationError`.
    """

    __slots__ = ("size", "_evaluator", "_cache", "_points")

    def __init__(self, size: int, evaluator: Callable[[int], np.ndarray]):
        if size < 1:
            raise ValidationError("critical function set needs at least one hypothesis")
        self.size = int(size)
        self._evaluator = evaluator
        self._cache: dict[int, np.ndarray] = {}
        self._points: list[int] = []  # sorted evaluated r values

    @classmethod
    def from_callables(cls, funcs: Sequence[Callable[[int], float]]) -> "CriticalFunctionSet":
        """Wrap one scalar function per hypothesis."""
        funcs = list(funcs)

        def evaluator(r: int) -> np.ndarray:
            return np.array([float(f(r)) for f in funcs], dtype=float)

        return cls(len(funcs), evaluator)

    @classmethod
    def from_matrix(cls, matrix) -> "CriticalFunctionSet":
        """Use precomputed thresholds, shape (size, size + 2), column r."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != matrix.shape[0] + 2:
            raise ValidationError(
                f"threshold matrix must have shape (m, m + 2), got {matrix.shape}"
            )
        return cls(matrix.shape[0], lambda r: matrix[:, r])

    def thresholds(self, r: int) -> np.ndarray:
        """Threshold vector at r, memoized."""
        r = int(r)
        cached = self._cache.get(r)
        if cached is not None:
            return cached
        if not 0 <= r <= self.size + 1:
            raise ValueError(f"r={r} outside critical function domain 0..{self.size + 1}")
        values = np.asarray(self._evaluator(r), dtype=float)
        if values.shape != (self.size,):
            raise ValidationError(
                f"critical function evaluator returned shape {values.shape}, "
                f"expected ({self.size},)"
            )
        self._check_point(r, values)
        values.flags.writeable = False
        self._cache[r] = values
        insort(self._points, r)
        return values

    def threshold(self, i: int, r: int) -> float:
        """alpha_i(r) for the 1-based hypothesis position i."""
        if not 1 <= i <= self.size:
            raise ValidationError(f"hypothesis position {i} out of range 1..{self.size}")
        return float(self.thresholds(r)[i - 1])

    def validate_domain(self) -> None:
        """Evaluate every point of the domain, forcing the full checks."""
        for r in range(self.size + 2):
            self.thresholds(r)

    def _check_point(self, r: int, values: np.ndarray) -> None:
        if np.isnan(values).any():
            i = int(np.flatnonzero(np.isnan(values))[0]) + 1
            raise ValidationError(f"critical function {i} is NaN at r={r}")
        if (values < 0).any():
            i = int(np.flatnonzero(values < 0)[0]) + 1
            raise ValidationError(f"critical function {i} is negative at r={r}")
        if r == 0 and (values != 0).any():
            i = int(np.flatnonzero(values != 0)[0]) + 1
            raise ValidationError(f"critical function {i} must be 0 at r=0")
        pos = bisect_left(self._points, r)
        if pos > 0:
            lo = self._points[pos - 1]
            bad = np.flatnonzero(self._cache[lo] > values)
            if bad.size:
                raise ValidationError(
                    f"critical function {int(bad[0]) + 1} is not non-decreasing "
                    f"between r={lo} and r={r}"
                )
        if pos < len(self._points):
            hi = self._points[pos]
            bad = np.flatnonzero(values > self._cache[hi])
            if bad.size:
                raise ValidationError(
                    f"critical function {int(bad[0]) + 1} is not non-decreasing "
                    f"between r={r} and r={hi}"
                )


@dataclass(frozen=True, eq=False)
class RejectionOutcome:
    """Result of one generalized stepwise run.

    ``rejected[i-1]`` iff P_i <= alpha_i(count); ``thresholds`` holds the
    alpha_i(count) actually compared against. ``psi_evaluations`` counts the
    psi evaluations the search needed.
    """

    count: int
    rejected: np.ndarray
    thresholds: np.ndarray
    psi_evaluations: int


def _validate_pvalues(p, cf: CriticalFunctionSet) -> np.ndarray:
    pvals = np.asarray(p, dtype=float)
    if pvals.ndim != 1:
        raise ValidationError("p-values must be a one-dimensional array")
    if pvals.shape[0] != cf.size:
        raise ValidationError(
            f"{pvals.shape[0]} p-values but {cf.size} critical functions"
        )
    finite = ~np.isnan(pvals)
    bad = np.flatnonzero(finite & ((pvals < 0) | (pvals > 1)))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"p-value {pvals[i]!r} at position {i + 1} outside [0, 1]")
    return pvals


def _count_rejections(pvals: np.ndarray, cf: CriticalFunctionSet, k: int) -> tuple[int, int]:
    """Iterative fixed-point search for the stepup-down count of order k.

    Starting from r = k, repeatedly jump to psi(r) while r overshoots
    (r > psi(r)), or to psi(r) + 1 while it undershoots. Each branch is
    monotone, so it terminates in at most m steps; in practice a handful.
    Returns (count, number of psi evaluations).
    """
    evals = 0

    def psi(r: int) -> int:
        nonlocal evals
        evals += 1
        return int(np.count_nonzero(pvals <= cf.thresholds(r)))

    r = k
    v = psi(r)
    if r > v:
        while True:
            r = v
            v = psi(r)
            if r <= v:
                return r, evals
    else:
        while True:
            r = v + 1
            v = psi(r)
            if r > v:
                return r - 1, evals


def _outcome(pvals: np.ndarray, cf: CriticalFunctionSet, count: int, evals: int) -> RejectionOutcome:
    thresholds = cf.thresholds(count)
    rejected = pvals <= thresholds  # NaN compares False
    if int(rejected.sum()) != count:
        raise ValidationError(
            "self-consistency failed: the supplied critical functions are not "
            "non-decreasing over their whole domain"
        )
    return RejectionOutcome(
        count=count,
        rejected=rejected,
        thresholds=np.array(thresholds),
        psi_evaluations=evals,
    )


def generalized_stepupdown(p, cf: CriticalFunctionSet, k: int) -> RejectionOutcome:
    """Generalized stepup-down procedure of order k (1 <= k <= m).

    k = m is the stepup procedure, k = 1 the stepdown procedure.
    """
    pvals = _validate_pvalues(p, cf)
    if not 1 <= k <= cf.size:
        raise ValidationError(f"order k={k} out of range 1..{cf.size}")
    count, evals = _count_rejections(pvals, cf, int(k))
    return _outcome(pvals, cf, count, evals)


def generalized_stepup(p, cf: CriticalFunctionSet) -> RejectionOutcome:
    """Generalized stepup procedure: largest self-consistent rejection count."""
    return generalized_stepupdown(p, cf, cf.size)


def generalized_stepdown(p, cf: CriticalFunctionSet) -> RejectionOutcome:
    """Generalized stepdown procedure: smallest crossing point minus one."""
    return generalized_stepupdown(p, cf, 1)


def rejection_count_fast(p, cf: CriticalFunctionSet, k: int) -> int:
    """Rejection count of the order-k stepup-down procedure (fast search)."""
    pvals = _validate_pvalues(p, cf)
    if not 1 <= k <= cf.size:
        raise ValidationError(f"order k={k} out of range 1..{cf.size}")
    count, _ = _count_rejections(pvals, cf, int(k))
    return count


def rejection_count_bruteforce(p, cf: CriticalFunctionSet, k: int) -> int:
    """Rejection count by exhaustive scan over every candidate r.

    Literal evaluation of the stepup-down definition, kept independent of the
    fast search so the two can be checked against each other. O(m^2); meant
    for small m.
    """
    pvals = _validate_pvalues(p, cf)
    m = cf.size
    if not 1 <= k <= m:
        raise ValidationError(f"order k={k} out of range 1..{m}")
    psi = [int(np.count_nonzero(pvals <= cf.thresholds(r))) for r in range(m + 2)]
    if k > psi[k]:
        return max(r for r in range(k) if r <= psi[r])
    return min(r for r in range(k + 1, m + 2) if r > psi[r]) - 1
