"""Hierarchical testing procedures.

The main driver tests the depth families F_1, ..., F_D in order. Family d is
tested with the generalized stepup procedure where node i's effective
threshold function is

    alpha*_i(r) = 1{parent of i rejected} * alpha_i(r + R(G_{d-1}))

with R(G_{d-1}) the number of rejections in shallower families. A node whose
parent was accepted keeps an identically-zero function (and its p-value is
masked), so it can never be rejected; families after a total stall still run
but reject nothing. Two baselines with the same eligibility cascade are
provided: Meinshausen's single-step thresholds l_i * alpha / l, and
Yekutieli's procedure, which groups siblings into families and tests each
eligible family with the classic stepup rule at a reduced level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critical import (
    HIERARCHICAL_KINDS,
    ProcedureKind,
    _check_alpha,
    critical_functions_for,
)
from .errors import ValidationError
from .hierarchy import Hierarchy
from .stepwise import CriticalFunctionSet, generalized_stepupdown

# Level reduction making Yekutieli's per-family tests control the global FDR;
# inferred from the worked threshold 0.05 / 0.0174, can be overridden.
DEFAULT_YEKUTIELI_CORRECTION = 2.88


@dataclass(frozen=True, eq=False)
class RejectionResult:
    """Outcome of a hierarchical procedure run.

    ``rejected`` and ``thresholds`` are indexed by node id minus 1;
    ``thresholds`` holds the effective threshold each node was compared
    against at its family's final rejection count (zero for nodes whose
    family was not testable). ``family_counts[d-1]`` is the number of
    rejections among nodes of depth d.
    """

    procedure: ProcedureKind
    alpha: float
    pvalues: np.ndarray
    rejected: np.ndarray
    thresholds: np.ndarray
    family_counts: tuple

    @property
    def total_rejections(self) -> int:
        return int(sum(self.family_counts))

    def rejected_ids(self) -> list[int]:
        return [int(i) + 1 for i in np.flatnonzero(self.rejected)]

    def to_dict(self) -> dict:
        """Plain-data form used by the JSON output and the HTTP service."""
        return {
            "procedure": self.procedure.value,
            "alpha": self.alpha,
            "total_rejections": self.total_rejections,
            "families": [
                {"depth": d + 1, "R": int(count)}
                for d, count in enumerate(self.family_counts)
            ],
            "nodes": [
                {
                    "id": i + 1,
                    "p": float(self.pvalues[i]),
                    "threshold": float(self.thresholds[i]),
                    "rejected": bool(self.rejected[i]),
                }
                for i in range(self.pvalues.shape[0])
            ],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, RejectionResult):
            return NotImplemented
        return (
            self.procedure is other.procedure
            and self.alpha == other.alpha
            and self.family_counts == other.family_counts
            and np.array_equal(self.pvalues, other.pvalues)
            and np.array_equal(self.rejected, other.rejected)
            and np.array_equal(self.thresholds, other.thresholds)
        )


def as_pvalue_array(p, m: int) -> np.ndarray:
    """Coerce a length-m sequence or an {id: p} mapping to a validated array."""
    if isinstance(p, dict):
        missing = [i for i in range(1, m + 1) if i not in p]
        if missing:
            raise ValidationError(f"missing p-value for node {missing[0]}")
        extra = [k for k in p if not (isinstance(k, (int, np.integer)) and 1 <= k <= m)]
        if extra:
            raise ValidationError(f"p-value given for unknown node {extra[0]!r}")
        arr = np.array([float(p[i]) for i in range(1, m + 1)])
    else:
        arr = np.array(p, dtype=float)  # copy: results must not alias caller data
        if arr.ndim != 1 or arr.shape[0] != m:
            raise ValidationError(f"expected {m} p-values, got shape {arr.shape}")
    bad = np.flatnonzero(np.isnan(arr) | (arr < 0) | (arr > 1))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"p-value {arr[i]!r} for node {i + 1} outside [0, 1]")
    arr.flags.writeable = False
    return arr


def _eligibility(h: Hierarchy, members: np.ndarray, rejected: np.ndarray) -> np.ndarray:
    parents = h.parent[members - 1]
    eligible = parents == 0
    children = ~eligible
    eligible[children] = rejected[parents[children] - 1]
    return eligible


def run_hierarchical(
    p,
    h: Hierarchy,
    kind: ProcedureKind,
    alpha: float,
    order: int | None = None,
    functions: CriticalFunctionSet | None = None,
) -> RejectionResult:
    """Run the family-by-family procedure for one of the stepwise kinds.

    ``order`` selects the stepup-down order used inside each family
    (clamped to the family size); the default is the full stepup, which is
    the most powerful choice. ``functions`` may pass a prebuilt critical
    function set for the same (hierarchy, kind, alpha), which avoids
    rebuilding it across many runs.
    """
    if kind not in HIERARCHICAL_KINDS:
        raise ValidationError(
            f"procedure {kind.value!r} is not a stepwise hierarchical procedure"
        )
    alpha = _check_alpha(alpha)
    if order is not None and order < 1:
        raise ValidationError(f"order {order} must be at least 1")
    pvals = as_pvalue_array(p, h.m)
    cf = functions if functions is not None else critical_functions_for(kind, h, alpha)
    if cf.size != h.m:
        raise ValidationError(f"critical function set covers {cf.size} nodes, tree has {h.m}")

    rejected = np.zeros(h.m, dtype=bool)
    thresholds = np.zeros(h.m)
    family_counts = []
    offset = 0
    for members in h.families:
        idx = members - 1
        eligible = _eligibility(h, members, rejected)
        p_local = np.where(eligible, pvals[idx], np.nan)

        def evaluator(r: int, idx=idx, eligible=eligible, shift=offset) -> np.ndarray:
            # local origin stays 0 even with a global offset; harmless since
            # a zero family count implies no p-value cleared any threshold
            if r == 0:
                return np.zeros(idx.shape[0])
            return np.where(eligible, cf.thresholds(r + shift)[idx], 0.0)

        local = CriticalFunctionSet(members.shape[0], evaluator)
        k = members.shape[0] if order is None else min(order, members.shape[0])
        out = generalized_stepupdown(p_local, local, k)
        rejected[idx] = out.rejected
        thresholds[idx] = out.thresholds
        family_counts.append(out.count)
        offset += out.count

    thresholds.flags.writeable = False
    rejected.flags.writeable = False
    return RejectionResult(
        procedure=kind,
        alpha=alpha,
        pvalues=pvals,
        rejected=rejected,
        thresholds=thresholds,
        family_counts=tuple(family_counts),
    )


def run_meinshausen(p, h: Hierarchy, alpha: float) -> RejectionResult:
    """Single-step hierarchical testing at fixed thresholds l_i * alpha / l."""
    alpha = _check_alpha(alpha)
    pvals = as_pvalue_array(p, h.m)
    fixed = np.minimum(h.subtree_leaves * alpha / float(h.total_leaves), 1.0)

    rejected = np.zeros(h.m, dtype=bool)
    thresholds = np.zeros(h.m)
    family_counts = []
    for members in h.families:
        idx = members - 1
        eligible = _eligibility(h, members, rejected)
        thr = np.where(eligible, fixed[idx], 0.0)
        hit = eligible & (pvals[idx] <= thr)
        rejected[idx] = hit
        thresholds[idx] = thr
        family_counts.append(int(hit.sum()))

    thresholds.flags.writeable = False
    rejected.flags.writeable = False
    return RejectionResult(
        procedure=ProcedureKind.MEINSHAUSEN,
        alpha=alpha,
        pvalues=pvals,
        rejected=rejected,
        thresholds=thresholds,
        family_counts=tuple(family_counts),
    )


def run_yekutieli(
    p,
    h: Hierarchy,
    alpha: float,
    correction: float = DEFAULT_YEKUTIELI_CORRECTION,
) -> RejectionResult:
    """Yekutieli-style testing of sibling families with the classic stepup rule.

    All roots form one family; the children of node i form a family that is
    tested only if node i was rejected. Each tested family of size n runs the
    classic stepup procedure with thresholds r * q / n at the reduced level
    q = alpha / correction. Untested families contribute zero rejections and
    report zero thresholds.
    """
    alpha = _check_alpha(alpha)
    if not correction > 0:
        raise ValidationError(f"yekutieli correction {correction} must be positive")
    pvals = as_pvalue_array(p, h.m)
    q = alpha / float(correction)

    # Sibling groups keyed by parent id; parents at depth d are handled
    # before any of their children (key 0 first, then by depth, then id).
    groups: dict[int, list[int]] = {}
    for i in range(1, h.m + 1):
        groups.setdefault(int(h.parent[i - 1]), []).append(i)
    order = sorted(groups, key=lambda pid: (0, 0) if pid == 0 else (int(h.depth[pid - 1]), pid))

    rejected = np.zeros(h.m, dtype=bool)
    thresholds = np.zeros(h.m)
    for pid in order:
        if pid != 0 and not rejected[pid - 1]:
            continue
        members = np.array(groups[pid])
        idx = members - 1
        n = members.shape[0]
        local = CriticalFunctionSet(n, lambda r, n=n: np.full(n, r * q / n))
        out = generalized_stepupdown(pvals[idx], local, n)
        rejected[idx] = out.rejected
        thresholds[idx] = out.thresholds

    family_counts = tuple(int(rejected[members - 1].sum()) for members in h.families)
    thresholds.flags.writeable = False
    rejected.flags.writeable = False
    return RejectionResult(
        procedure=ProcedureKind.YEKUTIELI,
        alpha=alpha,
        pvalues=pvals,
        rejected=rejected,
        thresholds=thresholds,
        family_counts=family_counts,
    )


def run_procedure(
    p,
    h: Hierarchy,
    kind: ProcedureKind,
    alpha: float,
    order: int | None = None,
    yekutieli_correction: float = DEFAULT_YEKUTIELI_CORRECTION,
    functions: CriticalFunctionSet | None = None,
) -> RejectionResult:
    """Dispatch to the requested procedure."""
    if kind in HIERARCHICAL_KINDS:
        return run_hierarchical(p, h, kind, alpha, order=order, functions=functions)
    if kind is ProcedureKind.MEINSHAUSEN:
        return run_meinshausen(p, h, alpha)
    if kind is ProcedureKind.YEKUTIELI:
        return run_yekutieli(p, h, alpha, correction=yekutieli_correction)
    raise ValidationError(f"unknown procedure kind {kind!r}")
