"""Critical-function families for hierarchical FDR control.

Each constructor returns a :class:`CriticalFunctionSet` over all m nodes of a
hierarchy, as a function of the global rejection count r (the hierarchical
driver adds the offset of rejections from shallower families before
evaluating). With l = total leaves, l_i and m_i the leaf count and size of
node i's subtree, d_i its depth, F_d the depth-d family, and G_d the union of
the first d families, the four procedure families are

    posdep     alpha_i(r) = (l_i a / l) (m_i + r - 1) / m_i
    arbdep     posdep divided by c_i = 1 + sum_{j=d_i}^{|G_{d_i}|-1} 1/(m_i + j)
    blockpos   non-leaf: l_i r a / (l + l_i (r - 1) a); leaf: r a / l
    blockarb   blockpos divided by c_i, where
               non-leaf: c_i = 1 + sum_{j=1}^{|F_{d_i}|-1}
                           (l - l_i a) / ((j + d_i)(l + l_i (j + d_i - 2) a))
               leaf:     c_i = 1 + sum_{j=1}^{|F_{d_i}|-1} 1/(j + d_i)

posdep requires positive dependence of the p-values, arbdep nothing,
blockpos positive dependence within depth families plus independence across
them, and blockarb only the across-family independence. Emitted thresholds
are clamped at 1, which never changes a decision since p-values cannot
exceed 1.
"""

from __future__ import annotations

import enum
import math
from typing import Callable

import numpy as np

from .errors import ValidationError
from .hierarchy import Hierarchy
from .stepwise import CriticalFunctionSet


class ProcedureKind(enum.Enum):
    """Selector over the implemented testing procedures."""

    POS_DEP = "posdep"
    ARB_DEP = "arbdep"
    BLOCK_POS = "blockpos"
    BLOCK_ARB = "blockarb"
    MEINSHAUSEN = "meinshausen"
    YEKUTIELI = "yekutieli"


# Procedures driven by the family-by-family generalized stepup.
HIERARCHICAL_KINDS = (
    ProcedureKind.POS_DEP,
    ProcedureKind.ARB_DEP,
    ProcedureKind.BLOCK_POS,
    ProcedureKind.BLOCK_ARB,
)

ALL_KINDS = tuple(ProcedureKind)

# Short historical aliases accepted on the CLI and the service.
_ALIASES = {
    "thm1": ProcedureKind.POS_DEP,
    "thm2": ProcedureKind.ARB_DEP,
    "thm3": ProcedureKind.BLOCK_POS,
    "thm4": ProcedureKind.BLOCK_ARB,
}


def parse_procedure(token: str) -> ProcedureKind:
    """Resolve a lowercase procedure token, accepting the thm1..thm4 aliases."""
    key = token.strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    for kind in ProcedureKind:
        if kind.value == key:
            return kind
    known = ", ".join([k.value for k in ProcedureKind] + sorted(_ALIASES))
    raise ValidationError(f"unknown procedure token {token!r} (known: {known})")


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha={alpha} must lie strictly between 0 and 1")
    return alpha


def posdep_functions(h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Thresholds for FDR control under positive dependence."""
    alpha = _check_alpha(alpha)
    leaves = h.subtree_leaves.astype(float)
    sizes = h.subtree_size.astype(float)
    scale = leaves * alpha / float(h.total_leaves)
    zeros = np.zeros(h.m)

    def evaluator(r: int) -> np.ndarray:
        if r == 0:
            return zeros
        return np.minimum(scale * (sizes + (r - 1.0)) / sizes, 1.0)

    return CriticalFunctionSet(h.m, evaluator)


def arbdep_constants(h: Hierarchy) -> np.ndarray:
    """Per-node normalizing constants c_i of the arbitrary-dependence family."""
    cumulative = h.cumulative_family_sizes
    out = np.empty(h.m)
    memo: dict[tuple[int, int], float] = {}
    for i in range(h.m):
        d = int(h.depth[i])
        mi = int(h.subtree_size[i])
        key = (d, mi)
        c = memo.get(key)
        if c is None:
            bound = int(cumulative[d - 1])
            c = 1.0 + math.fsum(1.0 / (mi + j) for j in range(d, bound))
            memo[key] = c
        out[i] = c
    return out


def arbdep_functions(h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Thresholds for FDR control under arbitrary dependence."""
    alpha = _check_alpha(alpha)
    leaves = h.subtree_leaves.astype(float)
    sizes = h.subtree_size.astype(float)
    scale = leaves * alpha / (float(h.total_leaves) * arbdep_constants(h))
    zeros = np.zeros(h.m)

    def evaluator(r: int) -> np.ndarray:
        if r == 0:
            return zeros
        return np.minimum(scale * (sizes + (r - 1.0)) / sizes, 1.0)

    return CriticalFunctionSet(h.m, evaluator)


def blockpos_functions(h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Thresholds for FDR control under block positive dependence."""
    alpha = _check_alpha(alpha)
    leaves = h.subtree_leaves.astype(float)
    is_leaf = h.subtree_size == 1
    ell = float(h.total_leaves)
    zeros = np.zeros(h.m)

    def evaluator(r: int) -> np.ndarray:
        if r == 0:
            return zeros
        vals = np.where(
            is_leaf,
            r * alpha / ell,
            leaves * r * alpha / (ell + leaves * (r - 1.0) * alpha),
        )
        return np.minimum(vals, 1.0)

    return CriticalFunctionSet(h.m, evaluator)


def blockarb_constants(h: Hierarchy, alpha: float) -> np.ndarray:
    """Per-node normalizing constants c_i of the block-arbitrary family.

    Leaf nodes use the partial-harmonic form over their own family only.
    For the seven-node binary-tree example this gives 1.6167 for the leaves,
    not the often-quoted 1.760 (that value is the arbitrary-dependence leaf
    constant, which sums over the cumulative G_d instead of F_d). The formula
    is implemented as stated for this family.
    """
    alpha = _check_alpha(alpha)
    ell = float(h.total_leaves)
    out = np.empty(h.m)
    memo: dict[tuple, float] = {}
    for i in range(h.m):
        d = int(h.depth[i])
        fam_size = int(h.families[d - 1].shape[0])
        if int(h.subtree_size[i]) == 1:
            key = ("leaf", d, fam_size)
            c = memo.get(key)
            if c is None:
                c = 1.0 + math.fsum(1.0 / (j + d) for j in range(1, fam_size))
                memo[key] = c
        else:
            li = float(h.subtree_leaves[i])
            key = ("node", d, fam_size, li)
            c = memo.get(key)
            if c is None:
                c = 1.0 + math.fsum(
                    (ell - li * alpha) / ((j + d) * (ell + li * (j + d - 2) * alpha))
                    for j in range(1, fam_size)
                )
                memo[key] = c
        out[i] = c
    return out


def blockarb_functions(h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Thresholds for FDR control under block arbitrary dependence."""
    alpha = _check_alpha(alpha)
    leaves = h.subtree_leaves.astype(float)
    is_leaf = h.subtree_size == 1
    ell = float(h.total_leaves)
    constants = blockarb_constants(h, alpha)
    zeros = np.zeros(h.m)

    def evaluator(r: int) -> np.ndarray:
        if r == 0:
            return zeros
        vals = np.where(
            is_leaf,
            r * alpha / ell,
            leaves * r * alpha / (ell + leaves * (r - 1.0) * alpha),
        )
        return np.minimum(vals / constants, 1.0)

    return CriticalFunctionSet(h.m, evaluator)


def meinshausen_functions(h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Fixed per-node thresholds l_i * alpha / l (constant in r for r >= 1)."""
    alpha = _check_alpha(alpha)
    thresholds = np.minimum(h.subtree_leaves * alpha / float(h.total_leaves), 1.0)
    zeros = np.zeros(h.m)

    def evaluator(r: int) -> np.ndarray:
        return zeros if r == 0 else thresholds

    return CriticalFunctionSet(h.m, evaluator)


def fixed_sequence_functions(m: int, alpha: float) -> CriticalFunctionSet:
    """Thresholds for pre-ordered testing: alpha_i(r) = 1{r >= i} m a/(m-r+1).

    Intended for the generalized stepdown procedure: hypothesis i only gets
    a positive threshold once at least i rejections are on the table, and the
    threshold grows as the untested tail shrinks.
    """
    if m < 1:
        raise ValidationError("fixed sequence needs at least one hypothesis")
    alpha = _check_alpha(alpha)
    positions = np.arange(1, m + 1)
    zeros = np.zeros(m)

    def evaluator(r: int) -> np.ndarray:
        if r == 0:
            return zeros
        level = 1.0 if r > m else min(m * alpha / (m - r + 1.0), 1.0)
        return np.where(positions <= r, level, 0.0)

    return CriticalFunctionSet(m, evaluator)


def weighted_functions(weights, base: Callable[[int], float]) -> CriticalFunctionSet:
    """Weighted thresholds alpha_i(r) = w_i * base(r) for positive weights.

    Equivalent to running the classic procedure with threshold ``base`` on
    the weight-adjusted p-values P_i / w_i.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValidationError("weights must be a one-dimensional, non-empty array")
    bad = np.flatnonzero(~(w > 0))
    if bad.size:
        raise ValidationError(f"weight {w[bad[0]]!r} at position {int(bad[0]) + 1} is not positive")

    def evaluator(r: int) -> np.ndarray:
        return w * float(base(r))

    return CriticalFunctionSet(w.shape[0], evaluator)


_CONSTRUCTORS = {
    ProcedureKind.POS_DEP: posdep_functions,
    ProcedureKind.ARB_DEP: arbdep_functions,
    ProcedureKind.BLOCK_POS: blockpos_functions,
    ProcedureKind.BLOCK_ARB: blockarb_functions,
    ProcedureKind.MEINSHAUSEN: meinshausen_functions,
}


def critical_functions_for(kind: ProcedureKind, h: Hierarchy, alpha: float) -> CriticalFunctionSet:
    """Critical functions of the given procedure over the whole hierarchy."""
    ctor = _CONSTRUCTORS.get(kind)
    if ctor is None:
        raise ValidationError(
            f"procedure {kind.value!r} has no per-node critical function table"
        )
    return ctor(h, alpha)
