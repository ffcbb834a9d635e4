"""Independent reference implementations and random-instance generators.

These are the oracles the package is checked against. They work from the
textbook order-statistic formulation (sort the p-values, scan the ordered
comparisons), deliberately avoiding the indicator-count machinery used by
the package itself.
"""

from __future__ import annotations

import numpy as np


def classic_stepupdown_count(p, crit, k: int) -> int:
    """Order-statistic evaluation of the classic stepup-down procedure.

    ``crit[r]`` is the shared threshold at r for r = 0..m+1 (crit[0] = 0).
    Uses P_(0) = 0 and P_(m+1) = inf.
    """
    p = np.asarray(p, dtype=float)
    m = p.shape[0]
    ps = np.concatenate([[0.0], np.sort(p), [np.inf]])
    if ps[k] > crit[k]:
        return max(r for r in range(k) if ps[r] <= crit[r])
    return min(r for r in range(k + 1, m + 2) if ps[r] > crit[r]) - 1


def classic_stepup_count(p, crit) -> int:
    return classic_stepupdown_count(p, crit, len(p))


def classic_stepdown_count(p, crit) -> int:
    return classic_stepupdown_count(p, crit, 1)


def classic_stepup_rejections(p, crit) -> np.ndarray:
    count = classic_stepup_count(p, crit)
    return np.asarray(p, dtype=float) <= crit[count]


def bh_rejections(p, alpha: float) -> np.ndarray:
    m = len(p)
    crit = [r * alpha / m for r in range(m + 2)]
    return classic_stepup_rejections(p, crit)


def by_rejections(p, alpha: float) -> np.ndarray:
    m = len(p)
    c = sum(1.0 / j for j in range(1, m + 1))
    crit = [r * alpha / (m * c) for r in range(m + 2)]
    return classic_stepup_rejections(p, crit)


def fixed_sequence_rejections(p, alpha: float) -> np.ndarray:
    """Sequential rule: reject node i while p_i <= m*alpha/(m-i+1)."""
    p = np.asarray(p, dtype=float)
    m = p.shape[0]
    out = np.zeros(m, dtype=bool)
    for i in range(1, m + 1):
        if p[i - 1] <= m * alpha / (m - i + 1):
            out[i - 1] = True
        else:
            break
    return out


def random_forest(rng: np.random.Generator, m: int, root_prob: float = 0.3) -> np.ndarray:
    """Random parent array over ids 1..m with arbitrary id ordering."""
    order = rng.permutation(m) + 1
    parent = np.zeros(m, dtype=np.int64)
    for t in range(1, m):
        node = order[t]
        if rng.random() >= root_prob:
            parent[node - 1] = order[int(rng.integers(0, t))]
    return parent


def random_instance(rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Random p-values plus a random monotone threshold matrix (m, m + 2).

    Some p-values are snapped exactly onto a threshold to exercise the
    closed comparison.
    """
    steps = rng.uniform(0, 2.0 / (m + 1), size=(m, m + 1))
    steps *= rng.random(size=(m, m + 1)) < 0.7
    matrix = np.concatenate([np.zeros((m, 1)), np.cumsum(steps, axis=1)], axis=1)
    p = rng.uniform(size=m)
    snap = rng.random(size=m) < 0.15
    if snap.any():
        cols = rng.integers(1, m + 2, size=int(snap.sum()))
        p[snap] = np.minimum(matrix[snap, cols], 1.0)
    return p, matrix


def enumerate_descendants(parent, i: int) -> set:
    """Ids in the subtree under i (including i), by repeated parent walks."""
    m = len(parent)
    out = set()
    for j in range(1, m + 1):
        node = j
        for _ in range(m + 1):
            if node == i:
                out.add(j)
                break
            node = parent[node - 1]
            if node == 0:
                break
    return out


def enumerate_ancestors(parent, i: int) -> list:
    """Ids on the path root -> i (including i)."""
    chain = []
    node = i
    while node != 0:
        chain.append(node)
        node = parent[node - 1]
    return chain[::-1]
