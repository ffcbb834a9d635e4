"""Tree structure over tested hypotheses.

Hypotheses are identified by 1-based node ids. Each node has at most one
parent; parent id 0 means the node is a root. Forests (several roots) are
allowed. All derived statistics (depths, subtree sizes, leaf counts, and the
depth-indexed family partition) are computed once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Guard against accidentally huge trees (balanced-tree generation, file input).
MAX_NODES = 2_000_000


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Immutable forest over nodes 1..m with derived per-node statistics.

    Arrays are indexed by node id minus 1. ``children`` lists are sorted by
    node id so iteration order is deterministic.
    """

    parent: np.ndarray          # parent[i-1] in {0..m}, 0 = no parent
    children: tuple            # tuple of tuples of child ids
    depth: np.ndarray           # depth[i-1] >= 1, roots have depth 1
    subtree_size: np.ndarray    # number of nodes in the subtree rooted at i
    subtree_leaves: np.ndarray  # number of leaf nodes in the subtree at i
    families: tuple             # families[d-1] = sorted ndarray of ids at depth d
    cumulative_family_sizes: np.ndarray  # sizes of the union of families 1..d

    @property
    def m(self) -> int:
        """Number of hypotheses."""
        return int(self.parent.shape[0])

    @property
    def max_depth(self) -> int:
        return len(self.families)

    @property
    def total_leaves(self) -> int:
        return int(self.subtree_leaves[self.parent == 0].sum())

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent == 0) + 1

    def is_leaf(self, i: int) -> bool:
        self._check_id(i)
        return int(self.subtree_size[i - 1]) == 1

    def ancestors(self, i: int) -> list[int]:
        """Ids of the ancestors of node i, ordered root first, including i."""
        self._check_id(i)
        chain = []
        node = i
        while node != 0:
            chain.append(node)
            node = int(self.parent[node - 1])
        chain.reverse()
        return chain

    def subtree_stats(self, i: int) -> tuple[int, int, int, list[int]]:
        """Return (depth, subtree size, subtree leaf count, ancestor ids)."""
        self._check_id(i)
        return (
            int(self.depth[i - 1]),
            int(self.subtree_size[i - 1]),
            int(self.subtree_leaves[i - 1]),
            self.ancestors(i),
        )

    def family_partition(self) -> tuple[tuple, np.ndarray]:
        """The depth-indexed families and the cumulative family sizes."""
        return self.families, self.cumulative_family_sizes

    def _check_id(self, i: int) -> None:
        if not 1 <= i <= self.m:
            raise ValidationError(f"node id {i} out of range 1..{self.m}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return np.array_equal(self.parent, other.parent)

    def __repr__(self) -> str:
        return (
            f"Hierarchy(m={self.m}, roots={len(self.roots)}, "
            f"depth={self.max_depth}, leaves={self.total_leaves})"
        )


def build_hierarchy(parent) -> Hierarchy:
    """Build a :class:`Hierarchy` from a parent-pointer array.

    ``parent`` has one entry per node: ``parent[i-1]`` is the id of node i's
    parent, or 0 for roots. Raises :class:`ValidationError` naming the first
    offending node on self-parents, out-of-range ids, or cycles.
    """
    parent = np.asarray(parent, dtype=np.int64)
    if parent.ndim != 1 or parent.shape[0] < 1:
        raise ValidationError("parent array must be one-dimensional with at least one node")
    m = int(parent.shape[0])
    if m > MAX_NODES:
        raise ValidationError(f"tree has {m} nodes, exceeding the limit of {MAX_NODES}")

    ids = np.arange(1, m + 1, dtype=np.int64)
    bad = np.flatnonzero((parent < 0) | (parent > m))
    if bad.size:
        i = int(bad[0]) + 1
        raise ValidationError(f"node {i}: parent id {int(parent[i - 1])} out of range 0..{m}")
    selfref = np.flatnonzero(parent == ids)
    if selfref.size:
        raise ValidationError(f"node {int(selfref[0]) + 1} is its own parent")

    children_lists: list[list[int]] = [[] for _ in range(m)]
    for i in range(m):
        p = int(parent[i])
        if p != 0:
            children_lists[p - 1].append(i + 1)

    # BFS from the roots assigns depths; anything unreached sits on a cycle.
    depth = np.zeros(m, dtype=np.int64)
    queue = [i + 1 for i in range(m) if parent[i] == 0]
    for r in queue:
        depth[r - 1] = 1
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        for child in children_lists[node - 1]:
            depth[child - 1] = depth[node - 1] + 1
            queue.append(child)
    unreached = np.flatnonzero(depth == 0)
    if unreached.size:
        raise ValidationError(f"cycle detected: node {int(unreached[0]) + 1} never reaches a root")

    # Children of deeper nodes are finished first, so one pass in reverse
    # BFS order accumulates subtree sizes and leaf counts.
    subtree_size = np.ones(m, dtype=np.int64)
    subtree_leaves = np.zeros(m, dtype=np.int64)
    for node in reversed(queue):
        kids = children_lists[node - 1]
        if not kids:
            subtree_leaves[node - 1] = 1
        else:
            for child in kids:
                subtree_size[node - 1] += subtree_size[child - 1]
                subtree_leaves[node - 1] += subtree_leaves[child - 1]

    max_depth = int(depth.max())
    families = tuple(
        np.flatnonzero(depth == d) + 1 for d in range(1, max_depth + 1)
    )
    cumulative = np.cumsum([fam.shape[0] for fam in families])

    for arr in (parent, depth, subtree_size, subtree_leaves, cumulative, *families):
        arr.flags.writeable = False
    return Hierarchy(
        parent=parent,
        children=tuple(tuple(sorted(kids)) for kids in children_lists),
        depth=depth,
        subtree_size=subtree_size,
        subtree_leaves=subtree_leaves,
        families=families,
        cumulative_family_sizes=cumulative,
    )
