"""Degree profile and generalized Zagreb index of a concrete tree.

Degrees are total (graph) degrees: a non-root node has one extra edge to its
parent.  All index values are Python integers, so no order/size overflows.
"""

from __future__ import annotations

from .errors import InvalidOrderError
from .trees import RecursiveTree


def _check_order(k: int) -> None:
    if k < 2:
        raise InvalidOrderError(f"Zagreb order must be >= 2, got {k}")


def degree_profile(tree: RecursiveTree) -> list[int]:
    """``degrees[v - 1]`` is the degree of node ``v``."""
    counts = tree.child_counts()
    return [int(counts[v]) + (v != 1) for v in range(1, tree.n + 1)]


def root_degree(tree: RecursiveTree) -> int:
    return int(tree.child_counts()[1])


def zagreb_index(tree: RecursiveTree, k: int) -> int:
    """Sum of ``D_v ** k`` over all nodes."""
    _check_order(k)
    return sum(d**k for d in degree_profile(tree))


def zagreb_index_edge_form(tree: RecursiveTree, k: int) -> int:
    """Sum over edges ``uv`` of ``D_u^(k-1) + D_v^(k-1)``.

    Walks the parent array instead of the degree list so it is a genuinely
    separate traversal from :func:`zagreb_index`.
    """
    _check_order(k)
    counts = tree.child_counts()

    def deg(v: int) -> int:
        return int(counts[v]) + (v != 1)

    return sum(deg(u) ** (k - 1) + deg(v) ** (k - 1) for u, v in tree.edges())


def attachment_increment(parent_degree: int, k: int) -> int:
    """Change of the index when a leaf is attached to a node of degree ``parent_degree``."""
    return (parent_degree + 1) ** k - parent_degree**k + 1


class ZagrebAccumulator:
    """Incremental index for a tree grown one leaf at a time.

    >>> acc = ZagrebAccumulator(k=2)
    >>> acc.attach(1), acc.attach(1)
    (2, 3)
    >>> acc.value
    6
    """

    def __init__(self, k: int):
        _check_order(k)
        self.k = k
        self.degrees = [0, 0]  # index 0 unused; node 1 starts alone
        self.value = 0

    @property
    def n(self) -> int:
        return len(self.degrees) - 1

    def attach(self, parent: int) -> int:
        """Attach node ``n + 1`` below ``parent`` and return the new label."""
        d = self.degrees[parent]
        self.value += attachment_increment(d, self.k)
        self.degrees[parent] = d + 1
        self.degrees.append(1)
        return self.n

    @classmethod
    def from_tree(cls, tree: RecursiveTree, k: int) -> "ZagrebAccumulator":
        acc = cls(k)
        for p in tree.parents():
            acc.attach(p)
        return acc
