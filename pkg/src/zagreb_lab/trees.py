"""Random non-plane and plane recursive trees.

Trees are stored as a parent vector plus a CSR child adjacency.  Node labels
run from 1 to ``n``; index 0 of every array is padding so that ``parent[v]``
reads naturally.

Sampling draws one bounded integer per inserted node from a numpy
``Generator`` seeded through :class:`numpy.random.SeedSequence`:

* non-plane: node ``i`` picks its parent uniformly from ``1..i-1``;
* plane: node ``i`` picks one of the ``2i - 3`` free places ("gaps").  The
  gap table lists node ``v`` once per free place, i.e. ``children(v) + 1``
  times, so a single uniform index gives both the parent and the position
  among its siblings without any floating point weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import ContractError, InvalidSizeError, NoSubtreeError

SEED_MASK = (1 << 64) - 1


class TreeModel(enum.Enum):
    NONPLANE = "nonplane"
    PLANE = "plane"

    @classmethod
    def parse(cls, value: "TreeModel | str") -> "TreeModel":
        if isinstance(value, TreeModel):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown tree model {value!r} (use 'nonplane' or 'plane')")

    @property
    def is_plane(self) -> bool:
        return self is TreeModel.PLANE


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` (reduced mod 2^64) on the sub-stream ``key``."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.PCG64(ss))


def choice_bounds(model: TreeModel, n: int) -> np.ndarray:
    """Exclusive upper bounds of the attachment draws for nodes ``2..n``."""
    i = np.arange(2, n + 1, dtype=np.int64)
    return i - 1 if model is TreeModel.NONPLANE else 2 * i - 3


def draw_choices(rng: np.random.Generator, model: TreeModel, n: int, count: int | None = None) -> np.ndarray:
    """Attachment draws for one tree (``count=None``) or a ``count x (n-1)`` block.

    A block consumes the stream exactly like ``count`` consecutive single
    draws, which the simulation relies on for chunk-size independence.
    """
    highs = choice_bounds(model, n)
    if n == 1:
        shape = (0,) if count is None else (count, 0)
        return np.zeros(shape, dtype=np.int64)
    if count is None:
        return rng.integers(0, highs, dtype=np.int64)
    return rng.integers(0, highs, size=(count, n - 1), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RecursiveTree:
    """Immutable recursive tree of size ``n``.

    ``children(v)`` returns the children of ``v`` in left-to-right order.  For
    non-plane trees that order is the insertion (label) order and carries no
    meaning beyond convenience.
    """

    n: int
    model: TreeModel
    parent: np.ndarray
    offsets: np.ndarray = field(repr=False)
    flat: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.parent, self.offsets, self.flat):
            arr.setflags(write=False)

    @classmethod
    def from_growth(cls, model: TreeModel, parent: np.ndarray, pos: np.ndarray) -> "RecursiveTree":
        offsets, flat = _kernels.sibling_order(parent, pos)
        return cls(len(parent) - 1, model, parent, offsets, flat)

    @classmethod
    def from_parents(
        cls,
        parents: Sequence[int],
        model: TreeModel | str = TreeModel.NONPLANE,
        ranks: Sequence[int] | None = None,
    ) -> "RecursiveTree":
        """Build from ``parents[v-2] = parent(v)`` for ``v = 2..n``.

        ``ranks`` (1-based final sibling positions) fix the left-to-right order;
        without them children are ordered by label.
        """
        model = TreeModel.parse(model)
        n = len(parents) + 1
        parent = np.zeros(n + 1, dtype=np.int64)
        for v, p in enumerate(parents, start=2):
            if not 1 <= p < v:
                raise ContractError(f"parent({v}) = {p} violates 1 <= parent < label")
            parent[v] = p
        kids: list[list[int]] = [[] for _ in range(n + 1)]
        for v in range(2, n + 1):
            kids[parent[v]].append(v)
        if ranks is not None:
            if len(ranks) != n - 1:
                raise ContractError("ranks must have one entry per non-root node")
            rank = {v: r for v, r in enumerate(ranks, start=2)}
            for v in range(1, n + 1):
                kids[v].sort(key=rank.__getitem__)
                if [rank[c] for c in kids[v]] != list(range(1, len(kids[v]) + 1)):
                    raise ContractError(f"sibling ranks under node {v} are not 1..{len(kids[v])}")
        offsets = np.zeros(n + 2, dtype=np.int64)
        for v in range(1, n + 1):
            offsets[v + 1] = offsets[v] + len(kids[v])
        flat = np.array([c for v in range(1, n + 1) for c in kids[v]], dtype=np.int64)
        return cls(n, model, parent, offsets, flat)

    def children(self, v: int) -> np.ndarray:
        return self.flat[self.offsets[v] : self.offsets[v + 1]]

    def child_counts(self) -> np.ndarray:
        """``counts[v]`` = number of children of ``v`` (index 0 unused)."""
        return np.diff(self.offsets)

    def sibling_rank(self, v: int) -> int:
        """1-based position of ``v`` among its parent's children."""
        if v < 2:
            raise ContractError("the root has no sibling rank")
        kids = self.children(int(self.parent[v]))
        return int(np.nonzero(kids == v)[0][0]) + 1

    def parents(self) -> list[int]:
        return [int(p) for p in self.parent[2:]]

    def edges(self) -> Iterable[tuple[int, int]]:
        for v in range(2, self.n + 1):
            yield int(self.parent[v]), v

    def subtree_sizes(self) -> np.ndarray:
        return _kernels.subtree_sizes(self.parent)

    def shape_key(self) -> tuple:
        """Hashable identity: parents plus (for plane trees) sibling order."""
        if self.model is TreeModel.PLANE:
            return tuple(self.flat.tolist()) + tuple(self.offsets.tolist())
        return tuple(self.parent[2:].tolist())

    def check(self) -> None:
        """Raise :class:`ContractError` if any structural invariant fails."""
        if self.n >= 2 and not np.all(self.parent[2:] < np.arange(2, self.n + 1)):
            raise ContractError("parent[v] < v violated")
        if len(self.flat) != self.n - 1:
            raise ContractError("child count total differs from n - 1")
        for v in range(1, self.n + 1):
            if np.any(self.parent[self.children(v)] != v):
                raise ContractError(f"children of {v} disagree with the parent array")


def _check_size(n: int) -> None:
    if n < 1:
        raise InvalidSizeError(f"tree size must be >= 1, got {n}")


def grow_tree(model: TreeModel, choices: np.ndarray) -> RecursiveTree:
    parent, pos = _kernels.grow(np.ascontiguousarray(choices, dtype=np.int64), model.is_plane)
    return RecursiveTree.from_growth(model, parent, pos)


def gen_nonplane(n: int, seed: int) -> RecursiveTree:
    _check_size(n)
    model = TreeModel.NONPLANE
    return grow_tree(model, draw_choices(make_rng(seed), model, n))


def gen_plane(n: int, seed: int) -> RecursiveTree:
    _check_size(n)
    model = TreeModel.PLANE
    return grow_tree(model, draw_choices(make_rng(seed), model, n))


def generate(model: TreeModel | str, n: int, seed: int) -> RecursiveTree:
    model = TreeModel.parse(model)
    return gen_plane(n, seed) if model.is_plane else gen_nonplane(n, seed)


def count_trees(model: TreeModel | str, n: int) -> int:
    """Number of trees of size ``n``: ``(n-1)!`` or ``(2n-3)!!``."""
    model = TreeModel.parse(model)
    _check_size(n)
    if model is TreeModel.NONPLANE:
        return math.factorial(n - 1)
    return math.factorial(2 * n - 2) // (2 ** (n - 1) * math.factorial(n - 1))


def leftmost_subtree_size(tree: RecursiveTree, model: TreeModel | str | None = None) -> int:
    """Size of the root's first subtree.

    Plane trees use the left-to-right order; non-plane trees order root
    subtrees by the label of their roots, so the first one hangs at node 2.
    """
    model = tree.model if model is None else TreeModel.parse(model)
    if tree.n < 2:
        raise NoSubtreeError("a single-node tree has no root subtree")
    if model is TreeModel.PLANE:
        first = int(tree.children(1)[0])
    else:
        first = 2
    return int(tree.subtree_sizes()[first])


# Tree dump: "v<TAB>parent(v)<TAB>child-rank" for v = 2..n, rank 1-based.

def dump_tree(tree: RecursiveTree) -> str:
    lines = []
    for v in range(2, tree.n + 1):
        lines.append(f"{v}\t{int(tree.parent[v])}\t{tree.sibling_rank(v)}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_tree(text: str, model: TreeModel | str = TreeModel.NONPLANE) -> RecursiveTree:
    parents: list[int] = []
    ranks: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 3:
            raise ContractError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        v, p, r = (int(x) for x in parts)
        if v != len(parents) + 2:
            raise ContractError(f"line {lineno}: node {v} out of order")
        parents.append(p)
        ranks.append(r)
    return RecursiveTree.from_parents(parents, model, ranks)
