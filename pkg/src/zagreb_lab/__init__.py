"""Random recursive trees, their generalized Zagreb index, and its limit laws."""

from .errors import (
    ContractError,
    InvalidOrderError,
    InvalidSizeError,
    NoSubtreeError,
    ResourceError,
    ZagrebLabError,
)
from .trees import RecursiveTree, TreeModel, count_trees, gen_nonplane, gen_plane, generate, leftmost_subtree_size
from .zagreb import degree_profile, root_degree, zagreb_index, zagreb_index_edge_form

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "InvalidOrderError",
    "InvalidSizeError",
    "NoSubtreeError",
    "RecursiveTree",
    "ResourceError",
    "TreeModel",
    "ZagrebLabError",
    "count_trees",
    "degree_profile",
    "gen_nonplane",
    "gen_plane",
    "generate",
    "leftmost_subtree_size",
    "root_degree",
    "zagreb_index",
    "zagreb_index_edge_form",
]
