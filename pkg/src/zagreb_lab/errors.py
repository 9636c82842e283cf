"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ZagrebLabError(Exception):
    """Base class for all library errors."""


class InvalidSizeError(ZagrebLabError, ValueError):
    """A tree size (or recurrence length) outside the admissible range."""


class InvalidOrderError(ZagrebLabError, ValueError):
    """Zagreb order ``k`` below 2 (or below 3 where the plane limit needs it)."""


class ContractError(ZagrebLabError, ValueError):
    """Arguments violate an operation's precondition."""


class NoSubtreeError(ZagrebLabError, ValueError):
    """The tree has no root subtree (single node)."""


class ResourceError(ZagrebLabError, RuntimeError):
    """A computation would exceed its configured resource limit."""

    def __init__(self, message: str, attempted: int | None = None):
        super().__init__(message)
        self.attempted = attempted
