"""Node identifiers and the fixed namespace they live in.

A replica pair is always compared over one fixed, finite set of nodes.
Nodes are identified by absolute slash-separated paths; the ancestor
relation is path-prefix containment, so two nodes are either equal, one
above the other, or unrelated.  A Namespace is an ancestor-closed finite
set of such paths: whenever it contains a node it also contains every
ancestor, which makes the set a forest whose roots are the one-segment
paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import PathSyntaxError, UnknownNodeError, ValidationError

SEPARATOR = "/"


def _check_segment(segment: str) -> None:
    if not segment:
        raise PathSyntaxError("empty path segment")
    if SEPARATOR in segment:
        raise PathSyntaxError(f"separator inside segment: {segment!r}")
    if any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in segment):
        raise PathSyntaxError(f"control character in segment: {segment!r}")


@dataclass(frozen=True, order=True)
class NodeId:
    """An absolute path: a non-empty sequence of name segments.

    Ordering is lexicographic over the segment sequence, which gives the
    deterministic tie-break order used throughout the package.
    """

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise PathSyntaxError("a node id needs at least one segment")
        for segment in self.segments:
            _check_segment(segment)

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        """Parse "/a/b/c" (the leading separator is optional)."""
        if not isinstance(text, str) or not text.strip(SEPARATOR):
            raise PathSyntaxError(f"not a path: {text!r}")
        if text.endswith(SEPARATOR) and text != SEPARATOR:
            raise PathSyntaxError(f"trailing separator: {text!r}")
        return cls(tuple(text.lstrip(SEPARATOR).split(SEPARATOR)))

    def __str__(self) -> str:
        return SEPARATOR + SEPARATOR.join(self.segments)

    @property
    def depth(self) -> int:
        return len(self.segments)

    def parent_path(self) -> "NodeId | None":
        """The path one level up, or None for a one-segment path."""
        if len(self.segments) == 1:
            return None
        return NodeId(self.segments[:-1])

    def strict_ancestors(self) -> Iterator["NodeId"]:
        """All proper ancestors, nearest first."""
        for cut in range(len(self.segments) - 1, 0, -1):
            yield NodeId(self.segments[:cut])

    def is_above(self, other: "NodeId") -> bool:
        """True when self is a proper ancestor of other."""
        return (
            len(self.segments) < len(other.segments)
            and other.segments[: len(self.segments)] == self.segments
        )


class Relation(Enum):
    """How two nodes sit relative to each other in the path forest."""

    EQUAL = "equal"
    ABOVE = "above"
    BELOW = "below"
    INDEPENDENT = "independent"


def relate(a: NodeId, b: NodeId) -> Relation:
    if a == b:
        return Relation.EQUAL
    if a.is_above(b):
        return Relation.ABOVE
    if b.is_above(a):
        return Relation.BELOW
    return Relation.INDEPENDENT


def comparable(a: NodeId, b: NodeId) -> bool:
    """True when one node is the other, or an ancestor of the other."""
    return relate(a, b) is not Relation.INDEPENDENT


@dataclass(frozen=True)
class Namespace:
    """An ancestor-closed finite set of nodes.

    Closure is validated at construction: a node with two or more
    segments must have its parent in the set.  All traversal helpers
    (children, roots, iteration) use path-sorted order so every walk in
    the package is deterministic.
    """

    nodes: frozenset[NodeId]
    _sorted: tuple[NodeId, ...] = field(
        init=False, repr=False, compare=False, hash=False, default=()
    )
    _children: dict = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        for node in self.nodes:
            parent = node.parent_path()
            if parent is not None and parent not in self.nodes:
                raise ValidationError(
                    f"namespace not ancestor-closed: {node} present, {parent} missing"
                )
        ordered = tuple(sorted(self.nodes))
        children: dict[NodeId, list[NodeId]] = {node: [] for node in ordered}
        for node in ordered:
            parent = node.parent_path()
            if parent is not None:
                children[parent].append(node)
        object.__setattr__(self, "_sorted", ordered)
        object.__setattr__(
            self, "_children", {node: tuple(kids) for node, kids in children.items()}
        )

    def __contains__(self, node: NodeId) -> bool:
        return node in self.nodes

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self.nodes)

    def require(self, node: NodeId) -> None:
        if node not in self.nodes:
            raise UnknownNodeError(node)

    def parent(self, node: NodeId) -> NodeId | None:
        """The parent node, or None at a root."""
        self.require(node)
        return node.parent_path()

    def children(self, node: NodeId) -> tuple[NodeId, ...]:
        self.require(node)
        return self._children[node]

    def roots(self) -> tuple[NodeId, ...]:
        return tuple(node for node in self._sorted if node.depth == 1)

    def compare(self, a: NodeId, b: NodeId) -> Relation:
        self.require(a)
        self.require(b)
        return relate(a, b)


def build_namespace(paths: Iterable[NodeId | str]) -> Namespace:
    """Build the smallest namespace containing every given path.

    Strings are parsed; the set is closed upward so the result is always
    a valid forest.
    """
    closed: set[NodeId] = set()
    for item in paths:
        node = NodeId.parse(item) if isinstance(item, str) else item
        closed.add(node)
        closed.update(node.strict_ancestors())
    return Namespace(frozenset(closed))
