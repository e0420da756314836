"""Filesystem values over a namespace, and how commands act on them.

A filesystem assigns every node one of three contents: empty, directory,
or a file carrying an opaque byte payload.  There is exactly one empty
value and one directory value; files compare equal exactly when their
payloads do.  Every filesystem must satisfy the tree property: a
non-empty node's parent is a directory (roots have no parent and are
exempt).  Equivalently, walking down any branch one sees directories,
then at most one file, then only empty nodes.

Commands act in one of two ways: they either produce the next
filesystem, or they break.  Breaking is total: a broken application has
no partial result, so it is represented here as a value (Broken) rather
than an exception, and sequences propagate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, NamedTuple, Union

from .errors import EnumerationBoundError, UnknownNodeError
from .namespace import Namespace, NodeId

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .algebra import Command


class Kind(Enum):
    """Content type, ordered by how much structure it carries."""

    EMPTY = "empty"
    FILE = "file"
    DIRECTORY = "dir"


# Rank used for deterministic sorting and for the "more constructive"
# comparison between content types: empty < file < directory.
_KIND_RANK = {Kind.EMPTY: 0, Kind.FILE: 1, Kind.DIRECTORY: 2}


@dataclass(frozen=True)
class Content:
    """One node's content.  Payload is present exactly for files."""

    kind: Kind
    payload: bytes | None = None

    def __post_init__(self) -> None:
        if self.kind is Kind.FILE:
            if not isinstance(self.payload, bytes):
                raise ValueError("file content requires a bytes payload")
        elif self.payload is not None:
            raise ValueError(f"{self.kind.value} content carries no payload")

    @property
    def rank(self) -> int:
        return _KIND_RANK[self.kind]

    def sort_key(self) -> tuple[int, bytes]:
        return (self.rank, self.payload if self.payload is not None else b"")

    def __str__(self) -> str:
        return content_label(self)


EMPTY = Content(Kind.EMPTY)
DIRECTORY = Content(Kind.DIRECTORY)


def file_content(payload: bytes) -> Content:
    return Content(Kind.FILE, payload)


def _printable(payload: bytes) -> bool:
    return all(0x20 <= byte < 0x7F for byte in payload)


def content_label(content: Content) -> str:
    """Human-readable label: empty, dir, or file(<literal-or-digest>).

    Short printable payloads appear literally; anything else is shown by
    a truncated digest.  Display only: round-tripping goes through the
    JSON formats, never through this label.
    """
    if content.kind is Kind.EMPTY:
        return "empty"
    if content.kind is Kind.DIRECTORY:
        return "dir"
    payload = content.payload or b""
    if len(payload) <= 40 and _printable(payload):
        return f"file({payload.decode('ascii')})"
    import hashlib

    return f"file(sha256:{hashlib.sha256(payload).hexdigest()[:12]})"


@dataclass(frozen=True, eq=False)
class FileSystem:
    """An assignment of content to every node of a namespace.

    Only non-empty nodes are stored; lookup of any other namespace node
    yields EMPTY.  Instances are immutable; with_value returns an
    updated copy.  The constructor checks node membership but not the
    tree property, since intermediate states (e.g. while scanning a
    disk tree) are easier to build first and check once.
    """

    ns: Namespace
    entries: Mapping[NodeId, Content]

    def __post_init__(self) -> None:
        filtered: dict[NodeId, Content] = {}
        for node, content in self.entries.items():
            if node not in self.ns:
                raise UnknownNodeError(node)
            if content.kind is not Kind.EMPTY:
                filtered[node] = content
        object.__setattr__(self, "entries", filtered)

    def value(self, node: NodeId) -> Content:
        self.ns.require(node)
        return self.entries.get(node, EMPTY)

    def with_value(self, node: NodeId, content: Content) -> "FileSystem":
        self.ns.require(node)
        updated = dict(self.entries)
        if content.kind is Kind.EMPTY:
            updated.pop(node, None)
        else:
            updated[node] = content
        return FileSystem(self.ns, updated)

    def visible(self) -> tuple[tuple[NodeId, Content], ...]:
        """The non-empty nodes with their contents, path-sorted."""
        return tuple(sorted(self.entries.items(), key=lambda item: item[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FileSystem):
            return NotImplemented
        return self.ns == other.ns and dict(self.entries) == dict(other.entries)

    def __hash__(self) -> int:
        return hash((self.ns, frozenset(self.entries.items())))

    def __repr__(self) -> str:
        parts = ", ".join(f"{node}={content}" for node, content in self.visible())
        return f"FileSystem({parts or 'all empty'})"


def empty_filesystem(ns: Namespace) -> FileSystem:
    return FileSystem(ns, {})


class TreeCheck(NamedTuple):
    ok: bool
    violator: NodeId | None


def check_tree_property(fs: FileSystem) -> TreeCheck:
    """Verify that every non-empty node's parent is a directory.

    Returns the first violating node in path order, so error messages
    are stable.
    """
    for node in sorted(fs.entries):
        parent = node.parent_path()
        if parent is None:
            continue
        if fs.value(parent).kind is not Kind.DIRECTORY:
            return TreeCheck(False, node)
    return TreeCheck(True, None)


class BreakReason(Enum):
    PRECONDITION = "precondition"
    TREE_PROPERTY = "tree-property"


@dataclass(frozen=True)
class Broken:
    """The broken outcome: which command failed, where, and why."""

    command: "Command"
    index: int
    reason: BreakReason

    def describe(self) -> str:
        what = (
            "content did not match the command's expected input"
            if self.reason is BreakReason.PRECONDITION
            else "result would violate the tree property"
        )
        return f"command {self.index} ({self.command}) broke: {what}"


ApplyOutcome = Union[FileSystem, Broken]


def apply_command(fs: FileSystem, command: "Command") -> ApplyOutcome:
    """Apply one command: precondition check, update, tree check."""
    fs.ns.require(command.node)
    if fs.value(command.node) != command.before:
        return Broken(command, 0, BreakReason.PRECONDITION)
    updated = fs.with_value(command.node, command.after)
    # Only the written node and its children can newly violate the tree
    # property, so the check is local rather than a full rescan.
    node = command.node
    parent = node.parent_path()
    if updated.value(node).kind is not Kind.EMPTY:
        if parent is not None and updated.value(parent).kind is not Kind.DIRECTORY:
            return Broken(command, 0, BreakReason.TREE_PROPERTY)
    if updated.value(node).kind is not Kind.DIRECTORY:
        for child in fs.ns.children(node):
            if updated.value(child).kind is not Kind.EMPTY:
                return Broken(command, 0, BreakReason.TREE_PROPERTY)
    return updated


def apply_sequence(fs: FileSystem, commands: Iterable["Command"]) -> ApplyOutcome:
    """Apply commands left to right; the first break wins."""
    current = fs
    for index, command in enumerate(commands):
        outcome = apply_command(current, command)
        if isinstance(outcome, Broken):
            return Broken(command, index, outcome.reason)
        current = outcome
    return current


def count_filesystems(ns: Namespace, alphabet: Iterable[bytes]) -> int:
    """Upper-bound estimate used by the enumeration guard."""
    return (2 + len(set(alphabet))) ** len(ns)


def enumerate_filesystems(
    ns: Namespace, alphabet: Iterable[bytes], bound: int = 10**6
) -> Iterator[FileSystem]:
    """Yield every valid filesystem over ns with payloads from alphabet.

    Deterministic order: nodes are assigned in path order, each taking
    empty, then directory, then the payloads in sorted order, subject to
    the tree property.  Refuses up front when the (2+|alphabet|)^|ns|
    estimate exceeds the bound.
    """
    payloads = sorted(set(alphabet))
    estimate = count_filesystems(ns, payloads)
    if estimate > bound:
        raise EnumerationBoundError(estimate, bound)

    nodes = list(ns)  # path order: parents precede their children
    choices = [EMPTY, DIRECTORY] + [file_content(p) for p in payloads]

    def assign(index: int, acc: dict[NodeId, Content]) -> Iterator[FileSystem]:
        if index == len(nodes):
            yield FileSystem(ns, dict(acc))
            return
        node = nodes[index]
        parent = node.parent_path()
        under_directory = parent is None or acc.get(parent, EMPTY).kind is Kind.DIRECTORY
        for content in choices:
            if content.kind is not Kind.EMPTY and not under_directory:
                continue
            acc[node] = content
            yield from assign(index + 1, acc)
        del acc[node]

    yield from assign(0, {})
