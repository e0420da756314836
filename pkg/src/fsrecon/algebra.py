"""The command algebra: typed updates and their interaction laws.

A command is a triple (node, before, after).  It applies to a
filesystem whose value at the node equals `before`, rewrites it to
`after`, and breaks otherwise or when the rewrite would violate the
tree property.  Everything else in the package is built from the few
facts encoded here:

  * classification into constructors (content gains structure along
    empty -> file -> directory), destructors (the reverse), file edits,
    and nulls (before equals after);
  * inversion, which swaps before and after;
  * composition of two commands on the same node, which either fuses
    into one command or breaks every filesystem;
  * the execution-order relation between structural commands on a
    parent/child node pair: destructors run bottom-up, constructors
    top-down.  This single relation drives ordering, canonicity,
    clustering, and conflict propagation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .fstree import Content, Kind
from .namespace import NodeId, Relation, relate


@dataclass(frozen=True)
class Command:
    """One typed update: expects `before` at `node`, writes `after`."""

    node: NodeId
    before: Content
    after: Content

    def __str__(self) -> str:
        return f"{self.node}: {self.before} -> {self.after}"

    def sort_key(self) -> tuple:
        """Deterministic order: by node path, then content values."""
        return (self.node, self.before.sort_key(), self.after.sort_key())


class CommandClass(Enum):
    NULL = "null"
    CONSTRUCTOR = "constructor"
    DESTRUCTOR = "destructor"
    EDIT_FILE = "edit-file"


def classify(command: Command) -> CommandClass:
    """Classify by the content types involved.

    A command whose before and after are equal is null, including the
    directory-to-directory and empty-to-empty cases.  Two distinct file
    payloads make an edit.  Otherwise the type rank decides: rank going
    up is a constructor, rank going down a destructor.
    """
    if command.before == command.after:
        return CommandClass.NULL
    before, after = command.before, command.after
    if before.kind is Kind.FILE and after.kind is Kind.FILE:
        return CommandClass.EDIT_FILE
    return (
        CommandClass.CONSTRUCTOR
        if after.rank > before.rank
        else CommandClass.DESTRUCTOR
    )


def is_structural(command: Command) -> bool:
    """True for commands that change the content type."""
    return command.before.kind is not command.after.kind


def invert(command: Command) -> Command:
    return Command(command.node, command.after, command.before)


def invert_sequence(commands: Sequence[Command]) -> tuple[Command, ...]:
    """Inverse of a sequence: reverse order, invert each element."""
    return tuple(invert(c) for c in reversed(commands))


class BreaksEverything:
    """Sentinel for the composition that breaks every filesystem."""

    _instance: "BreaksEverything | None" = None

    def __new__(cls) -> "BreaksEverything":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BreaksEverything"


BREAKS_EVERYTHING = BreaksEverything()

Composition = Union[Command, BreaksEverything]


def compose_same_node(first: Command, second: Command) -> Composition:
    """Fuse two commands on one node, applied first-then-second.

    When the first command's output matches the second's expected
    input, the pair collapses to a single command; otherwise the pair
    breaks every filesystem, because nothing can change the node's
    value in between.
    """
    if first.node != second.node:
        raise ValueError(
            f"compose_same_node needs a shared node, got {first.node} and {second.node}"
        )
    if first.after != second.before:
        return BREAKS_EVERYTHING
    return Command(first.node, first.before, second.after)


def exec_order(first: Command, second: Command) -> bool:
    """The execution-order relation: must `first` run before `second`?

    True in exactly two shapes, both on a parent/child node pair:

      * child destroyed to empty, then its parent destroyed
        (node, dir|file -> empty)  before  (parent, dir -> file|empty)
      * parent made a directory, then a child created inside it
        (parent, empty|file -> dir)  before  (node, empty -> file|dir)

    Anything else, including pairs on unrelated or equal nodes and any
    pair involving a null or an edit, is unordered.
    """
    # Child-then-parent: both destructors.
    if first.node.parent_path() == second.node:
        return (
            first.before.kind in (Kind.DIRECTORY, Kind.FILE)
            and first.after.kind is Kind.EMPTY
            and second.before.kind is Kind.DIRECTORY
            and second.after.kind in (Kind.FILE, Kind.EMPTY)
        )
    # Parent-then-child: both constructors.
    if second.node.parent_path() == first.node:
        return (
            first.before.kind in (Kind.EMPTY, Kind.FILE)
            and first.after.kind is Kind.DIRECTORY
            and second.before.kind is Kind.EMPTY
            and second.after.kind in (Kind.FILE, Kind.DIRECTORY)
        )
    return False


def independent(first: Command, second: Command) -> bool:
    """True when the two nodes are neither equal nor ancestor-related."""
    return relate(first.node, second.node) is Relation.INDEPENDENT


def sorted_commands(commands: Iterable[Command]) -> tuple[Command, ...]:
    return tuple(sorted(commands, key=Command.sort_key))
