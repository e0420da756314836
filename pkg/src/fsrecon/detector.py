"""Update detection: turn an observed change into a canonical set.

Two routes produce the same kind of answer.  diff_states compares two
filesystem states directly and emits one command per differing node.
replay_log folds an observed command log (which may revisit nodes and
contain nulls) down to its net effect.  Both return canonical sets, so
everything downstream (ordering, merging, conflict analysis) treats
the two routes identically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import BREAKS_EVERYTHING, Command, CommandClass, classify, compose_same_node
from .canonical import CanonicalSet
from .errors import InternalInvariantError, TreePropertyError, ValidationError
from .fstree import FileSystem, Kind, apply_sequence, check_tree_property
from .namespace import NodeId


@dataclass(frozen=True)
class UpdateLog:
    """An observed sequence of commands starting from a known state.

    Validated on construction: replaying the entries over the original
    filesystem must never break.  A log that breaks its own origin was
    recorded wrong and is rejected outright.
    """

    original: FileSystem
    entries: tuple[Command, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        outcome = apply_sequence(self.original, self.entries)
        if not isinstance(outcome, FileSystem):
            raise ValidationError(f"log does not replay over its original: {outcome.describe()}")

    def result(self) -> FileSystem:
        outcome = apply_sequence(self.original, self.entries)
        assert isinstance(outcome, FileSystem)
        return outcome


def diff_states(original: FileSystem, replica: FileSystem) -> CanonicalSet:
    """The canonical set turning `original` into `replica`.

    Both filesystems must live in the same namespace and satisfy the
    tree property.  The walk descends both trees at once and prunes
    any subtree empty on both sides, so the cost is linear in the
    visible (non-empty) regions rather than the namespace size.
    """
    if original.ns != replica.ns:
        raise ValidationError("diff_states: filesystems use different namespaces")
    for fs in (original, replica):
        check = check_tree_property(fs)
        if not check.ok:
            raise TreePropertyError(check.violator)

    ns = original.ns
    commands: list[Command] = []
    stack: list[NodeId] = list(reversed(ns.roots()))
    while stack:
        node = stack.pop()
        before = original.value(node)
        after = replica.value(node)
        if before.kind is Kind.EMPTY and after.kind is Kind.EMPTY:
            continue  # tree property: everything below is empty on both sides
        if before != after:
            commands.append(Command(node, before, after))
        stack.extend(reversed(ns.children(node)))
    return CanonicalSet(ns, frozenset(commands))


def replay_log(log: UpdateLog) -> CanonicalSet:
    """Fold a log to its net effect as a canonical set.

    Commands are merged node by node, left to right; visits to one node
    always line up (the log replays, so each command's input is the
    node's current value) and fuse into a single command.  Nodes whose
    net effect is null drop out.
    """
    net: dict[NodeId, Command] = {}
    for entry in log.entries:
        prior = net.get(entry.node)
        if prior is None:
            net[entry.node] = entry
            continue
        fused = compose_same_node(prior, entry)
        if fused is BREAKS_EVERYTHING:
            raise InternalInvariantError(
                f"validated log fails to fuse at {entry.node}"
            )
        assert isinstance(fused, Command)
        net[entry.node] = fused
    survivors = [c for c in net.values() if classify(c) is not CommandClass.NULL]
    return CanonicalSet(log.original.ns, frozenset(survivors))
