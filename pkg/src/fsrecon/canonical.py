"""Canonical command sequences and sets.

A sequence of commands is canonical when it is in a minimal, replayable
form: no null commands, at most one command per node, execution order
respected, and enough commands present to tie related nodes together.
The precise clauses (checked by is_canonical_sequence) are:

  no-null        no command is null;
  one-per-node   all commands touch distinct nodes;
  order          whenever the execution-order relation holds between
                 two members, they appear in that order;
  connected      any two members on ancestor-related nodes are joined
                 by a chain of execution-order steps inside the
                 sequence.  Chains climb a branch one parent/child hop
                 at a time, so this forces every node between the two
                 to carry a command, all oriented the same way.

Order among canonical commands is semantically irrelevant (any order
respecting the execution-order relation produces the same result), so
sets become the primary representation: CanonicalSet validates the
set-shaped clauses eagerly and invalid sets are unrepresentable
downstream.  normalize() compresses an arbitrary sequence into this
form, or reports that the sequence breaks every filesystem.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .algebra import (
    BREAKS_EVERYTHING,
    Command,
    CommandClass,
    classify,
    compose_same_node,
    exec_order,
    independent,
    sorted_commands,
)
from .errors import CanonicalityError, InternalInvariantError, UnknownNodeError
from .fstree import (
    DIRECTORY,
    Content,
    FileSystem,
    Kind,
    apply_sequence,
    check_tree_property,
)
from .namespace import Namespace, NodeId


# ---------------------------------------------------------------------------
# Clause checks shared by sequences and sets
# ---------------------------------------------------------------------------


def _connectivity_violation(by_node: Mapping[NodeId, Command]) -> str | None:
    """Check the `connected` clause over one command per node.

    For each ancestor-related pair, walk the branch between the two
    nodes: every intermediate node must hold a command, and the chain
    must be consistently oriented (all child-before-parent steps, or
    all parent-before-child steps).
    """
    nodes = sorted(by_node)
    for i, top in enumerate(nodes):
        for bottom in nodes[i + 1 :]:
            if not top.is_above(bottom):
                continue
            steps = [
                NodeId(bottom.segments[:cut])
                for cut in range(top.depth, bottom.depth + 1)
            ]
            chain: list[Command] = []
            missing = None
            for node in steps:
                command = by_node.get(node)
                if command is None:
                    missing = node
                    break
                chain.append(command)
            if missing is not None:
                return (
                    f"commands on {top} and {bottom} are related but "
                    f"{missing} carries no command to link them"
                )
            downward = all(
                exec_order(chain[k], chain[k + 1]) for k in range(len(chain) - 1)
            )
            upward = all(
                exec_order(chain[k + 1], chain[k]) for k in range(len(chain) - 1)
            )
            if not (downward or upward):
                return (
                    f"commands on {top} and {bottom} are related but no "
                    "execution-order chain links them"
                )
    return None


def set_violation(commands: Iterable[Command]) -> tuple[str, str] | None:
    """First violated set clause as (clause, detail), or None.

    This is the raw check behind CanonicalSet, exposed separately so
    bulk enumeration can test subsets without paying for exception
    control flow.
    """
    by_node: dict[NodeId, Command] = {}
    for command in commands:
        if classify(command) is CommandClass.NULL:
            return ("no-null", f"null command {command}")
        other = by_node.get(command.node)
        if other is not None and other != command:
            return ("one-per-node", f"two commands on {command.node}")
        by_node[command.node] = command
    detail = _connectivity_violation(by_node)
    if detail is not None:
        return ("connected", detail)
    return None


class SequenceCheck(NamedTuple):
    ok: bool
    violation: str | None


def is_canonical_sequence(commands: Sequence[Command]) -> SequenceCheck:
    """Verdict plus the first violated clause for a sequence."""
    seen: dict[NodeId, int] = {}
    for index, command in enumerate(commands):
        if classify(command) is CommandClass.NULL:
            return SequenceCheck(False, f"no-null: command {index} ({command}) is null")
        if command.node in seen:
            return SequenceCheck(
                False,
                f"one-per-node: commands {seen[command.node]} and {index} "
                f"both touch {command.node}",
            )
        seen[command.node] = index
    for i in range(len(commands)):
        for j in range(i + 1, len(commands)):
            if exec_order(commands[j], commands[i]):
                return SequenceCheck(
                    False,
                    f"order: command {j} ({commands[j]}) must run before "
                    f"command {i} ({commands[i]})",
                )
    detail = _connectivity_violation({c.node: c for c in commands})
    if detail is not None:
        return SequenceCheck(False, f"connected: {detail}")
    return SequenceCheck(True, None)


# ---------------------------------------------------------------------------
# Canonical sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalSet:
    """A validated canonical set of commands over a namespace.

    Construction fails with CanonicalityError (naming the violated
    clause) unless the commands satisfy no-null, one-per-node, and
    connected, and every node belongs to the namespace.
    """

    ns: Namespace
    commands: frozenset[Command]
    _by_node: dict = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "commands", frozenset(self.commands))
        for command in self.commands:
            if command.node not in self.ns:
                raise UnknownNodeError(command.node)
        violation = set_violation(self.commands)
        if violation is not None:
            raise CanonicalityError(*violation)
        object.__setattr__(
            self, "_by_node", {command.node: command for command in self.commands}
        )

    def __iter__(self) -> Iterator[Command]:
        return iter(sorted_commands(self.commands))

    def __len__(self) -> int:
        return len(self.commands)

    def __contains__(self, command: Command) -> bool:
        return command in self.commands

    def command_on(self, node: NodeId) -> Command | None:
        return self._by_node.get(node)

    def nodes(self) -> frozenset[NodeId]:
        return frozenset(self._by_node)

    def order(self) -> tuple[Command, ...]:
        return order(self)


def set_of(commands: Sequence[Command], ns: Namespace) -> CanonicalSet:
    """The set of a canonical sequence; rejects non-canonical input."""
    check = is_canonical_sequence(commands)
    if not check.ok:
        clause, _, detail = (check.violation or "").partition(": ")
        raise CanonicalityError(clause or "order", detail or str(check.violation))
    return CanonicalSet(ns, frozenset(commands))


def order(cset: CanonicalSet) -> tuple[Command, ...]:
    """A deterministic sequence of the set honoring execution order.

    Topological sort over the execution-order relation; among the
    currently runnable commands the smallest node path goes first.
    """
    members = list(cset.commands)
    successors: dict[Command, list[Command]] = {c: [] for c in members}
    indegree: dict[Command, int] = {c: 0 for c in members}
    for first in members:
        for second in members:
            if first is not second and exec_order(first, second):
                successors[first].append(second)
                indegree[second] += 1
    ready = [(c.node, c) for c in members if indegree[c] == 0]
    heapq.heapify(ready)
    out: list[Command] = []
    while ready:
        _, command = heapq.heappop(ready)
        out.append(command)
        for follower in successors[command]:
            indegree[follower] -= 1
            if indegree[follower] == 0:
                heapq.heappush(ready, (follower.node, follower))
    if len(out) != len(members):  # a cycle would mean exec_order is broken
        raise InternalInvariantError("execution-order relation contains a cycle")
    return tuple(out)


def is_prefix_set(part: Iterable[Command], whole: CanonicalSet) -> bool:
    """Can `part` run first?  True when nothing in it waits on the rest.

    `part` must be a subset of the whole.  When the answer is yes, both
    the part and the remainder are themselves canonical; that fact is
    asserted here because later stages rely on it.
    """
    sub = frozenset(part)
    if not sub <= whole.commands:
        raise ValueError("is_prefix_set: part is not a subset of the whole")
    for tau in sub:
        for sigma in whole.commands:
            if sigma not in sub and exec_order(sigma, tau):
                return False
    for piece in (sub, whole.commands - sub):
        if set_violation(piece) is not None:
            raise InternalInvariantError(
                "a runnable prefix or its remainder failed to be canonical"
            )
    return True


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NotNormalizable:
    """Returned when the input sequence breaks every filesystem."""

    reason: str


def _closest_same_node_pair(seq: list[Command]) -> tuple[int, int] | None:
    best: tuple[int, int] | None = None
    last_seen: dict[NodeId, int] = {}
    for j, command in enumerate(seq):
        i = last_seen.get(command.node)
        if i is not None and (best is None or j - i < best[1] - best[0]):
            best = (i, j)
        last_seen[command.node] = j
    return best


def normalize(commands: Sequence[Command]) -> tuple[Command, ...] | NotNormalizable:
    """Compress a sequence to an equivalent-or-better canonical one.

    Null commands are dropped; repeated visits to one node are slid
    together (swapping only across commands on unrelated nodes, which
    cannot change behavior) and fused into a single command.  The
    result acts like the input on every filesystem the input does not
    break.  NotNormalizable is returned exactly when the input breaks
    every filesystem: a fuse whose halves do not line up, a slide
    blocked on both ends, or a fused result that fails the canonical
    clauses all certify that no filesystem survives the input.
    """
    seq = [c for c in commands if classify(c) is not CommandClass.NULL]
    while True:
        pair = _closest_same_node_pair(seq)
        if pair is None:
            break
        i, j = pair
        while j - i > 1:
            if independent(seq[i], seq[i + 1]):
                seq[i], seq[i + 1] = seq[i + 1], seq[i]
                i += 1
            elif independent(seq[j - 1], seq[j]):
                seq[j - 1], seq[j] = seq[j], seq[j - 1]
                j -= 1
            else:
                return NotNormalizable(
                    f"commands on {seq[i].node} cannot be brought together: "
                    "both neighbors act on related nodes"
                )
        fused = compose_same_node(seq[i], seq[j])
        if fused is BREAKS_EVERYTHING:
            return NotNormalizable(
                f"successive commands on {seq[i].node} do not line up: "
                f"{seq[i]} then {seq[j]}"
            )
        assert isinstance(fused, Command)
        replacement = [] if classify(fused) is CommandClass.NULL else [fused]
        seq[i : j + 1] = replacement
    check = is_canonical_sequence(seq)
    if not check.ok:
        return NotNormalizable(f"result is not canonical ({check.violation})")
    return tuple(seq)


# ---------------------------------------------------------------------------
# Clusters
# ---------------------------------------------------------------------------


class ClusterKind(Enum):
    CONSTRUCTOR = "constructor"
    DESTRUCTOR = "destructor"
    EDITOR = "editor"


@dataclass(frozen=True)
class Cluster:
    """One execution-order component of a canonical set.

    Components are homogeneous: the ordering relation only ever links
    two constructors or two destructors, so a cluster is either all
    constructors, all destructors, or a single file edit.
    """

    kind: ClusterKind
    commands: tuple[Command, ...]

    @property
    def nodes(self) -> frozenset[NodeId]:
        return frozenset(c.node for c in self.commands)


_CLUSTER_KIND = {
    CommandClass.CONSTRUCTOR: ClusterKind.CONSTRUCTOR,
    CommandClass.DESTRUCTOR: ClusterKind.DESTRUCTOR,
    CommandClass.EDIT_FILE: ClusterKind.EDITOR,
}


def clusters(cset: CanonicalSet) -> tuple[Cluster, ...]:
    """The execution-order components, sorted by smallest member."""
    members = sorted_commands(cset.commands)
    index = {command: k for k, command in enumerate(members)}
    parent = list(range(len(members)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in members:
        for b in members:
            if a is not b and exec_order(a, b):
                ra, rb = find(index[a]), find(index[b])
                if ra != rb:
                    parent[rb] = ra

    groups: dict[int, list[Command]] = {}
    for command in members:
        groups.setdefault(find(index[command]), []).append(command)

    out: list[Cluster] = []
    for group in groups.values():
        kinds = {_CLUSTER_KIND[classify(c)] for c in group}
        if len(kinds) != 1:
            raise InternalInvariantError(f"mixed cluster: {group}")
        kind = kinds.pop()
        if kind is ClusterKind.EDITOR and len(group) != 1:
            raise InternalInvariantError("file edits never chain together")
        out.append(Cluster(kind, tuple(group)))
    out.sort(key=lambda cluster: cluster.commands[0].sort_key())
    return tuple(out)


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


def witness_from_befores(
    ns: Namespace, befores: Mapping[NodeId, Content]
) -> FileSystem:
    """A filesystem holding the given before-values.

    Mentioned nodes take their before-value; unmentioned ancestors of
    mentioned nodes become directories; everything else stays empty.
    """
    values: dict[NodeId, Content] = dict(befores)
    for node in befores:
        for ancestor in node.strict_ancestors():
            if ancestor not in befores:
                values[ancestor] = DIRECTORY
    values = {n: c for n, c in values.items() if c.kind is not Kind.EMPTY}
    return FileSystem(ns, values)


def witness_filesystem(cset: CanonicalSet) -> FileSystem:
    """A filesystem on which the whole canonical set runs successfully."""
    fs = witness_from_befores(
        cset.ns, {command.node: command.before for command in cset.commands}
    )
    check = check_tree_property(fs)
    if not check.ok:
        raise InternalInvariantError(
            f"witness construction violated the tree property at {check.violator}"
        )
    if not isinstance(apply_sequence(fs, order(cset)), FileSystem):
        raise InternalInvariantError("witness filesystem rejected its own commands")
    return fs
