"""Merging two diverged replicas of one filesystem.

Given the two canonical sets describing how each replica diverged from
a shared original, a merger is a maximal canonical subset of their
union: apply as much of both updates as can coexist, and nothing less.
Two commands from opposite sides conflict exactly when their nodes are
equal or ancestor-related; resolution repeatedly picks a conflict,
names a winner, and deletes from the losing side every command that
conflicts with the winner.  Each step can only shrink the losing side,
so the loop terminates, and the survivors always form a merger.

Conflicts come in two flavors.  A structural conflict changes the two
sides' content to different types; a content conflict produces the
same type with different values (two competing file payloads, say).
Content conflicts are always isolated edges of the graph, which is why
policies treat them specially.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence, Union

from .algebra import Command, invert_sequence, sorted_commands
from .canonical import (
    CanonicalSet,
    ClusterKind,
    clusters,
    order,
    set_violation,
    witness_from_befores,
)
from .errors import (
    EnumerationBoundError,
    InternalInvariantError,
    PolicyError,
    RefluenceError,
    ValidationError,
)
from .fstree import Content, FileSystem, apply_sequence, check_tree_property
from .namespace import Namespace, NodeId, comparable


class ConflictKind(Enum):
    STRUCTURAL = "structural"
    CONTENT = "content"


class Side(Enum):
    A = "a"
    B = "b"

    @property
    def other(self) -> "Side":
        return Side.B if self is Side.A else Side.A


@dataclass(frozen=True)
class Conflict:
    """One edge of the conflict graph: left from side A, right from B."""

    left: Command
    right: Command

    @property
    def kind(self) -> ConflictKind:
        # Rival results for one node, same shape: only the payloads
        # disagree, and payload judgment is beyond this layer.  Any
        # cross-node clash is structural, whatever the result shapes.
        return (
            ConflictKind.CONTENT
            if self.left.node == self.right.node
            and self.left.after.kind is self.right.after.kind
            else ConflictKind.STRUCTURAL
        )

    def winner(self, side: Side) -> Command:
        return self.left if side is Side.A else self.right

    def sort_key(self) -> tuple[NodeId, NodeId]:
        return (self.left.node, self.right.node)

    def __str__(self) -> str:
        return f"[{self.left}] vs [{self.right}]"


def _cross_conflicts(
    a_commands: Iterable[Command], b_commands: Iterable[Command]
) -> tuple[Conflict, ...]:
    found = [
        Conflict(ca, cb)
        for ca in a_commands
        for cb in b_commands
        if comparable(ca.node, cb.node)
    ]
    found.sort(key=Conflict.sort_key)
    return tuple(found)


@dataclass(frozen=True)
class ConflictGraph:
    """The bipartite conflict structure between two disjoint sides."""

    a_side: CanonicalSet
    b_side: CanonicalSet
    conflicts: tuple[Conflict, ...]

    def conflicts_for(self, command: Command) -> tuple[Conflict, ...]:
        return tuple(
            c for c in self.conflicts if command in (c.left, c.right)
        )

    def is_isolated(self, conflict: Conflict) -> bool:
        """True when neither endpoint appears in any other conflict."""
        for other in self.conflicts:
            if other == conflict:
                continue
            if conflict.left == other.left or conflict.right == other.right:
                return False
        return True


def build_conflict_graph(a: CanonicalSet, b: CanonicalSet) -> ConflictGraph:
    if a.ns != b.ns:
        raise ValidationError("conflict graph needs both sides in one namespace")
    if a.commands & b.commands:
        raise ValidationError(
            "conflict graph needs disjoint sides; shared commands must be "
            "factored out first"
        )
    return ConflictGraph(a, b, _cross_conflicts(a.commands, b.commands))


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FirstWins:
    """The first replica's command wins every conflict."""


@dataclass(frozen=True)
class SecondWins:
    """The second replica's command wins every conflict."""


_CONTENT_CHOICES = ("first", "second", "fail")


@dataclass(frozen=True)
class ConstructorWins:
    """Prefer the side that keeps more structure.

    Structural conflicts go to the command whose result type is higher
    on the empty < file < directory scale; in particular a constructor
    always beats a destructor, and the second replica takes exact ties.
    Content conflicts need payload-level judgment, so they are refused
    unless a content sub-policy says which side to take.
    """

    content_policy: str = "fail"

    def __post_init__(self) -> None:
        if self.content_policy not in _CONTENT_CHOICES:
            raise ValidationError(
                f"content policy must be one of {_CONTENT_CHOICES}, "
                f"got {self.content_policy!r}"
            )


@dataclass(frozen=True)
class Guided:
    """Steer resolution toward a known target merger."""

    target: frozenset[Command]

    def __init__(self, target: Iterable[Command] | CanonicalSet) -> None:
        commands = target.commands if isinstance(target, CanonicalSet) else target
        object.__setattr__(self, "target", frozenset(commands))


Chooser = Callable[[Sequence[Conflict]], tuple[Conflict, Side]]


@dataclass(frozen=True)
class Interactive:
    """Delegate each step to a callback.

    The callback receives every live conflict (content conflicts
    listed first, then by node order) and returns the conflict to
    resolve together with the winning side.
    """

    choose: Chooser


Policy = Union[FirstWins, SecondWins, ConstructorWins, Guided, Interactive]


@dataclass(frozen=True)
class StepOutcome:
    """What one resolution step did, for observers and the service."""

    conflict: Conflict
    winner: Side
    removed_a: tuple[Command, ...]
    removed_b: tuple[Command, ...]
    remaining_conflicts: int


OnStep = Callable[[StepOutcome], None]


def resolve_step(
    a_residue: frozenset[Command],
    b_residue: frozenset[Command],
    conflict: Conflict,
    winner: Side,
) -> tuple[frozenset[Command], frozenset[Command], tuple[Command, ...], tuple[Command, ...]]:
    """Apply one resolution: drop every loser-side command that
    conflicts with the winner.  Returns the new residues and what was
    removed from each side.

    This is the single primitive behind reconcile_disjoint and the
    session service, so the two cannot drift apart.
    """
    winning = conflict.winner(winner)
    loser_residue = b_residue if winner is Side.A else a_residue
    removed = frozenset(
        c for c in loser_residue if comparable(c.node, winning.node)
    )
    if not removed:
        raise InternalInvariantError(
            "a resolution step removed nothing; the conflict was not live"
        )
    if winner is Side.A:
        return a_residue, b_residue - removed, (), sorted_commands(removed)
    return a_residue - removed, b_residue, sorted_commands(removed), ()


def _interactive_order(conflicts: Sequence[Conflict]) -> tuple[Conflict, ...]:
    return tuple(
        sorted(
            conflicts,
            key=lambda c: (c.kind is not ConflictKind.CONTENT, c.sort_key()),
        )
    )


def _decide(
    policy: Policy, conflicts: tuple[Conflict, ...]
) -> tuple[Conflict, Side]:
    if isinstance(policy, FirstWins):
        return conflicts[0], Side.A
    if isinstance(policy, SecondWins):
        return conflicts[0], Side.B
    if isinstance(policy, ConstructorWins):
        chosen = conflicts[0]
        if chosen.kind is ConflictKind.STRUCTURAL:
            side = Side.A if chosen.left.after.rank > chosen.right.after.rank else Side.B
            return chosen, side
        if policy.content_policy == "first":
            return chosen, Side.A
        if policy.content_policy == "second":
            return chosen, Side.B
        raise PolicyError(
            f"content conflict needs payload-level judgment: {chosen}"
        )
    if isinstance(policy, Guided):
        for conflict in conflicts:
            if conflict.left in policy.target:
                return conflict, Side.A
            if conflict.right in policy.target:
                return conflict, Side.B
        # No live conflict touches the target: the stragglers cancel each
        # other out whatever we answer, so answer deterministically.
        return conflicts[0], Side.A
    if isinstance(policy, Interactive):
        chosen, side = policy.choose(_interactive_order(conflicts))
        if chosen not in conflicts:
            raise PolicyError(f"chosen conflict is not live: {chosen}")
        if not isinstance(side, Side):
            raise PolicyError(f"winner must be a Side, got {side!r}")
        return chosen, side
    raise ValidationError(f"unknown policy: {policy!r}")


def _resolve_loop(
    ns: Namespace,
    a_residue: frozenset[Command],
    b_residue: frozenset[Command],
    policy: Policy,
    on_step: OnStep | None,
) -> tuple[frozenset[Command], frozenset[Command]]:
    budget = len(a_residue) + len(b_residue) + 1
    conflicts = _cross_conflicts(a_residue, b_residue)
    for _ in range(budget):
        if not conflicts:
            return a_residue, b_residue
        conflict, winner = _decide(policy, conflicts)
        a_residue, b_residue, removed_a, removed_b = resolve_step(
            a_residue, b_residue, conflict, winner
        )
        conflicts = _cross_conflicts(a_residue, b_residue)
        if on_step is not None:
            on_step(
                StepOutcome(conflict, winner, removed_a, removed_b, len(conflicts))
            )
    raise InternalInvariantError("resolution failed to terminate within its budget")


def _guard_guided(policy: Policy, a: CanonicalSet, b: CanonicalSet) -> None:
    if isinstance(policy, Guided) and not is_merger(a, b, policy.target):
        raise ValidationError("Guided target is not a merger of the two sides")


def _narrow_guided(policy: Policy, shared: frozenset[Command]) -> Policy:
    if isinstance(policy, Guided):
        return Guided(policy.target - shared)
    return policy


def reconcile_disjoint(
    a: CanonicalSet,
    b: CanonicalSet,
    policy: Policy,
    on_step: OnStep | None = None,
) -> CanonicalSet:
    """Resolve two disjoint canonical sets down to one merger."""
    if a.ns != b.ns:
        raise ValidationError("reconcile needs both sides in one namespace")
    if a.commands & b.commands:
        raise ValidationError("reconcile_disjoint needs disjoint sides")
    _guard_guided(policy, a, b)
    final_a, final_b = _resolve_loop(a.ns, a.commands, b.commands, policy, on_step)
    try:
        return CanonicalSet(a.ns, final_a | final_b)
    except Exception as exc:  # the survivors are guaranteed canonical
        raise InternalInvariantError(f"resolution produced a non-merger: {exc}") from exc


def reconcile(
    a: CanonicalSet,
    b: CanonicalSet,
    policy: Policy,
    on_step: OnStep | None = None,
) -> CanonicalSet:
    """Resolve two possibly overlapping canonical sets to one merger.

    Commands taken identically on both sides can never conflict with
    anything either side did, so they are set aside first and restored
    unchanged; resolution runs on the disjoint remainders.
    """
    if a.ns != b.ns:
        raise ValidationError("reconcile needs both sides in one namespace")
    _guard_guided(policy, a, b)
    shared = a.commands & b.commands
    if isinstance(policy, Guided) and not shared <= policy.target:
        raise InternalInvariantError(
            "a merger target failed to contain the shared commands"
        )
    final_a, final_b = _resolve_loop(
        a.ns,
        a.commands - shared,
        b.commands - shared,
        _narrow_guided(policy, shared),
        on_step,
    )
    try:
        return CanonicalSet(a.ns, shared | final_a | final_b)
    except Exception as exc:
        raise InternalInvariantError(f"resolution produced a non-merger: {exc}") from exc


# ---------------------------------------------------------------------------
# Mergers: recognition and enumeration
# ---------------------------------------------------------------------------


def _as_commands(m: CanonicalSet | Iterable[Command]) -> frozenset[Command]:
    return m.commands if isinstance(m, CanonicalSet) else frozenset(m)


def is_merger(
    a: CanonicalSet, b: CanonicalSet, m: CanonicalSet | Iterable[Command]
) -> bool:
    """Is m a maximal canonical subset of the two sides' union?

    Maximality is tested by single-command extension: m is maximal
    when no one leftover command can be added while staying canonical.
    The test suite checks this against full powerset enumeration.
    """
    candidate = _as_commands(m)
    union = a.commands | b.commands
    if not candidate <= union:
        return False
    if set_violation(candidate) is not None:
        return False
    return all(
        set_violation(candidate | {extra}) is not None
        for extra in union - candidate
    )


def enumerate_mergers(
    a: CanonicalSet, b: CanonicalSet, bound: int = 20
) -> tuple[CanonicalSet, ...]:
    """All mergers of the two sides, deterministically ordered.

    Brute force with one shortcut: subsets are built by choosing at
    most one command per node, since two commands on a node can never
    be canonical together.  Refuses when the union has more commands
    than the bound.
    """
    if a.ns != b.ns:
        raise ValidationError("enumerate_mergers needs one namespace")
    union = a.commands | b.commands
    if len(union) > bound:
        raise EnumerationBoundError(2 ** len(union), 2**bound)

    per_node: dict[NodeId, list[Command]] = {}
    for command in sorted_commands(union):
        per_node.setdefault(command.node, []).append(command)
    node_choices = list(per_node.values())

    canonical_subsets: list[frozenset[Command]] = []

    def grow(index: int, acc: list[Command]) -> None:
        if index == len(node_choices):
            subset = frozenset(acc)
            if set_violation(subset) is None:
                canonical_subsets.append(subset)
            return
        grow(index + 1, acc)
        for command in node_choices[index]:
            acc.append(command)
            grow(index + 1, acc)
            acc.pop()

    grow(0, [])

    canonical_subsets.sort(key=len, reverse=True)
    maximal: list[frozenset[Command]] = []
    for subset in canonical_subsets:
        if not any(subset < bigger for bigger in maximal):
            maximal.append(subset)

    results = [CanonicalSet(a.ns, subset) for subset in maximal]
    results.sort(key=lambda cs: tuple(c.sort_key() for c in cs))
    return tuple(results)


# ---------------------------------------------------------------------------
# Refluence and plans
# ---------------------------------------------------------------------------


def refluence_witness(a: CanonicalSet, b: CanonicalSet) -> FileSystem:
    """A filesystem both sides act on, or proof there is none.

    Built from the combined before-values: shared nodes must expect
    the same content, ancestors of touched nodes become directories,
    and both sides must replay over the result.
    """
    if a.ns != b.ns:
        raise ValidationError("refluence check needs one namespace")
    befores: dict[NodeId, Content] = {}
    for command in list(a.commands) + list(b.commands):
        existing = befores.get(command.node)
        if existing is not None and existing != command.before:
            raise RefluenceError(
                f"the sides expect different content at {command.node}: "
                f"{existing} vs {command.before}"
            )
        befores[command.node] = command.before
    fs = witness_from_befores(a.ns, befores)
    check = check_tree_property(fs)
    if not check.ok:
        raise RefluenceError(
            f"no common filesystem: expected contents violate the tree "
            f"property at {check.violator}"
        )
    for side in (a, b):
        if not isinstance(apply_sequence(fs, order(side)), FileSystem):
            raise RefluenceError("no common filesystem: a side breaks the witness")
    return fs


@dataclass(frozen=True)
class ReplicaPlan:
    """What one replica must do: undo its losers, adopt the other side."""

    rollback: tuple[Command, ...]
    apply: tuple[Command, ...]

    def steps(self) -> tuple[Command, ...]:
        return self.rollback + self.apply


@dataclass(frozen=True)
class MergePlan:
    merger: CanonicalSet
    replica1: ReplicaPlan
    replica2: ReplicaPlan


def _subset_canonical(ns: Namespace, commands: frozenset[Command]) -> CanonicalSet:
    try:
        return CanonicalSet(ns, commands)
    except Exception as exc:
        raise InternalInvariantError(
            f"a merger residue failed to be canonical: {exc}"
        ) from exc


def merge_plan(
    a: CanonicalSet, b: CanonicalSet, m: CanonicalSet | Iterable[Command]
) -> MergePlan:
    """Executable plans taking each replica to the merged state.

    Replica one rolls back its commands outside the merger (inverted,
    in reverse execution order) and then applies the merger commands
    it lacks; replica two symmetrically.  Both plans are verified to
    land on the same merged filesystem before being returned.
    """
    if a.ns != b.ns:
        raise ValidationError("merge_plan needs one namespace")
    if not is_merger(a, b, m):
        raise ValidationError("merge_plan needs a merger of the two sides")
    merger_commands = _as_commands(m)
    ns = a.ns

    merger = _subset_canonical(ns, merger_commands)
    plans: list[ReplicaPlan] = []
    for mine in (a, b):
        undone = _subset_canonical(ns, mine.commands - merger_commands)
        adopted = _subset_canonical(ns, merger_commands - mine.commands)
        plans.append(ReplicaPlan(invert_sequence(order(undone)), order(adopted)))
    plan = MergePlan(merger, plans[0], plans[1])

    # Dry run on a witness filesystem: both plans must land on the
    # merged state the merger itself produces.
    start = refluence_witness(a, b)
    merged = apply_sequence(start, order(merger))
    if not isinstance(merged, FileSystem):
        raise InternalInvariantError("merger does not apply to the witness")
    for side, replica_plan in ((a, plan.replica1), (b, plan.replica2)):
        diverged = apply_sequence(start, order(side))
        if not isinstance(diverged, FileSystem):
            raise InternalInvariantError("side does not apply to the witness")
        landed = apply_sequence(diverged, replica_plan.steps())
        if landed != merged:
            raise InternalInvariantError(
                "a replica plan does not land on the merged state"
            )
    return plan


# ---------------------------------------------------------------------------
# Graph compression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterVertex:
    """A vertex of the collapsed graph: one command, or one whole
    constructor cluster standing in for all of its members."""

    rep: Command
    kind: ClusterKind
    commands: tuple[Command, ...]


@dataclass(frozen=True)
class CollapsedGraph:
    a_vertices: tuple[ClusterVertex, ...]
    b_vertices: tuple[ClusterVertex, ...]
    edges: tuple[tuple[Command, Command], ...]

    def expansion(self) -> dict[Command, tuple[Command, ...]]:
        return {
            vertex.rep: vertex.commands
            for vertex in self.a_vertices + self.b_vertices
        }


def _side_vertices(
    side: CanonicalSet, opposite: CanonicalSet
) -> tuple[ClusterVertex, ...]:
    vertices: list[ClusterVertex] = []
    for cluster in clusters(side):
        members = cluster.commands
        if cluster.kind is ClusterKind.CONSTRUCTOR and len(members) > 1:
            neighborhoods = {
                member: frozenset(
                    other
                    for other in opposite.commands
                    if comparable(member.node, other.node)
                )
                for member in members
            }
            distinct = set(neighborhoods.values())
            if len(distinct) != 1:
                raise InternalInvariantError(
                    "constructor cluster members disagree about their conflicts"
                )
            vertices.append(ClusterVertex(members[0], cluster.kind, members))
        else:
            for member in members:
                vertices.append(ClusterVertex(member, cluster.kind, (member,)))
    vertices.sort(key=lambda v: v.rep.sort_key())
    return tuple(vertices)


def collapse_constructor_clusters(graph: ConflictGraph) -> CollapsedGraph:
    """Shrink the conflict graph by merging constructor clusters.

    Members of one constructor cluster conflict with exactly the same
    opposite commands (checked here, not assumed), so the cluster can
    be resolved as a unit.  The expansion map recovers the members.
    """
    a_vertices = _side_vertices(graph.a_side, graph.b_side)
    b_vertices = _side_vertices(graph.b_side, graph.a_side)
    edges: list[tuple[Command, Command]] = []
    for av in a_vertices:
        for bv in b_vertices:
            if any(
                comparable(ca.node, cb.node)
                for ca in av.commands
                for cb in bv.commands
            ):
                edges.append((av.rep, bv.rep))
    edges.sort(key=lambda pair: (pair[0].sort_key(), pair[1].sort_key()))
    return CollapsedGraph(a_vertices, b_vertices, tuple(edges))
