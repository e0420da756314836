"""Independent oracles used by the test suite.

Everything here is written straight from the definitions, not from the
package's implementations: semantic equivalence quantifies over every
valid filesystem in a small enumerated universe, and the merger oracle
walks the raw powerset.  Tests compare the fast implementations
against these.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

from fsrecon import (
    Broken,
    CanonicalSet,
    Command,
    FileSystem,
    Namespace,
    apply_command,
    apply_sequence,
    diff_states,
    enumerate_filesystems,
)
from fsrecon.canonical import set_violation
from fsrecon.fstree import DIRECTORY, EMPTY, Content, Kind, file_content


def universe(ns: Namespace, alphabet: Sequence[bytes]) -> list[FileSystem]:
    return list(enumerate_filesystems(ns, alphabet))


def all_commands(ns: Namespace, alphabet: Sequence[bytes]) -> list[Command]:
    """Every command over the namespace, nulls included."""
    contents: list[Content] = [EMPTY, DIRECTORY] + [file_content(p) for p in alphabet]
    return [
        Command(node, before, after)
        for node in ns
        for before in contents
        for after in contents
    ]


def outcome_key(outcome) -> tuple:
    """Collapse an application outcome for semantic comparison.

    All broken outcomes count as one value: semantically a sequence
    either produces a filesystem or breaks, nothing finer.
    """
    if isinstance(outcome, Broken):
        return ("broken",)
    return ("ok", outcome)


def equivalent_on(
    universe_fs: Iterable[FileSystem],
    first: Sequence[Command],
    second: Sequence[Command],
) -> bool:
    return all(
        outcome_key(apply_sequence(fs, first)) == outcome_key(apply_sequence(fs, second))
        for fs in universe_fs
    )


def extends_on(
    universe_fs: Iterable[FileSystem],
    smaller: Sequence[Command],
    larger: Sequence[Command],
) -> bool:
    """Does `larger` do whatever `smaller` does, wherever it works?"""
    for fs in universe_fs:
        outcome = apply_sequence(fs, smaller)
        if isinstance(outcome, Broken):
            continue
        if apply_sequence(fs, larger) != outcome:
            return False
    return True


def breaks_all(universe_fs: Iterable[FileSystem], seq: Sequence[Command]) -> bool:
    return all(isinstance(apply_sequence(fs, seq), Broken) for fs in universe_fs)


def succeeds_somewhere(
    universe_fs: Iterable[FileSystem], seq: Sequence[Command]
) -> bool:
    return any(isinstance(apply_sequence(fs, seq), FileSystem) for fs in universe_fs)


def semantically_canonical_set(
    universe_fs: list[FileSystem], commands: frozenset[Command]
) -> bool:
    """Definition-level canonicity for sets: no nulls, one command per
    node, and some ordering succeeds on some filesystem.  Exponential;
    for small sets only."""
    if any(c.before == c.after for c in commands):
        return False
    nodes = [c.node for c in commands]
    if len(set(nodes)) != len(nodes):
        return False
    if not commands:
        return True
    return any(
        succeeds_somewhere(universe_fs, perm)
        for perm in itertools.permutations(commands)
    )


def powerset_mergers(
    a: CanonicalSet, b: CanonicalSet
) -> set[frozenset[Command]]:
    """Merger oracle: every subset of the union, maximality by direct
    superset comparison among all canonical subsets."""
    union = sorted(a.commands | b.commands, key=Command.sort_key)
    canonical: list[frozenset[Command]] = []
    for r in range(len(union) + 1):
        for combo in itertools.combinations(union, r):
            subset = frozenset(combo)
            if set_violation(subset) is None:
                canonical.append(subset)
    return {
        m
        for m in canonical
        if not any(m < other for other in canonical)
    }


# ---------------------------------------------------------------------------
# Random instance generation for the oracle-equivalence runs
# ---------------------------------------------------------------------------


def random_namespace(rng: random.Random, max_nodes: int = 9) -> Namespace:
    """A random ancestor-closed namespace of at most max_nodes nodes."""
    from fsrecon import build_namespace

    names = ["a", "b", "c", "d"]
    paths: list[str] = []
    frontier = [""]
    target = rng.randint(2, max_nodes)
    while frontier and len(paths) < target:
        base = frontier.pop(rng.randrange(len(frontier)))
        name = rng.choice(names)
        path = f"{base}/{name}"
        if path in paths:
            continue
        paths.append(path)
        frontier.append(base)  # siblings allowed
        frontier.append(path)  # children allowed
    ns = build_namespace(paths)
    return ns


def random_filesystem(
    rng: random.Random, ns: Namespace, alphabet: Sequence[bytes]
) -> FileSystem:
    """A random valid filesystem built top down."""
    values = {}
    contents = [EMPTY, DIRECTORY] + [file_content(p) for p in alphabet]
    for node in ns:  # path order: parents first
        parent = node.parent_path()
        if parent is not None and values.get(parent, EMPTY).kind is not Kind.DIRECTORY:
            continue
        choice = rng.choice(contents)
        if choice.kind is not Kind.EMPTY:
            values[node] = choice
    return FileSystem(ns, values)


def random_edit_script(
    rng: random.Random,
    fs: FileSystem,
    alphabet: Sequence[bytes],
    max_edits: int = 8,
) -> tuple[list[Command], FileSystem]:
    """A random applicable command sequence starting at fs."""
    script: list[Command] = []
    current = fs
    contents = [EMPTY, DIRECTORY] + [file_content(p) for p in alphabet]
    for _ in range(rng.randint(0, max_edits)):
        for _attempt in range(20):
            node = rng.choice(list(current.ns))
            before = current.value(node)
            after = rng.choice(contents)
            if after == before:
                continue
            outcome = apply_command(current, Command(node, before, after))
            if isinstance(outcome, FileSystem):
                script.append(Command(node, before, after))
                current = outcome
                break
    return script, current


def random_replica_pair(
    rng: random.Random, alphabet: Sequence[bytes], max_nodes: int = 9
) -> tuple[FileSystem, CanonicalSet, CanonicalSet]:
    """A random original plus the two diverged sides' canonical sets."""
    ns = random_namespace(rng, max_nodes)
    original = random_filesystem(rng, ns, alphabet)
    _, replica1 = random_edit_script(rng, original, alphabet)
    _, replica2 = random_edit_script(rng, original, alphabet)
    return original, diff_states(original, replica1), diff_states(original, replica2)


def write_scenario_snapshots(directory, scenario) -> tuple:
    """Persist the fixture's three states as snapshot files."""
    from pathlib import Path

    from fsrecon import snapshots

    written = []
    for name, fs in (
        ("original.snap", scenario.original),
        ("replica1.snap", scenario.replica1),
        ("replica2.snap", scenario.replica2),
    ):
        path = Path(directory) / name
        snapshots.write_snapshot(fs, path)
        written.append(path)
    return tuple(written)
