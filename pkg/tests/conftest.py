"""Shared fixtures: the deep-tree scenario used across the suite.

One replica deletes a five-deep directory chain outright; the other
replaces the deepest directory with a file and writes a new file next
to each chain level.  Every command of one side then conflicts with
commands of the other, which makes this the reference workload for
detection, merger enumeration, and resolution tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from fsrecon import (
    DIRECTORY,
    EMPTY,
    CanonicalSet,
    Command,
    FileSystem,
    Namespace,
    NodeId,
    build_namespace,
    file_content,
)

CHAIN = (
    "/work",
    "/work/src",
    "/work/src/app",
    "/work/src/app/core",
    "/work/src/app/core/util",
)

# One leaf beside each of the four upper chain levels.
LEAVES = (
    "/work/notes",
    "/work/src/readme",
    "/work/src/app/todo",
    "/work/src/app/core/log",
)

PAYLOADS = {
    "/work/src/app/core/util": b"util v2",
    "/work/notes": b"notes txt",
    "/work/src/readme": b"readme md",
    "/work/src/app/todo": b"todo list",
    "/work/src/app/core/log": b"log 001",
}


@dataclass(frozen=True)
class Scenario:
    ns: Namespace
    original: FileSystem
    replica1: FileSystem
    replica2: FileSystem
    deletions: CanonicalSet  # side A: the whole chain removed
    writes: CanonicalSet  # side B: files written everywhere
    delete_at: dict
    write_at: dict
    mergers: tuple[frozenset, ...]


def _node(path: str) -> NodeId:
    return NodeId.parse(path)


def build_scenario() -> Scenario:
    ns = build_namespace(CHAIN + LEAVES)
    original = FileSystem(ns, {_node(p): DIRECTORY for p in CHAIN})
    replica1 = FileSystem(ns, {})

    replica2_values = {_node(p): DIRECTORY for p in CHAIN[:-1]}
    for path, payload in PAYLOADS.items():
        replica2_values[_node(path)] = file_content(payload)
    replica2 = FileSystem(ns, replica2_values)

    delete_at = {
        path: Command(_node(path), DIRECTORY, EMPTY) for path in CHAIN
    }
    write_at = {
        CHAIN[-1]: Command(
            _node(CHAIN[-1]), DIRECTORY, file_content(PAYLOADS[CHAIN[-1]])
        )
    }
    for path in LEAVES:
        write_at[path] = Command(_node(path), EMPTY, file_content(PAYLOADS[path]))

    deletions = CanonicalSet(ns, frozenset(delete_at.values()))
    writes = CanonicalSet(ns, frozenset(write_at.values()))

    d = delete_at
    w = write_at
    notes, readme, todo, log = LEAVES
    # Every maximal way to combine the two sides, from all-second to
    # all-first: keeping a deletion at depth k forces dropping every
    # write at or below depth k, and keeping it re-creates nothing.
    mergers = (
        frozenset(w.values()),
        frozenset({d[CHAIN[4]], w[notes], w[readme], w[todo], w[log]}),
        frozenset({d[CHAIN[3]], d[CHAIN[4]], w[notes], w[readme], w[todo]}),
        frozenset({d[CHAIN[2]], d[CHAIN[3]], d[CHAIN[4]], w[notes], w[readme]}),
        frozenset({d[CHAIN[1]], d[CHAIN[2]], d[CHAIN[3]], d[CHAIN[4]], w[notes]}),
        frozenset(d.values()),
    )
    return Scenario(
        ns=ns,
        original=original,
        replica1=replica1,
        replica2=replica2,
        deletions=deletions,
        writes=writes,
        delete_at=delete_at,
        write_at=write_at,
        mergers=mergers,
    )


@pytest.fixture(scope="session")
def scenario() -> Scenario:
    return build_scenario()
