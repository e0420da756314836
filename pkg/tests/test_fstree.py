from __future__ import annotations

import itertools

import pytest

from fsrecon import (
    DIRECTORY,
    EMPTY,
    Broken,
    BreakReason,
    Command,
    Content,
    EnumerationBoundError,
    FileSystem,
    Kind,
    NodeId,
    UnknownNodeError,
    apply_command,
    apply_sequence,
    build_namespace,
    check_tree_property,
    empty_filesystem,
    enumerate_filesystems,
    file_content,
)

from helpers import universe


def _n(path: str) -> NodeId:
    return NodeId.parse(path)


# ---------------------------------------------------------------------------
# Content values
# ---------------------------------------------------------------------------


def test_content_payload_discipline():
    with pytest.raises(ValueError):
        Content(Kind.FILE, None)
    with pytest.raises(ValueError):
        Content(Kind.DIRECTORY, b"x")
    assert file_content(b"x").payload == b"x"


def test_files_compare_by_payload():
    assert file_content(b"same") == file_content(b"same")
    assert file_content(b"one") != file_content(b"two")
    assert EMPTY != DIRECTORY


def test_content_labels():
    assert str(EMPTY) == "empty"
    assert str(DIRECTORY) == "dir"
    assert str(file_content(b"notes txt")) == "file(notes txt)"
    label = str(file_content(bytes(range(256))))
    assert label.startswith("file(sha256:") and label.endswith(")")


# ---------------------------------------------------------------------------
# Filesystems and the tree property
# ---------------------------------------------------------------------------


def test_lookup_defaults_to_empty(scenario):
    assert scenario.original.value(_n("/work/notes")) == EMPTY
    assert scenario.original.value(_n("/work")) == DIRECTORY
    with pytest.raises(UnknownNodeError):
        scenario.original.value(_n("/elsewhere"))


def test_with_value_is_functional(scenario):
    fs = scenario.original
    updated = fs.with_value(_n("/work/notes"), file_content(b"x"))
    assert fs.value(_n("/work/notes")) == EMPTY
    assert updated.value(_n("/work/notes")) == file_content(b"x")


def test_tree_property_accepts_the_scenario_states(scenario):
    for fs in (scenario.original, scenario.replica1, scenario.replica2):
        assert check_tree_property(fs).ok


def test_tree_property_rejects_content_under_a_file():
    ns = build_namespace(["/a/b"])
    fs = FileSystem(ns, {_n("/a"): file_content(b"f"), _n("/a/b"): DIRECTORY})
    check = check_tree_property(fs)
    assert not check.ok
    assert check.violator == _n("/a/b")


def test_tree_property_rejects_content_under_empty():
    ns = build_namespace(["/a/b"])
    fs = FileSystem(ns, {_n("/a/b"): file_content(b"f")})
    assert not check_tree_property(fs).ok


# ---------------------------------------------------------------------------
# Command application
# ---------------------------------------------------------------------------


def test_apply_replaces_matching_content(scenario):
    util = _n("/work/src/app/core/util")
    outcome = apply_command(
        scenario.original, Command(util, DIRECTORY, file_content(b"util v2"))
    )
    assert isinstance(outcome, FileSystem)
    assert outcome.value(util) == file_content(b"util v2")


def test_apply_breaks_on_precondition_mismatch(scenario):
    util = _n("/work/src/app/core/util")
    outcome = apply_command(scenario.original, Command(util, EMPTY, DIRECTORY))
    assert isinstance(outcome, Broken)
    assert outcome.reason is BreakReason.PRECONDITION


def test_apply_breaks_on_tree_violation(scenario):
    # Deleting the root directory while its children still hold content.
    outcome = apply_command(
        scenario.original, Command(_n("/work"), DIRECTORY, EMPTY)
    )
    assert isinstance(outcome, Broken)
    assert outcome.reason is BreakReason.TREE_PROPERTY


def test_apply_breaks_when_parent_cannot_host_content():
    ns = build_namespace(["/a/b"])
    outcome = apply_command(
        empty_filesystem(ns), Command(_n("/a/b"), EMPTY, file_content(b"f"))
    )
    assert isinstance(outcome, Broken)
    assert outcome.reason is BreakReason.TREE_PROPERTY


def test_sequences_apply_left_to_right(scenario):
    bottom_up = [scenario.delete_at[p] for p in reversed(sorted(scenario.delete_at))]
    outcome = apply_sequence(scenario.original, bottom_up)
    assert outcome == scenario.replica1


def test_sequence_reports_first_breaking_index(scenario):
    top_down = [scenario.delete_at[p] for p in sorted(scenario.delete_at)]
    outcome = apply_sequence(scenario.original, top_down)
    assert isinstance(outcome, Broken)
    assert outcome.index == 0
    assert outcome.reason is BreakReason.TREE_PROPERTY
    assert "tree property" in outcome.describe()


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def test_two_node_chain_has_three_states():
    ns = build_namespace(["/a/b"])
    states = list(enumerate_filesystems(ns, []))
    as_pairs = [
        (fs.value(_n("/a")).kind.value, fs.value(_n("/a/b")).kind.value)
        for fs in states
    ]
    assert as_pairs == [("empty", "empty"), ("dir", "empty"), ("dir", "dir")]


def test_single_node_with_one_payload_has_three_states():
    ns = build_namespace(["/a"])
    assert len(list(enumerate_filesystems(ns, [b"p"]))) == 3


def _naive_states(ns, alphabet):
    """Independent route: raw product of contents filtered by the rule."""
    nodes = sorted(ns)
    contents = [EMPTY, DIRECTORY] + [file_content(p) for p in sorted(alphabet)]
    states = []
    for combo in itertools.product(contents, repeat=len(nodes)):
        values = dict(zip(nodes, combo))
        ok = True
        for node, content in values.items():
            parent = node.parent_path()
            if content.kind is not Kind.EMPTY and parent is not None:
                if values[parent].kind is not Kind.DIRECTORY:
                    ok = False
                    break
        if ok:
            states.append(FileSystem(ns, values))
    return states


def test_enumeration_matches_naive_filter():
    ns = build_namespace(["/a/b/c", "/a/d"])
    fast = list(enumerate_filesystems(ns, [b"x"]))
    naive = _naive_states(ns, [b"x"])
    assert len(fast) == len(naive)
    assert set(fast) == set(naive)
    assert len(fast) == len(set(fast))


def test_enumeration_respects_the_bound(scenario):
    with pytest.raises(EnumerationBoundError) as err:
        list(enumerate_filesystems(scenario.ns, [b"1", b"2"], bound=100))
    assert err.value.estimate == 4**9


def test_universe_of_scenario_namespace_without_payloads(scenario):
    # With no payloads, valid states are exactly the ancestor-closed
    # directory sets of the namespace forest.
    states = universe(scenario.ns, [])
    for fs in states:
        assert check_tree_property(fs).ok
    assert len(states) == len(set(states))
    naive = _naive_states(scenario.ns, [])
    assert len(states) == len(naive)
