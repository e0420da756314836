from __future__ import annotations

import io
import subprocess
import sys

import pytest

from fsrecon import (
    CanonicalSet,
    Command,
    DIRECTORY,
    NodeId,
    apply_sequence,
    file_content,
    order,
)
from fsrecon import snapshots
from fsrecon.cli import EXIT_ABORTED, EXIT_BROKEN, EXIT_INVALID, EXIT_OK, main

from helpers import write_scenario_snapshots


def _n(path: str) -> NodeId:
    return NodeId.parse(path)


def run_cli(*argv: str, stdin_text: str = "") -> tuple[int, str, str]:
    stdin = io.StringIO(stdin_text)
    stdout = io.StringIO()
    stderr = io.StringIO()
    code = main(list(argv), stdin=stdin, stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


@pytest.fixture()
def snaps(scenario, tmp_path):
    original, replica1, replica2 = write_scenario_snapshots(tmp_path, scenario)
    return {
        "original": str(original),
        "replica1": str(replica1),
        "replica2": str(replica2),
        "dir": tmp_path,
    }


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------


def test_scan_captures_a_directory_tree(tmp_path):
    tree = tmp_path / "tree"
    (tree / "docs").mkdir(parents=True)
    (tree / "docs" / "a.txt").write_bytes(b"alpha")
    (tree / "empty").mkdir()
    (tree / "top.bin").write_bytes(b"\x00\x01")
    out = tmp_path / "tree.snap"

    code, stdout, _ = run_cli("scan", str(tree), "--out", str(out))
    assert code == EXIT_OK
    assert "4 node(s)" in stdout

    fs = snapshots.read_snapshot(out)
    assert fs.value(_n("/docs")) == DIRECTORY
    assert fs.value(_n("/docs/a.txt")) == file_content(b"alpha")
    assert fs.value(_n("/empty")) == DIRECTORY
    assert fs.value(_n("/top.bin")) == file_content(b"\x00\x01")


def test_scan_refuses_symlinks(tmp_path):
    tree = tmp_path / "tree"
    tree.mkdir()
    (tree / "real.txt").write_bytes(b"x")
    (tree / "link").symlink_to(tree / "real.txt")
    code, _, stderr = run_cli("scan", str(tree), "--out", str(tmp_path / "t.snap"))
    assert code == EXIT_INVALID
    assert "symbolic link" in stderr


def test_scan_of_an_empty_directory(tmp_path):
    tree = tmp_path / "nothing"
    tree.mkdir()
    out = tmp_path / "empty.snap"
    assert run_cli("scan", str(tree), "--out", str(out))[0] == EXIT_OK
    assert len(snapshots.read_snapshot(out).ns) == 0


# ---------------------------------------------------------------------------
# diff and replay
# ---------------------------------------------------------------------------


def test_diff_prints_commands_in_execution_order(scenario, snaps):
    code, stdout, _ = run_cli("diff", snaps["original"], snaps["replica1"])
    assert code == EXIT_OK
    assert stdout.splitlines() == [str(c) for c in order(scenario.deletions)]


def test_diff_json_round_trips(scenario, snaps, tmp_path):
    out = tmp_path / "delta.json"
    code, _, _ = run_cli(
        "diff", snaps["original"], snaps["replica2"], "--format", "json",
        "--out", str(out),
    )
    assert code == EXIT_OK
    assert snapshots.read_commands(out) == order(scenario.writes)


def test_diff_unifies_scanned_namespaces(tmp_path):
    before, after = tmp_path / "before", tmp_path / "after"
    before.mkdir()
    after.mkdir()
    (before / "x.txt").write_bytes(b"x")
    (after / "y.txt").write_bytes(b"y")
    run_cli("scan", str(before), "--out", str(tmp_path / "b.snap"))
    run_cli("scan", str(after), "--out", str(tmp_path / "a.snap"))
    code, stdout, _ = run_cli("diff", str(tmp_path / "b.snap"), str(tmp_path / "a.snap"))
    assert code == EXIT_OK
    assert stdout.splitlines() == [
        "/x.txt: file(x) -> empty",
        "/y.txt: empty -> file(y)",
    ]


def test_diff_on_missing_files_fails_cleanly(tmp_path):
    code, _, stderr = run_cli(
        "diff", str(tmp_path / "no.snap"), str(tmp_path / "nope.snap")
    )
    assert code == EXIT_INVALID
    assert "error:" in stderr


def test_replay_summarizes_a_log(scenario, snaps, tmp_path):
    log = [
        Command(_n("/work/notes"), scenario.original.value(_n("/work/notes")), file_content(b"draft")),
        Command(_n("/work/notes"), file_content(b"draft"), file_content(b"final")),
        Command(_n("/work/extra"), scenario.original.value(_n("/work/notes")), file_content(b"tmp")),
        Command(_n("/work/extra"), file_content(b"tmp"), scenario.original.value(_n("/work/notes"))),
    ]
    log_file = tmp_path / "log.json"
    snapshots.write_commands(log, log_file, role="log")
    code, stdout, _ = run_cli("replay", snaps["original"], str(log_file))
    assert code == EXIT_OK
    assert stdout.splitlines() == ["/work/notes: empty -> file(final)"]


def test_replay_rejects_logs_that_do_not_apply(scenario, snaps, tmp_path):
    bogus = [Command(_n("/work/notes"), file_content(b"never"), DIRECTORY)]
    log_file = tmp_path / "log.json"
    snapshots.write_commands(bogus, log_file, role="log")
    code, _, stderr = run_cli("replay", snaps["original"], str(log_file))
    assert code == EXIT_INVALID
    assert "error:" in stderr


# ---------------------------------------------------------------------------
# mergers
# ---------------------------------------------------------------------------


def test_mergers_census_text(snaps):
    code, stdout, _ = run_cli(
        "mergers", snaps["original"], snaps["replica1"], snaps["replica2"]
    )
    assert code == EXIT_OK
    assert stdout.startswith("6 merger(s)\n")
    assert stdout.count("merger ") == 6


def test_mergers_census_json(scenario, snaps, tmp_path):
    out = tmp_path / "mergers.json"
    code, _, _ = run_cli(
        "mergers", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--format", "json", "--out", str(out),
    )
    assert code == EXIT_OK
    back = snapshots.read_mergers(out)
    assert {frozenset(m) for m in back} == set(scenario.mergers)


def test_mergers_respects_the_enumeration_bound(snaps):
    code, _, stderr = run_cli(
        "mergers", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--max-enum", "9",
    )
    assert code == EXIT_INVALID
    assert "error:" in stderr


# ---------------------------------------------------------------------------
# reconcile
# ---------------------------------------------------------------------------


def test_reconcile_first_wins(scenario, snaps):
    code, stdout, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "first-wins",
    )
    assert code == EXIT_OK
    assert stdout.splitlines() == [str(c) for c in order(scenario.deletions)]


def test_reconcile_constructor_wins(scenario, snaps):
    code, stdout, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "constructor-wins",
    )
    assert code == EXIT_OK
    assert stdout.splitlines() == [str(c) for c in order(scenario.writes)]


def test_reconcile_guided_hits_its_target(scenario, snaps, tmp_path):
    target_file = tmp_path / "target.json"
    target = scenario.mergers[2]
    snapshots.write_commands(sorted(target, key=Command.sort_key), target_file)
    out = tmp_path / "merged.json"
    code, _, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "guided", "--target", str(target_file),
        "--format", "json", "--out", str(out),
    )
    assert code == EXIT_OK
    assert frozenset(snapshots.read_commands(out)) == target


def test_reconcile_guided_needs_a_target(snaps):
    code, _, stderr = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "guided",
    )
    assert code == EXIT_INVALID
    assert "--target" in stderr


def test_reconcile_interactive_walkthrough(scenario, snaps, tmp_path):
    # conflicts are listed sorted by node pair; the indices below pick
    # the same three decisions as the known walkthrough
    out = tmp_path / "merged.json"
    code, stdout, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "interactive", "--format", "json", "--out", str(out),
        stdin_text="9 b\n5 a\n1 b\n",
    )
    assert code == EXIT_OK
    assert "15 unresolved conflict(s):" in stdout
    assert frozenset(snapshots.read_commands(out)) == scenario.mergers[2]


def test_reconcile_interactive_reprompts_on_garbage(scenario, snaps, tmp_path):
    out = tmp_path / "merged.json"
    code, stdout, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "interactive", "--format", "json", "--out", str(out),
        stdin_text="what\n99 a\n9 b\n5 a\n1 b\n",
    )
    assert code == EXIT_OK
    assert stdout.count("expected '<number> a'") == 2
    assert frozenset(snapshots.read_commands(out)) == scenario.mergers[2]


def test_reconcile_interactive_abort(snaps):
    code, _, stderr = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "interactive",
        stdin_text="q\n",
    )
    assert code == EXIT_ABORTED
    assert "aborted" in stderr


def test_reconcile_interactive_abort_on_eof(snaps):
    code, _, _ = run_cli(
        "reconcile", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "interactive",
        stdin_text="",
    )
    assert code == EXIT_ABORTED


# ---------------------------------------------------------------------------
# plan and apply
# ---------------------------------------------------------------------------


def _plan_via_cli(scenario, snaps, tmp_path, merger_index=2):
    target_file = tmp_path / "target.json"
    snapshots.write_commands(
        sorted(scenario.mergers[merger_index], key=Command.sort_key), target_file
    )
    plan_file = tmp_path / "plan.json"
    code, _, _ = run_cli(
        "plan", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "guided", "--target", str(target_file),
        "--out", str(plan_file),
    )
    assert code == EXIT_OK
    return plan_file


def test_plan_output_loads_and_is_stable(scenario, snaps, tmp_path):
    plan_file = _plan_via_cli(scenario, snaps, tmp_path)
    first = plan_file.read_bytes()
    doc = snapshots.read_plan(plan_file)
    assert frozenset(doc.merger) == scenario.mergers[2]
    plan_file_2 = _plan_via_cli(scenario, snaps, tmp_path)
    assert plan_file_2.read_bytes() == first


def test_plan_text_format_is_sectioned(scenario, snaps, tmp_path):
    code, stdout, _ = run_cli(
        "plan", snaps["original"], snaps["replica1"], snaps["replica2"],
        "--policy", "first-wins", "--format", "text",
    )
    assert code == EXIT_OK
    assert "merger (5 command(s)):" in stdout
    assert "replica1 rollback (0 command(s)):" in stdout
    assert "replica2 rollback (5 command(s)):" in stdout


def test_apply_lands_both_replicas_on_the_merged_state(scenario, snaps, tmp_path):
    plan_file = _plan_via_cli(scenario, snaps, tmp_path)
    merged_1 = tmp_path / "merged1.snap"
    merged_2 = tmp_path / "merged2.snap"

    code, stdout, _ = run_cli(
        "apply", str(plan_file), snaps["replica1"], "--side", "1",
        "--out", str(merged_1),
    )
    assert code == EXIT_OK and "applied" in stdout
    code, _, _ = run_cli(
        "apply", str(plan_file), snaps["replica2"], "--side", "2",
        "--out", str(merged_2),
    )
    assert code == EXIT_OK

    # identical output, byte for byte, from either starting replica
    assert merged_1.read_bytes() == merged_2.read_bytes()

    merger = frozenset(snapshots.read_plan(plan_file).merger)
    expected = apply_sequence(
        scenario.original, order(CanonicalSet(scenario.ns, merger))
    )
    assert snapshots.read_snapshot(merged_1) == expected


def test_apply_reports_a_broken_plan(scenario, snaps, tmp_path):
    plan_file = _plan_via_cli(scenario, snaps, tmp_path)
    # side 1 steps cannot run against replica 2
    code, stdout, _ = run_cli(
        "apply", str(plan_file), snaps["replica2"], "--side", "1"
    )
    assert code == EXIT_BROKEN
    assert "plan does not apply" in stdout


def test_apply_without_out_prints_the_result(scenario, snaps, tmp_path):
    plan_file = _plan_via_cli(scenario, snaps, tmp_path, merger_index=0)
    code, stdout, _ = run_cli(
        "apply", str(plan_file), snaps["replica2"], "--side", "2"
    )
    assert code == EXIT_OK
    assert "applied 0 command(s)" in stdout


# ---------------------------------------------------------------------------
# process-level behavior
# ---------------------------------------------------------------------------


def test_usage_errors_exit_with_code_two():
    proc = subprocess.run(
        [sys.executable, "-m", "fsrecon.cli"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2


def test_module_entry_point_runs_a_real_diff(scenario, tmp_path):
    original, replica1, _ = write_scenario_snapshots(tmp_path, scenario)
    proc = subprocess.run(
        [sys.executable, "-m", "fsrecon.cli", "diff", str(original), str(replica1)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == [str(c) for c in order(scenario.deletions)]
