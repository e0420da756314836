"""Command-line front end.

Exit codes: 0 on success, 2 for validation or format problems (argparse
uses the same code for usage errors), 3 when an interactive session is
abandoned, 4 when applying a plan breaks on the given snapshot.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import IO, Sequence

from .algebra import Command
from .canonical import CanonicalSet, order
from .detector import UpdateLog, diff_states, replay_log
from .errors import FsreconError, ValidationError
from .fstree import (
    Broken,
    Content,
    DIRECTORY,
    FileSystem,
    apply_sequence,
    file_content,
)
from .namespace import NodeId, build_namespace
from .reconciler import (
    ConstructorWins,
    FirstWins,
    Guided,
    Interactive,
    SecondWins,
    Side,
    enumerate_mergers,
    merge_plan,
    reconcile,
)
from . import snapshots

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORTED = 3
EXIT_BROKEN = 4

POLICY_NAMES = (
    "first-wins",
    "second-wins",
    "constructor-wins",
    "guided",
    "interactive",
)


class _Abort(Exception):
    """The interactive user gave up."""


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _emit(text: str, out_path: str | None, stdout: IO[str]) -> None:
    if out_path is None:
        stdout.write(text)
        if text and not text.endswith("\n"):
            stdout.write("\n")
    else:
        snapshots.atomic_write_text(out_path, text)


def _command_lines(commands: Sequence[Command]) -> str:
    return "".join(str(c) + "\n" for c in commands)


def _load_pair(original: str, replica: str) -> tuple[FileSystem, FileSystem]:
    return snapshots.unify_namespaces(
        snapshots.read_snapshot(original), snapshots.read_snapshot(replica)
    )


def _load_triple(args) -> tuple[FileSystem, CanonicalSet, CanonicalSet]:
    base, first, second = snapshots.unify_namespaces(
        snapshots.read_snapshot(args.original),
        snapshots.read_snapshot(args.replica1),
        snapshots.read_snapshot(args.replica2),
    )
    return base, diff_states(base, first), diff_states(base, second)


def _widen(fs: FileSystem, commands: Sequence[Command]) -> FileSystem:
    """Extend the snapshot's namespace with every node a command names."""
    paths = [str(node) for node in fs.ns]
    paths.extend(str(c.node) for c in commands)
    return FileSystem(build_namespace(paths), dict(fs.entries))


def _stdio_chooser(stdin: IO[str], stdout: IO[str]):
    def choose(conflicts):
        stdout.write(f"{len(conflicts)} unresolved conflict(s):\n")
        for number, conflict in enumerate(conflicts, start=1):
            stdout.write(
                f"  {number}. [{conflict.kind.value}] {conflict.left}  vs  "
                f"{conflict.right}\n"
            )
        while True:
            stdout.write("resolve> ")
            stdout.flush()
            line = stdin.readline()
            if not line or line.strip().lower() in {"q", "quit"}:
                raise _Abort
            parts = line.split()
            if (
                len(parts) == 2
                and parts[0].isdigit()
                and parts[1].lower() in {"a", "b"}
            ):
                index = int(parts[0]) - 1
                if 0 <= index < len(conflicts):
                    winner = Side.A if parts[1].lower() == "a" else Side.B
                    return conflicts[index], winner
            stdout.write("  expected '<number> a' or '<number> b', or q to stop\n")

    return choose


def _build_policy(args, stdin: IO[str], stdout: IO[str]):
    if args.policy == "first-wins":
        return FirstWins()
    if args.policy == "second-wins":
        return SecondWins()
    if args.policy == "constructor-wins":
        return ConstructorWins(content_policy=args.content_policy)
    if args.policy == "guided":
        if not args.target:
            raise ValidationError("--policy guided needs --target FILE")
        return Guided(frozenset(snapshots.read_commands(args.target)))
    return Interactive(_stdio_chooser(stdin, stdout))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_scan(args, stdin, stdout) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        raise ValidationError(f"{root} is not a directory")
    values: dict[NodeId, Content] = {}
    paths: list[str] = []

    def walk(directory: Path, prefix: str) -> None:
        with os.scandir(directory) as entries:
            listed = sorted(entries, key=lambda e: e.name)
        for entry in listed:
            if entry.is_symlink():
                raise ValidationError(f"symbolic link not supported: {entry.path}")
            path = f"{prefix}/{entry.name}"
            node = NodeId.parse(path)
            paths.append(path)
            if entry.is_dir(follow_symlinks=False):
                values[node] = DIRECTORY
                walk(Path(entry.path), path)
            elif entry.is_file(follow_symlinks=False):
                values[node] = file_content(Path(entry.path).read_bytes())
            else:
                raise ValidationError(f"unsupported entry type: {entry.path}")

    walk(root, "")
    fs = FileSystem(build_namespace(paths), values)
    snapshots.write_snapshot(fs, args.out)
    stdout.write(f"captured {len(paths)} node(s) into {args.out}\n")
    return EXIT_OK


def _cmd_diff(args, stdin, stdout) -> int:
    original, replica = _load_pair(args.original, args.replica)
    delta = diff_states(original, replica)
    sequence = order(delta)
    if args.format == "json":
        _emit(snapshots.commands_to_text(sequence, role="diff"), args.out, stdout)
    else:
        _emit(_command_lines(sequence), args.out, stdout)
    return EXIT_OK


def _cmd_replay(args, stdin, stdout) -> int:
    original = snapshots.read_snapshot(args.snapshot)
    entries = snapshots.read_commands(args.log)
    original = _widen(original, entries)
    summary = replay_log(UpdateLog(original, entries))
    sequence = order(summary)
    if args.format == "json":
        _emit(snapshots.commands_to_text(sequence, role="replay"), args.out, stdout)
    else:
        _emit(_command_lines(sequence), args.out, stdout)
    return EXIT_OK


def _cmd_mergers(args, stdin, stdout) -> int:
    _, first, second = _load_triple(args)
    found = enumerate_mergers(first, second, bound=args.max_enum)
    if args.format == "json":
        _emit(snapshots.mergers_to_text(found), args.out, stdout)
        return EXIT_OK
    lines = [f"{len(found)} merger(s)\n"]
    for index, merger in enumerate(found):
        lines.append(f"merger {index} ({len(merger)} command(s)):\n")
        lines.extend(f"  {command}\n" for command in merger)
    _emit("".join(lines), args.out, stdout)
    return EXIT_OK


def _cmd_reconcile(args, stdin, stdout) -> int:
    _, first, second = _load_triple(args)
    policy = _build_policy(args, stdin, stdout)
    merged = reconcile(first, second, policy)
    sequence = order(merged)
    if args.format == "json":
        _emit(
            snapshots.commands_to_text(sequence, role="reconciled"),
            args.out,
            stdout,
        )
    else:
        _emit(_command_lines(sequence), args.out, stdout)
    return EXIT_OK


def _cmd_plan(args, stdin, stdout) -> int:
    _, first, second = _load_triple(args)
    policy = _build_policy(args, stdin, stdout)
    merged = reconcile(first, second, policy)
    plan = merge_plan(first, second, merged)
    if args.format == "text":
        doc = snapshots.plan_to_text(plan)
        parsed = snapshots.plan_from_text(doc)
        lines = []
        for title, section in (
            ("merger", parsed.merger),
            ("replica1 rollback", parsed.replica1_rollback),
            ("replica1 apply", parsed.replica1_apply),
            ("replica2 rollback", parsed.replica2_rollback),
            ("replica2 apply", parsed.replica2_apply),
        ):
            lines.append(f"{title} ({len(section)} command(s)):\n")
            lines.extend(f"  {command}\n" for command in section)
        _emit("".join(lines), args.out, stdout)
    else:
        _emit(snapshots.plan_to_text(plan), args.out, stdout)
    return EXIT_OK


def _cmd_apply(args, stdin, stdout) -> int:
    doc = snapshots.read_plan(args.plan)
    fs = snapshots.read_snapshot(args.snapshot)
    steps = doc.steps(args.side)
    fs = _widen(fs, list(steps) + list(doc.merger))
    outcome = apply_sequence(fs, steps)
    if isinstance(outcome, Broken):
        stdout.write(f"plan does not apply: {outcome.describe()}\n")
        return EXIT_BROKEN
    if args.out:
        snapshots.write_snapshot(outcome, args.out)
        stdout.write(f"applied {len(steps)} command(s); wrote {args.out}\n")
    else:
        stdout.write(f"applied {len(steps)} command(s)\n")
        for node, content in outcome.visible():
            stdout.write(f"  {node} = {content}\n")
    return EXIT_OK


def _cmd_serve(args, stdin, stdout) -> int:
    import uvicorn

    from .service import create_app

    if args.ui is not None and not Path(args.ui).is_dir():
        raise ValidationError(f"--ui directory not found: {args.ui}")
    app = create_app(Path(args.sessions), static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=("text", "json"),
        default="text",
        help="text for human-readable lines, json for a machine document",
    )
    parser.add_argument("--out", help="write output to this file atomically")


def _add_policy(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--policy",
        choices=POLICY_NAMES,
        default="first-wins",
        help="conflict resolution policy",
    )
    parser.add_argument(
        "--content-policy",
        choices=("first", "second", "fail"),
        default="fail",
        help="tie-break for rival file contents under constructor-wins",
    )
    parser.add_argument(
        "--target",
        help="commands file naming the merger to steer toward (guided policy)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsrecon",
        description="Reconcile diverged filesystem replicas.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    scan = subparsers.add_parser("scan", help="capture a directory tree")
    scan.add_argument("directory")
    scan.add_argument("--out", required=True, help="snapshot file to write")
    scan.set_defaults(handler=_cmd_scan)

    diff = subparsers.add_parser("diff", help="commands separating two snapshots")
    diff.add_argument("original")
    diff.add_argument("replica")
    _add_format(diff)
    diff.set_defaults(handler=_cmd_diff)

    replay = subparsers.add_parser(
        "replay", help="summarize an update log into canonical commands"
    )
    replay.add_argument("snapshot")
    replay.add_argument("log", help="commands file holding the raw update log")
    _add_format(replay)
    replay.set_defaults(handler=_cmd_replay)

    mergers = subparsers.add_parser(
        "mergers", help="list every maximal reconciliation of two replicas"
    )
    mergers.add_argument("original")
    mergers.add_argument("replica1")
    mergers.add_argument("replica2")
    mergers.add_argument(
        "--max-enum",
        type=int,
        default=20,
        help="refuse when the two sides hold more commands than this",
    )
    _add_format(mergers)
    mergers.set_defaults(handler=_cmd_mergers)

    reconcile_cmd = subparsers.add_parser(
        "reconcile", help="resolve conflicts between two replicas"
    )
    reconcile_cmd.add_argument("original")
    reconcile_cmd.add_argument("replica1")
    reconcile_cmd.add_argument("replica2")
    _add_policy(reconcile_cmd)
    _add_format(reconcile_cmd)
    reconcile_cmd.set_defaults(handler=_cmd_reconcile)

    plan = subparsers.add_parser(
        "plan", help="emit executable rollback and apply steps for both replicas"
    )
    plan.add_argument("original")
    plan.add_argument("replica1")
    plan.add_argument("replica2")
    _add_policy(plan)
    plan.add_argument(
        "--format",
        choices=("text", "json"),
        default="json",
        help="json is the loadable plan document",
    )
    plan.add_argument("--out", help="write output to this file atomically")
    plan.set_defaults(handler=_cmd_plan)

    apply_cmd = subparsers.add_parser(
        "apply", help="run one replica's side of a plan against a snapshot"
    )
    apply_cmd.add_argument("plan")
    apply_cmd.add_argument("snapshot")
    apply_cmd.add_argument(
        "--side", type=int, choices=(1, 2), required=True,
        help="which replica the snapshot is",
    )
    apply_cmd.add_argument("--out", help="write the resulting snapshot here")
    apply_cmd.set_defaults(handler=_cmd_apply)

    serve = subparsers.add_parser("serve", help="run the session service")
    serve.add_argument("--sessions", required=True, help="session storage directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8645)
    serve.add_argument(
        "--ui", help="directory with a built web UI to serve at the root"
    )
    serve.set_defaults(handler=_cmd_serve)

    return parser


def main(
    argv: Sequence[str] | None = None,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
    stderr: IO[str] | None = None,
) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args, stdin, stdout)
    except _Abort:
        stderr.write("aborted\n")
        return EXIT_ABORTED
    except FsreconError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
