"""Durable formats: snapshots, command files, plans, merger listings.

Everything is JSON lines.  The first line of a file is a header record
carrying a format tag and version; every following line is one record.
Serialization is deterministic (sorted keys, compact separators) so
that two writers producing the same document produce the same bytes.

File payloads up to INLINE_LIMIT bytes travel inside the snapshot as
base64.  Larger payloads live in a sidecar directory next to the
snapshot, named by content digest, and the snapshot refers to them as
{"kind": "file", "digest": "sha256:...", "size": n}.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .algebra import Command, sorted_commands
from .canonical import CanonicalSet, order
from .errors import FormatError, PathSyntaxError
from .fstree import Content, DIRECTORY, EMPTY, FileSystem, Kind, file_content
from .namespace import NodeId, build_namespace

INLINE_LIMIT = 4096

SNAPSHOT_TAG = "fsrecon-snapshot"
COMMANDS_TAG = "fsrecon-commands"
PLAN_TAG = "fsrecon-plan"
MERGERS_TAG = "fsrecon-mergers"

_VERSION = 1


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see
    a half-written document."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# ---------------------------------------------------------------------------
# Blob sidecar
# ---------------------------------------------------------------------------


def payload_digest(payload: bytes) -> str:
    return "sha256:" + hashlib.sha256(payload).hexdigest()


class BlobStore:
    """Content-addressed payloads in one directory, named by digest."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)

    def put(self, payload: bytes) -> str:
        digest = payload_digest(payload)
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.directory / digest.split(":", 1)[1]
        if not target.exists():
            fd, tmp = tempfile.mkstemp(dir=self.directory)
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, target)
        return digest

    def get(self, digest: str) -> bytes:
        scheme, _, hexdigest = digest.partition(":")
        if scheme != "sha256" or not hexdigest:
            raise FormatError(f"unsupported digest {digest!r}")
        target = self.directory / hexdigest
        try:
            payload = target.read_bytes()
        except FileNotFoundError:
            raise FormatError(f"missing blob {digest}") from None
        if payload_digest(payload) != digest:
            raise FormatError(f"blob {digest} is corrupt")
        return payload


def sidecar_dir(snapshot_path: str | Path) -> Path:
    return Path(str(snapshot_path) + ".blobs")


# ---------------------------------------------------------------------------
# Content and command records
# ---------------------------------------------------------------------------


def content_to_json(content: Content, blobs: BlobStore | None = None) -> dict:
    if content.kind is Kind.EMPTY:
        return {"kind": "empty"}
    if content.kind is Kind.DIRECTORY:
        return {"kind": "dir"}
    payload = content.payload or b""
    if blobs is not None and len(payload) > INLINE_LIMIT:
        return {
            "kind": "file",
            "digest": blobs.put(payload),
            "size": len(payload),
        }
    return {"kind": "file", "data": base64.b64encode(payload).decode("ascii")}


def content_from_json(obj: object, blobs: BlobStore | None = None) -> Content:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise FormatError(f"malformed content record: {obj!r}")
    kind = obj["kind"]
    if kind == "empty":
        return EMPTY
    if kind == "dir":
        return DIRECTORY
    if kind == "file":
        if "data" in obj:
            try:
                return file_content(base64.b64decode(obj["data"], validate=True))
            except (ValueError, TypeError) as exc:
                raise FormatError(f"bad file payload: {exc}") from exc
        if "digest" in obj:
            if blobs is None:
                raise FormatError(
                    "digest reference in a context without a blob store"
                )
            return file_content(blobs.get(obj["digest"]))
        raise FormatError("file content needs data or digest")
    raise FormatError(f"unknown content kind {kind!r}")


def command_to_json(command: Command) -> dict:
    # command payloads always travel inline; they are working data,
    # not bulk storage
    return {
        "path": str(command.node),
        "before": content_to_json(command.before),
        "after": content_to_json(command.after),
    }


def command_from_json(obj: object) -> Command:
    if not isinstance(obj, dict):
        raise FormatError(f"malformed command record: {obj!r}")
    try:
        node = NodeId.parse(obj["path"])
    except (KeyError, TypeError, PathSyntaxError) as exc:
        raise FormatError(f"bad command path: {exc}") from exc
    return Command(
        node,
        content_from_json(obj.get("before")),
        content_from_json(obj.get("after")),
    )


# ---------------------------------------------------------------------------
# Line-level plumbing
# ---------------------------------------------------------------------------


def _parse_lines(text: str, expected_tag: str) -> tuple[dict, list[dict]]:
    records: list[dict] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            parsed = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {number}: not JSON ({exc.msg})") from exc
        if not isinstance(parsed, dict):
            raise FormatError(f"line {number}: expected an object")
        records.append(parsed)
    if not records:
        raise FormatError("empty document")
    header, body = records[0], records[1:]
    if header.get("format") != expected_tag:
        raise FormatError(
            f"expected a {expected_tag} document, got {header.get('format')!r}"
        )
    if header.get("version") != _VERSION:
        raise FormatError(f"unsupported version {header.get('version')!r}")
    return header, body


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------


def snapshot_to_text(fs: FileSystem, blobs: BlobStore | None = None) -> str:
    lines = [
        dumps_record(
            {"format": SNAPSHOT_TAG, "version": _VERSION, "nodes": len(fs.ns)}
        )
    ]
    for node in fs.ns:
        lines.append(
            dumps_record(
                {"path": str(node), "content": content_to_json(fs.value(node), blobs)}
            )
        )
    return "\n".join(lines) + "\n"


def snapshot_from_text(text: str, blobs: BlobStore | None = None) -> FileSystem:
    header, body = _parse_lines(text, SNAPSHOT_TAG)
    if header.get("nodes") != len(body):
        raise FormatError(
            f"header promises {header.get('nodes')} nodes, found {len(body)}"
        )
    values: dict[NodeId, Content] = {}
    paths: list[str] = []
    for record in body:
        try:
            path = record["path"]
        except KeyError:
            raise FormatError(f"node record without a path: {record!r}") from None
        try:
            node = NodeId.parse(path)
        except PathSyntaxError as exc:
            raise FormatError(str(exc)) from exc
        if node in values:
            raise FormatError(f"duplicate node {path}")
        paths.append(path)
        values[node] = content_from_json(record.get("content"), blobs)
    try:
        ns = build_namespace(paths)
    except PathSyntaxError as exc:
        raise FormatError(str(exc)) from exc
    if len(ns) != len(values):
        missing = sorted(str(n) for n in ns if n not in values)
        raise FormatError(f"snapshot omits ancestors: {', '.join(missing)}")
    return FileSystem(ns, values)


def write_snapshot(fs: FileSystem, path: str | Path) -> None:
    blobs = BlobStore(sidecar_dir(path))
    atomic_write_text(path, snapshot_to_text(fs, blobs))


def read_snapshot(path: str | Path) -> FileSystem:
    return snapshot_from_text(_read_text(path), BlobStore(sidecar_dir(path)))


def unify_namespaces(*filesystems: FileSystem) -> tuple[FileSystem, ...]:
    """Rebase filesystems onto the union of their namespaces.

    Snapshots taken from different trees rarely agree on the node set;
    nodes one side never saw are simply empty there.
    """
    union = build_namespace(
        str(node) for fs in filesystems for node in fs.ns
    )
    return tuple(FileSystem(union, dict(fs.entries)) for fs in filesystems)


# ---------------------------------------------------------------------------
# Command documents
# ---------------------------------------------------------------------------


def commands_to_text(commands: Iterable[Command], role: str = "commands") -> str:
    listed = list(commands)
    lines = [
        dumps_record(
            {
                "format": COMMANDS_TAG,
                "version": _VERSION,
                "role": role,
                "count": len(listed),
            }
        )
    ]
    lines.extend(dumps_record(command_to_json(c)) for c in listed)
    return "\n".join(lines) + "\n"


def commands_from_text(text: str) -> tuple[Command, ...]:
    header, body = _parse_lines(text, COMMANDS_TAG)
    if header.get("count") != len(body):
        raise FormatError(
            f"header promises {header.get('count')} commands, found {len(body)}"
        )
    return tuple(command_from_json(record) for record in body)


def write_commands(
    commands: Iterable[Command], path: str | Path, role: str = "commands"
) -> None:
    atomic_write_text(path, commands_to_text(commands, role))


def read_commands(path: str | Path) -> tuple[Command, ...]:
    return commands_from_text(_read_text(path))


# ---------------------------------------------------------------------------
# Plan documents
# ---------------------------------------------------------------------------


_PLAN_SECTIONS = (
    "merger",
    "replica1-rollback",
    "replica1-apply",
    "replica2-rollback",
    "replica2-apply",
)


@dataclass(frozen=True)
class PlanDocument:
    """A merge plan as plain command tuples, free of namespace context."""

    merger: tuple[Command, ...]
    replica1_rollback: tuple[Command, ...]
    replica1_apply: tuple[Command, ...]
    replica2_rollback: tuple[Command, ...]
    replica2_apply: tuple[Command, ...]

    def section(self, name: str) -> tuple[Command, ...]:
        return getattr(self, name.replace("-", "_"))

    def steps(self, side: int) -> tuple[Command, ...]:
        if side == 1:
            return self.replica1_rollback + self.replica1_apply
        if side == 2:
            return self.replica2_rollback + self.replica2_apply
        raise ValueError("side must be 1 or 2")


def plan_to_text(plan) -> str:
    """Serialize a MergePlan (or PlanDocument) deterministically."""
    if isinstance(plan, PlanDocument):
        doc = plan
    else:
        doc = PlanDocument(
            order(plan.merger),
            plan.replica1.rollback,
            plan.replica1.apply,
            plan.replica2.rollback,
            plan.replica2.apply,
        )
    lines = [
        dumps_record(
            {
                "format": PLAN_TAG,
                "version": _VERSION,
                "merger_size": len(doc.merger),
            }
        )
    ]
    for section in _PLAN_SECTIONS:
        for index, command in enumerate(doc.section(section)):
            record = command_to_json(command)
            record["plan"] = section
            record["index"] = index
            lines.append(dumps_record(record))
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> PlanDocument:
    _, body = _parse_lines(text, PLAN_TAG)
    sections: dict[str, list[Command]] = {name: [] for name in _PLAN_SECTIONS}
    for record in body:
        section = record.get("plan")
        if section not in sections:
            raise FormatError(f"unknown plan section {section!r}")
        if record.get("index") != len(sections[section]):
            raise FormatError(f"out-of-order record in section {section}")
        sections[section].append(command_from_json(record))
    return PlanDocument(*(tuple(sections[name]) for name in _PLAN_SECTIONS))


def write_plan(plan, path: str | Path) -> None:
    atomic_write_text(path, plan_to_text(plan))


def read_plan(path: str | Path) -> PlanDocument:
    return plan_from_text(_read_text(path))


# ---------------------------------------------------------------------------
# Merger listings
# ---------------------------------------------------------------------------


def mergers_to_text(mergers: Sequence[CanonicalSet]) -> str:
    lines = [
        dumps_record(
            {"format": MERGERS_TAG, "version": _VERSION, "count": len(mergers)}
        )
    ]
    for index, merger in enumerate(mergers):
        lines.append(
            dumps_record(
                {
                    "merger": index,
                    "size": len(merger),
                    "commands": [
                        command_to_json(c) for c in sorted_commands(merger.commands)
                    ],
                }
            )
        )
    return "\n".join(lines) + "\n"


def mergers_from_text(text: str) -> tuple[tuple[Command, ...], ...]:
    header, body = _parse_lines(text, MERGERS_TAG)
    if header.get("count") != len(body):
        raise FormatError(
            f"header promises {header.get('count')} mergers, found {len(body)}"
        )
    result: list[tuple[Command, ...]] = []
    for position, record in enumerate(body):
        if record.get("merger") != position:
            raise FormatError(f"merger records out of order at {position}")
        commands = record.get("commands")
        if not isinstance(commands, list):
            raise FormatError(f"merger {position} has no command list")
        result.append(tuple(command_from_json(c) for c in commands))
    return tuple(result)


def write_mergers(mergers: Sequence[CanonicalSet], path: str | Path) -> None:
    atomic_write_text(path, mergers_to_text(mergers))


def read_mergers(path: str | Path) -> tuple[tuple[Command, ...], ...]:
    return mergers_from_text(_read_text(path))
