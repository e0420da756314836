"""HTTP session service for step-by-step reconciliation.

A session holds three uploaded snapshots (the common original and the
two diverged replicas) plus an append-only event log.  Nothing derived
is ever persisted: every request replays the log against the snapshots
through the same resolve_step primitive the library uses, so a crash
or restart loses nothing and the service cannot drift from the
library's semantics.

The service is a development tool: one process, no authentication,
permissive CORS.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .algebra import Command, sorted_commands
from .canonical import CanonicalSet, order
from .detector import diff_states
from .errors import FormatError, FsreconError, InternalInvariantError
from .fstree import FileSystem, apply_sequence
from .reconciler import (
    Conflict,
    ConflictKind,
    Side,
    _cross_conflicts,
    merge_plan,
    resolve_step,
)
from .snapshots import (
    command_to_json,
    content_to_json,
    dumps_record,
    plan_to_text,
    snapshot_from_text,
    unify_namespaces,
)

_SNAPSHOT_FILES = ("original.snap", "replica1.snap", "replica2.snap")
_HISTORY_FILE = "history.jsonl"


def conflict_id(conflict: Conflict) -> str:
    """Stable short identifier derived from the two node paths.

    Each side holds at most one command per node, so the path pair
    pins down the edge, and the id survives restarts and replays.
    """
    key = dumps_record([str(conflict.left.node), str(conflict.right.node)])
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def _ordered_conflicts(conflicts: tuple[Conflict, ...]) -> tuple[Conflict, ...]:
    return tuple(
        sorted(
            conflicts,
            key=lambda c: (c.kind is not ConflictKind.CONTENT, c.sort_key()),
        )
    )


def _command_json(command: Command) -> dict:
    record = command_to_json(command)
    record["text"] = str(command)
    return record


def _conflict_json(conflict: Conflict) -> dict:
    return {
        "id": conflict_id(conflict),
        "kind": conflict.kind.value,
        "left": _command_json(conflict.left),
        "right": _command_json(conflict.right),
    }


def _tree_json(fs: FileSystem) -> list[dict]:
    """Existing entries only, parents first: a directory listing."""
    rows = []
    for node, content in fs.visible():
        record = content_to_json(content)
        record["path"] = str(node)
        record["text"] = str(content)
        rows.append(record)
    return rows


@dataclass
class SessionState:
    """One session, fully recomputed from disk."""

    session_id: str
    original: FileSystem
    replica1: FileSystem
    replica2: FileSystem
    a: CanonicalSet
    b: CanonicalSet
    shared: frozenset[Command]
    a_residue: frozenset[Command]
    b_residue: frozenset[Command]
    undo_depth: int
    history: list[dict]

    @property
    def live_conflicts(self) -> tuple[Conflict, ...]:
        return _ordered_conflicts(_cross_conflicts(self.a_residue, self.b_residue))

    @property
    def finished(self) -> bool:
        return not self.live_conflicts

    def merged(self) -> CanonicalSet:
        return CanonicalSet(
            self.a.ns, self.shared | self.a_residue | self.b_residue
        )

    def to_json(self) -> dict:
        live = self.live_conflicts
        surviving = self.shared | self.a_residue | self.b_residue

        def side_json(side: CanonicalSet) -> list[dict]:
            rows = []
            for command in side:
                row = _command_json(command)
                row["alive"] = command in surviving
                rows.append(row)
            return rows

        return {
            "session": self.session_id,
            "paths": [str(node) for node in self.a.ns],
            "a_side": side_json(self.a),
            "b_side": side_json(self.b),
            "shared": [_command_json(c) for c in sorted_commands(self.shared)],
            "conflicts": [_conflict_json(c) for c in live],
            "history": self.history,
            "can_undo": self.undo_depth > 0,
            "finished": self.finished,
            "result": (
                [_command_json(c) for c in sorted_commands(surviving)]
                if self.finished
                else None
            ),
        }


class ResolveBody(BaseModel):
    conflict_id: str
    winner: str


def _load_session(directory: Path) -> SessionState:
    """Rebuild a session from its snapshots and event log."""
    try:
        texts = [
            (directory / name).read_text(encoding="utf-8")
            for name in _SNAPSHOT_FILES
        ]
    except OSError as exc:
        raise FormatError(f"unreadable session data: {exc}") from exc
    original, replica1, replica2 = unify_namespaces(
        *(snapshot_from_text(text) for text in texts)
    )
    a = diff_states(original, replica1)
    b = diff_states(original, replica2)
    shared = a.commands & b.commands

    stack = [(a.commands - shared, b.commands - shared)]
    histories: list[list[dict]] = [[]]
    history_path = directory / _HISTORY_FILE
    lines = []
    if history_path.exists():
        lines = history_path.read_text(encoding="utf-8").splitlines()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"history line {number}: {exc.msg}") from exc
        kind = event.get("event")
        if kind == "undo":
            if len(stack) == 1:
                raise FormatError(f"history line {number}: nothing to undo")
            stack.pop()
            histories.pop()
            continue
        if kind != "resolve":
            raise FormatError(f"history line {number}: unknown event {kind!r}")
        a_residue, b_residue = stack[-1]
        live = {
            conflict_id(c): c
            for c in _cross_conflicts(a_residue, b_residue)
        }
        conflict = live.get(event.get("conflict_id"))
        if conflict is None:
            raise FormatError(
                f"history line {number}: conflict is not live at this point"
            )
        if event.get("winner") not in ("a", "b"):
            raise FormatError(f"history line {number}: bad winner")
        winner = Side.A if event.get("winner") == "a" else Side.B
        new_a, new_b, removed_a, removed_b = resolve_step(
            a_residue, b_residue, conflict, winner
        )
        entry = {
            "conflict_id": event.get("conflict_id"),
            "kind": conflict.kind.value,
            "winner": event.get("winner"),
            "left_text": str(conflict.left),
            "right_text": str(conflict.right),
            "removed_a": [str(c) for c in removed_a],
            "removed_b": [str(c) for c in removed_b],
            "remaining": len(_cross_conflicts(new_a, new_b)),
        }
        stack.append((new_a, new_b))
        histories.append(histories[-1] + [entry])

    a_residue, b_residue = stack[-1]
    return SessionState(
        session_id=directory.name,
        original=original,
        replica1=replica1,
        replica2=replica2,
        a=a,
        b=b,
        shared=shared,
        a_residue=a_residue,
        b_residue=b_residue,
        undo_depth=len(stack) - 1,
        history=list(histories[-1]),
    )


def _append_event(directory: Path, event: dict) -> None:
    with open(directory / _HISTORY_FILE, "a", encoding="utf-8") as handle:
        handle.write(dumps_record(event) + "\n")


def create_app(
    sessions_dir: str | Path, static_dir: str | Path | None = None
) -> FastAPI:
    """The session API, optionally also serving a built UI bundle.

    API routes are registered first, so the static mount at the root
    never shadows them.
    """
    sessions = Path(sessions_dir)
    sessions.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="fsrecon session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def session_dir(session_id: str) -> Path:
        directory = sessions / session_id
        if not directory.is_dir():
            raise HTTPException(status_code=404, detail="unknown session")
        return directory

    def load(session_id: str) -> SessionState:
        try:
            return _load_session(session_dir(session_id))
        except FsreconError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.post("/sessions", status_code=201)
    async def create_session(
        original: UploadFile, replica1: UploadFile, replica2: UploadFile
    ) -> dict:
        texts = []
        for upload in (original, replica1, replica2):
            raw = await upload.read()
            try:
                text = raw.decode("utf-8")
                snapshot_from_text(text)  # validate before accepting
            except (UnicodeDecodeError, FsreconError) as exc:
                raise HTTPException(
                    status_code=400,
                    detail=f"bad snapshot {upload.filename!r}: {exc}",
                ) from exc
            texts.append(text)

        session_id = uuid.uuid4().hex[:12]
        directory = sessions / session_id
        directory.mkdir()
        for name, text in zip(_SNAPSHOT_FILES, texts):
            (directory / name).write_text(text, encoding="utf-8")
        (directory / _HISTORY_FILE).write_text("", encoding="utf-8")

        try:
            state = _load_session(directory)
        except FsreconError as exc:
            raise HTTPException(
                status_code=400, detail=f"snapshots do not form a session: {exc}"
            ) from exc
        return state.to_json()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return load(session_id).to_json()

    @app.post("/sessions/{session_id}/resolve")
    def resolve(session_id: str, body: ResolveBody) -> dict:
        directory = session_dir(session_id)
        if body.winner not in ("a", "b"):
            raise HTTPException(
                status_code=400, detail="winner must be 'a' or 'b'"
            )
        state = load(session_id)
        live = {conflict_id(c): c for c in state.live_conflicts}
        if body.conflict_id not in live:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": "conflict is not live",
                    "conflicts": [
                        _conflict_json(c) for c in state.live_conflicts
                    ],
                },
            )
        _append_event(
            directory,
            {
                "event": "resolve",
                "conflict_id": body.conflict_id,
                "winner": body.winner,
            },
        )
        return load(session_id).to_json()

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str) -> dict:
        directory = session_dir(session_id)
        state = load(session_id)
        if state.undo_depth == 0:
            raise HTTPException(status_code=409, detail="nothing to undo")
        _append_event(directory, {"event": "undo"})
        return load(session_id).to_json()

    @app.get("/sessions/{session_id}/plan")
    def plan(session_id: str) -> dict:
        state = load(session_id)
        live = state.live_conflicts
        if live:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": "conflicts remain",
                    "remaining": len(live),
                    "conflicts": [_conflict_json(c) for c in live],
                },
            )
        merged = state.merged()
        built = merge_plan(state.a, state.b, merged)
        landed = apply_sequence(state.original, order(merged))
        if not isinstance(landed, FileSystem):
            raise InternalInvariantError("a merger failed on its own original")
        return {
            "session": session_id,
            "merger": [_command_json(c) for c in merged],
            "replica1": {
                "rollback": [_command_json(c) for c in built.replica1.rollback],
                "apply": [_command_json(c) for c in built.replica1.apply],
            },
            "replica2": {
                "rollback": [_command_json(c) for c in built.replica2.rollback],
                "apply": [_command_json(c) for c in built.replica2.apply],
            },
            "trees": {
                "original": _tree_json(state.original),
                "replica1": _tree_json(state.replica1),
                "replica2": _tree_json(state.replica2),
                "merged": _tree_json(landed),
            },
            "plan_file": plan_to_text(built),
        }

    if static_dir is not None:
        app.mount(
            "/", StaticFiles(directory=static_dir, html=True), name="ui"
        )

    return app
