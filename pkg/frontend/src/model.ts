// Pure view-model helpers.  Everything here is a reshaping of server
// data for display; none of it re-derives reconciliation results.

import type {
  ConflictRow,
  ContentJson,
  HistoryEntry,
  SessionView,
} from "./api.js";

export function conflictCount(view: SessionView): number {
  return view.conflicts.length;
}

/** Content conflicts need per-file judgment, so they get their own
 * section ahead of the structural ones.  The server already orders
 * them first; splitting keeps the render honest either way. */
export function splitConflicts(view: SessionView): {
  content: ConflictRow[];
  structural: ConflictRow[];
} {
  return {
    content: view.conflicts.filter((c) => c.kind === "content"),
    structural: view.conflicts.filter((c) => c.kind !== "content"),
  };
}

export function lastStep(view: SessionView): HistoryEntry | null {
  return view.history.length > 0
    ? view.history[view.history.length - 1]!
    : null;
}

/** Command texts the newest step wiped out, for the fade-out effect. */
export function freshlyRemoved(view: SessionView): Set<string> {
  const step = lastStep(view);
  if (step === null) return new Set();
  return new Set([...step.removed_a, ...step.removed_b]);
}

export function removedSummary(entry: HistoryEntry): string {
  const gone = [...entry.removed_a, ...entry.removed_b];
  if (gone.length === 0) return "removed nothing";
  return `removed ${gone.join(", ")}`;
}

const PRINTABLE_LOW = 0x20;
const PRINTABLE_HIGH = 0x7e;

function decodeBase64(data: string): Uint8Array {
  const raw = atob(data);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return bytes;
}

/** First bytes of a file payload, printable-escaped for the popover. */
export function payloadPreview(data: string, limit = 64): string {
  const bytes = decodeBase64(data);
  const shown = bytes.slice(0, limit);
  let out = "";
  for (const byte of shown) {
    out +=
      byte >= PRINTABLE_LOW && byte <= PRINTABLE_HIGH
        ? String.fromCharCode(byte)
        : "·";
  }
  if (bytes.length > limit) out += ` … (${bytes.length} bytes)`;
  return out;
}

export function describeContent(content: ContentJson): string {
  if (content.kind === "empty") return "empty";
  if (content.kind === "dir") return "directory";
  if ("data" in content) return `file, ${decodeBase64(content.data).length} bytes`;
  return `file, ${content.size} bytes (stored by digest)`;
}

/** Nesting depth for tree indentation; "/a/b" sits one level down. */
export function treeDepth(path: string): number {
  return path.split("/").length - 2;
}
