// Typed client for the session service.  The types mirror the JSON
// the server sends, field for field: the UI never recomputes any of
// this, it only renders what arrived.

export type ContentJson =
  | { kind: "empty" }
  | { kind: "dir" }
  | { kind: "file"; data: string }
  | { kind: "file"; digest: string; size: number };

export interface CommandRow {
  path: string;
  before: ContentJson;
  after: ContentJson;
  text: string;
}

/** Column entry: a command plus whether it survived resolution so far. */
export interface SideRow extends CommandRow {
  alive: boolean;
}

export type ConflictKind = "structural" | "content";
export type Winner = "a" | "b";

export interface ConflictRow {
  id: string;
  kind: ConflictKind;
  left: CommandRow;
  right: CommandRow;
}

export interface HistoryEntry {
  conflict_id: string;
  kind: string;
  winner: Winner;
  left_text: string;
  right_text: string;
  removed_a: string[];
  removed_b: string[];
  remaining: number;
}

export interface SessionView {
  session: string;
  paths: string[];
  a_side: SideRow[];
  b_side: SideRow[];
  shared: CommandRow[];
  conflicts: ConflictRow[];
  history: HistoryEntry[];
  can_undo: boolean;
  finished: boolean;
  result: CommandRow[] | null;
}

export interface TreeRow {
  path: string;
  kind: string;
  text: string;
  data?: string;
}

export interface ReplicaSteps {
  rollback: CommandRow[];
  apply: CommandRow[];
}

export interface PlanView {
  session: string;
  merger: CommandRow[];
  replica1: ReplicaSteps;
  replica2: ReplicaSteps;
  trees: {
    original: TreeRow[];
    replica1: TreeRow[];
    replica2: TreeRow[];
    merged: TreeRow[];
  };
  plan_file: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }

  /** 409 on resolve: the chosen conflict was auto-resolved meanwhile. */
  get stale(): boolean {
    return this.status === 409;
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error bodies fall through with the bare status
  }
  if (!response.ok) {
    const detail =
      body !== null && typeof body === "object" && "detail" in body
        ? (body as { detail: unknown }).detail
        : body;
    throw new ApiError(response.status, detail ?? response.statusText);
  }
  return body as T;
}

export class Client {
  constructor(readonly base: string = "") {}

  async createSession(
    original: File,
    replica1: File,
    replica2: File,
  ): Promise<SessionView> {
    const form = new FormData();
    form.append("original", original);
    form.append("replica1", replica1);
    form.append("replica2", replica2);
    return unwrap(
      await fetch(`${this.base}/sessions`, { method: "POST", body: form }),
    );
  }

  async getSession(id: string): Promise<SessionView> {
    return unwrap(await fetch(`${this.base}/sessions/${id}`));
  }

  async resolve(
    id: string,
    conflictId: string,
    winner: Winner,
  ): Promise<SessionView> {
    return unwrap(
      await fetch(`${this.base}/sessions/${id}/resolve`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ conflict_id: conflictId, winner }),
      }),
    );
  }

  async undo(id: string): Promise<SessionView> {
    return unwrap(
      await fetch(`${this.base}/sessions/${id}/undo`, { method: "POST" }),
    );
  }

  async getPlan(id: string): Promise<PlanView> {
    return unwrap(await fetch(`${this.base}/sessions/${id}/plan`));
  }
}
