// HTML builders.  Every function maps server responses to markup and
// nothing else, so the tests can pin the output to the fixtures.

import type {
  CommandRow,
  ConflictRow,
  PlanView,
  SessionView,
  SideRow,
  TreeRow,
} from "./api.js";
import {
  conflictCount,
  freshlyRemoved,
  payloadPreview,
  removedSummary,
  splitConflicts,
  treeDepth,
} from "./model.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function badge(kind: string): string {
  return `<span class="badge badge-${esc(kind)}">${esc(kind)}</span>`;
}

export function renderUpload(): string {
  return `
<section class="upload">
  <h1>Reconcile two replicas</h1>
  <p>Upload the common original snapshot and the two diverged copies.</p>
  <form data-form="create">
    <label>original <input type="file" name="original" required></label>
    <label>replica 1 <input type="file" name="replica1" required></label>
    <label>replica 2 <input type="file" name="replica2" required></label>
    <button type="submit">Start session</button>
  </form>
</section>`;
}

function commandList(rows: SideRow[], leaving: Set<string>): string {
  if (rows.length === 0) return `<p class="muted">no commands</p>`;
  const items = rows.map((row) => {
    const classes = ["cmd"];
    if (!row.alive) classes.push("dead");
    if (leaving.has(row.text)) classes.push("leaving");
    return `<li class="${classes.join(" ")}">${esc(row.text)}</li>`;
  });
  return `<ul class="commands">${items.join("")}</ul>`;
}

function payloadPopover(command: CommandRow): string {
  const after = command.after;
  if (after.kind !== "file" || !("data" in after)) return "";
  return `<details class="payload"><summary>payload</summary><code>${esc(
    payloadPreview(after.data),
  )}</code></details>`;
}

function conflictItem(conflict: ConflictRow): string {
  const preview =
    conflict.kind === "content"
      ? payloadPopover(conflict.left) + payloadPopover(conflict.right)
      : "";
  return `
<li class="conflict" data-conflict="${esc(conflict.id)}">
  ${badge(conflict.kind)}
  <span class="edge">${esc(conflict.left.text)} ↔ ${esc(conflict.right.text)}</span>
  ${preview}
  <span class="pick">
    <button data-action="pick" data-conflict="${esc(conflict.id)}" data-winner="a">keep replica 1</button>
    <button data-action="pick" data-conflict="${esc(conflict.id)}" data-winner="b">keep replica 2</button>
  </span>
</li>`;
}

function conflictSections(view: SessionView): string {
  if (view.conflicts.length === 0) {
    return `<p class="done">Nothing to resolve.</p>`;
  }
  const { content, structural } = splitConflicts(view);
  const parts: string[] = [];
  if (content.length > 0) {
    parts.push(
      `<h3>Content conflicts (resolve these first)</h3>`,
      `<ol class="conflicts">${content.map(conflictItem).join("")}</ol>`,
    );
  }
  if (structural.length > 0) {
    parts.push(
      `<h3>Structural conflicts</h3>`,
      `<ol class="conflicts">${structural.map(conflictItem).join("")}</ol>`,
    );
  }
  return parts.join("\n");
}

function timeline(view: SessionView): string {
  if (view.history.length === 0) {
    return `<p class="muted">no steps yet</p>`;
  }
  const items = view.history.map((entry) => {
    const winnerText = entry.winner === "a" ? entry.left_text : entry.right_text;
    return `<li>
      ${badge(entry.kind)}
      <span class="edge">${esc(entry.left_text)} ↔ ${esc(entry.right_text)}</span>
      <span class="winner">winner: ${esc(winnerText)}</span>
      <span class="removed">${esc(removedSummary(entry))}</span>
      <span class="count">${entry.remaining} left</span>
    </li>`;
  });
  return `<ol class="timeline">${items.join("")}</ol>`;
}

export function renderResolve(view: SessionView): string {
  const count = conflictCount(view);
  const leaving = freshlyRemoved(view);
  const headline =
    count === 0
      ? "Nothing to resolve."
      : count === 1
        ? "1 conflict to resolve"
        : `${count} conflicts to resolve`;
  const shared =
    view.shared.length === 0
      ? ""
      : `<section>
  <h3>Taken identically on both sides</h3>
  <ul class="commands">${view.shared
    .map((c) => `<li class="cmd shared">${esc(c.text)}</li>`)
    .join("")}</ul>
</section>`;
  const planButton = view.finished
    ? `<button data-action="show-plan" class="primary">View merge plan</button>`
    : `<button disabled title="${count} conflicts remain">View merge plan</button>`;
  const undoButton = view.can_undo
    ? `<button data-action="undo">Undo last step</button>`
    : `<button disabled>Undo last step</button>`;

  return `
<section class="resolve">
  <header>
    <h1>Session ${esc(view.session)}</h1>
    <p class="status">${esc(headline)}</p>
    <p class="actions">${undoButton} ${planButton}</p>
  </header>
  <div class="columns">
    <section>
      <h2>Replica 1 commands</h2>
      ${commandList(view.a_side, leaving)}
    </section>
    <section>
      <h2>Replica 2 commands</h2>
      ${commandList(view.b_side, leaving)}
    </section>
  </div>
  ${shared}
  <section>
    <h2>Conflicts</h2>
    ${conflictSections(view)}
  </section>
  <aside>
    <h2>Resolution timeline</h2>
    ${timeline(view)}
  </aside>
</section>`;
}

function tree(rows: TreeRow[]): string {
  if (rows.length === 0) return `<p class="muted">(empty)</p>`;
  const items = rows.map((row) => {
    const name = row.path.split("/").pop() ?? row.path;
    const label = row.kind === "dir" ? `${name}/` : name;
    return `<li style="--depth:${treeDepth(row.path)}" title="${esc(row.text)}">${esc(
      label,
    )}</li>`;
  });
  return `<ul class="tree">${items.join("")}</ul>`;
}

function stepList(label: string, rows: CommandRow[]): string {
  const body =
    rows.length === 0
      ? `<p class="muted">nothing to do</p>`
      : `<ol class="commands">${rows
          .map((c) => `<li class="cmd">${esc(c.text)}</li>`)
          .join("")}</ol>`;
  return `<section><h4>${esc(label)}</h4>${body}</section>`;
}

export function renderPlan(plan: PlanView, canUndo: boolean): string {
  const back = canUndo
    ? `<button data-action="undo-from-plan">Back to resolving (undo last step)</button>`
    : "";
  return `
<section class="plan">
  <header>
    <h1>Merge plan</h1>
    <p class="actions">${back}</p>
  </header>
  <div class="columns trees">
    <section><h3>Original</h3>${tree(plan.trees.original)}</section>
    <section><h3>Replica 1</h3>${tree(plan.trees.replica1)}</section>
    <section><h3>Replica 2</h3>${tree(plan.trees.replica2)}</section>
    <section><h3>Merged</h3>${tree(plan.trees.merged)}</section>
  </div>
  <section>
    <h2>Merged state commands</h2>
    <ul class="commands">${plan.merger
      .map((c) => `<li class="cmd">${esc(c.text)}</li>`)
      .join("")}</ul>
  </section>
  <div class="columns">
    <section>
      <h2>Replica 1 steps</h2>
      ${stepList("roll back", plan.replica1.rollback)}
      ${stepList("apply", plan.replica1.apply)}
    </section>
    <section>
      <h2>Replica 2 steps</h2>
      ${stepList("roll back", plan.replica2.rollback)}
      ${stepList("apply", plan.replica2.apply)}
    </section>
  </div>
  <details class="plan-file">
    <summary>plan file</summary>
    <pre>${esc(plan.plan_file)}</pre>
  </details>
</section>`;
}

export function renderError(message: string): string {
  return `
<section class="error">
  <p class="banner">${esc(message)}</p>
  <button data-action="retry">Retry</button>
</section>`;
}

export function renderBusy(): string {
  return `<p class="muted busy">working…</p>`;
}
