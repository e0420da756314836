// DOM glue: one screen at a time, every transition driven by a fresh
// server response.  No optimistic updates; a click waits for the
// server, then the whole screen re-renders from what came back.

import { ApiError, Client } from "./api.js";
import type { PlanView, SessionView, Winner } from "./api.js";
import {
  renderBusy,
  renderError,
  renderPlan,
  renderResolve,
  renderUpload,
} from "./render.js";

type Screen =
  | { kind: "upload" }
  | { kind: "resolve"; view: SessionView }
  | { kind: "plan"; view: SessionView; plan: PlanView }
  | { kind: "error"; message: string };

export class App {
  private readonly client: Client;
  private screen: Screen = { kind: "upload" };
  private lastGood: Screen = { kind: "upload" };

  constructor(
    private readonly root: HTMLElement,
    client?: Client,
  ) {
    this.client = client ?? new Client();
    root.addEventListener("click", (event) => this.onClick(event));
    root.addEventListener("submit", (event) => this.onSubmit(event));
    this.paint();
  }

  private paint(): void {
    switch (this.screen.kind) {
      case "upload":
        this.root.innerHTML = renderUpload();
        break;
      case "resolve":
        this.root.innerHTML = renderResolve(this.screen.view);
        break;
      case "plan":
        this.root.innerHTML = renderPlan(
          this.screen.plan,
          this.screen.view.can_undo,
        );
        break;
      case "error":
        this.root.innerHTML = renderError(this.screen.message);
        break;
    }
  }

  private toast(message: string): void {
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = message;
    this.root.appendChild(node);
    setTimeout(() => node.remove(), 4000);
  }

  /** Land on the right screen for a session state: plan when done. */
  private async show(view: SessionView): Promise<void> {
    if (view.finished) {
      const plan = await this.client.getPlan(view.session);
      this.screen = { kind: "plan", view, plan };
    } else {
      this.screen = { kind: "resolve", view };
    }
    this.lastGood = this.screen;
    this.paint();
  }

  private async guarded(work: () => Promise<void>): Promise<void> {
    const sessionId = this.sessionId();
    this.root.innerHTML = renderBusy();
    try {
      await work();
    } catch (error) {
      if (error instanceof ApiError && error.stale && sessionId !== null) {
        // someone's earlier pick already swept this conflict away;
        // fetch the current graph and let the user re-decide
        this.toast("that conflict was already resolved; refreshed");
        await this.show(await this.client.getSession(sessionId));
        return;
      }
      this.screen = {
        kind: "error",
        message: error instanceof Error ? error.message : String(error),
      };
      this.paint();
    }
  }

  private sessionId(): string | null {
    return this.lastGood.kind === "resolve" || this.lastGood.kind === "plan"
      ? this.lastGood.view.session
      : null;
  }

  private onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset["action"];
    const sessionId = this.sessionId();

    if (action === "retry") {
      this.screen = this.lastGood;
      if (sessionId !== null) {
        void this.guarded(async () =>
          this.show(await this.client.getSession(sessionId)),
        );
      } else {
        this.paint();
      }
      return;
    }
    if (sessionId === null) return;

    if (action === "pick") {
      const conflictId = target.dataset["conflict"];
      const winner = target.dataset["winner"] as Winner | undefined;
      if (!conflictId || (winner !== "a" && winner !== "b")) return;
      void this.guarded(async () =>
        this.show(await this.client.resolve(sessionId, conflictId, winner)),
      );
    } else if (action === "undo" || action === "undo-from-plan") {
      void this.guarded(async () =>
        this.show(await this.client.undo(sessionId)),
      );
    } else if (action === "show-plan") {
      void this.guarded(async () =>
        this.show(await this.client.getSession(sessionId)),
      );
    }
  }

  private onSubmit(event: Event): void {
    const form = event.target;
    if (!(form instanceof HTMLFormElement) || form.dataset["form"] !== "create")
      return;
    event.preventDefault();
    const data = new FormData(form);
    const original = data.get("original");
    const replica1 = data.get("replica1");
    const replica2 = data.get("replica2");
    if (
      !(original instanceof File) ||
      !(replica1 instanceof File) ||
      !(replica2 instanceof File)
    )
      return;
    void this.guarded(async () =>
      this.show(await this.client.createSession(original, replica1, replica2)),
    );
  }
}

const mount = document.getElementById("app");
if (mount !== null) {
  new App(mount);
}
