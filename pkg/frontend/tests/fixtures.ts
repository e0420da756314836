import { readFileSync } from "node:fs";

import type { PlanView, SessionView } from "../src/api.js";

function load(name: string): unknown {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8"));
}

export const created = load("session-created.json") as SessionView;
export const step1 = load("session-step1.json") as SessionView;
export const step2 = load("session-step2.json") as SessionView;
export const step3 = load("session-step3.json") as SessionView;
export const plan = load("session-plan.json") as PlanView;
