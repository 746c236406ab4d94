/** Console wiring: connect, render loop, instruction input, prompt answers. */

import { ApiClient, ApiError, EventSubscription } from "./api.js";
import { buildAnswer, FormError } from "./prompts.js";
import { renderGraph, renderPromptCard } from "./render.js";
import { GraphStore } from "./store.js";
import type { ExecutionRecord, Prompt } from "./types.js";

// served at /ui/ with the API at the origin root; override with ?service=URL
const serviceBase = new URLSearchParams(location.search).get("service") ?? "..";
const api = new ApiClient(serviceBase);
const store = new GraphStore();

const svg = document.getElementById("graph") as unknown as SVGSVGElement;
const banner = document.getElementById("banner")!;
const card = document.getElementById("prompt-card")!;
const toasts = document.getElementById("toasts")!;
const form = document.getElementById("instruction-form") as HTMLFormElement;
const inputBox = document.getElementById("instruction") as HTMLInputElement;

function toast(text: string, variant: "ok" | "warn" | "error" = "ok"): void {
  const el = document.createElement("div");
  el.className = `toast ${variant}`;
  el.textContent = text;
  toasts.appendChild(el);
  setTimeout(() => el.remove(), 6000);
}

function describeRecord(record: ExecutionRecord): string {
  if (record.result === "success") {
    const removed = record.scene_delta.removed;
    const moved = record.scene_delta.moved.map((m) => m.label);
    const delta = [
      removed.length ? `removed ${removed.join(", ")}` : "",
      moved.length ? `moved ${moved.join(", ")}` : "",
    ].filter(Boolean).join("; ");
    return `${record.skill}: success${delta ? ` (${delta})` : ""}`;
  }
  return `${record.skill}: failed at step ${record.result.failed_step}`;
}

store.subscribe(() => {
  renderGraph(svg, store);
  renderPromptCard(card, store.openPrompt, {
    submit: async (formState) => {
      const prompt = store.openPrompt as Prompt;
      try {
        const choice = buildAnswer(prompt, formState);
        const { effects } = await api.answer(prompt.id, choice);
        for (const effect of effects) {
          if (effect["effect"] === "execution") {
            toast(describeRecord(effect["record"] as ExecutionRecord),
                  effect["success"] ? "ok" : "error");
          } else if (effect["effect"] === "resolution") {
            const kind = (effect["outcome"] as { kind: string }).kind;
            if (kind !== "resolved") toast(`resolution: ${kind}`, "warn");
          } else {
            toast(String(effect["effect"]).replaceAll("_", " "));
          }
        }
      } catch (error) {
        toast(errorText(error), "error");
      }
    },
  });
});

form.addEventListener("submit", async (submitEvent) => {
  submitEvent.preventDefault();
  const text = inputBox.value.trim();
  if (!text) return;
  inputBox.value = "";
  try {
    const result = await api.instruct(text);
    if (result.record) {
      toast(describeRecord(result.record), result.status === "executed" ? "ok" : "error");
    } else if (!result.prompt) {
      toast(`${result.status.replaceAll("_", " ")}`, "warn");
    }
  } catch (error) {
    toast(errorText(error), "error");
  }
});

function errorText(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  if (error instanceof FormError) return error.message;
  return String(error);
}

const subscription = new EventSubscription(api, serviceBase, {
  onEvent: (event) => store.apply(event),
  onResync: (graph, atSeq) => store.reconcile(graph, atSeq),
  onStatus: (status) => {
    banner.textContent = status === "live" ? "" : `connection: ${status}`;
    banner.classList.toggle("hidden", status === "live");
  },
});

async function boot(): Promise<void> {
  try {
    const graph = await api.graph();
    store.reconcile(graph, -1);
  } catch (error) {
    banner.textContent = `cannot reach service: ${errorText(error)}`;
    banner.classList.remove("hidden");
  }
  // replay from the origin; the store drops already-seen seqs
  subscription.start(0);
  const { prompt } = await api.openPrompt();
  if (prompt) store.setPrompt(prompt);
}

void boot();
