/** View-state convergence: the store fed with the event stream must equal
 * a fresh GET /graph payload. Fixtures are captured from the real service
 * (scripts/capture_fixtures.py). */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { GraphStore } from "../src/store.js";
import type { GraphExport, ServerEvent } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

const exp1Events = fixture<ServerEvent[]>("exp1_events.json");
const exp1Graph = fixture<GraphExport>("exp1_graph.json");

describe("GraphStore", () => {
  it("converges to GET /graph after replaying the experiment-1 event stream", () => {
    const store = new GraphStore();
    store.applyAll(exp1Events);
    expect(store.matches(exp1Graph)).toBe(true);
    expect(store.graph.scene_labels).toEqual(exp1Graph.scene_labels);
  });

  it("converges regardless of an initial snapshot plus replayed events", () => {
    // boot order in the console: GET /graph first, then events from seq 0
    const store = new GraphStore();
    store.reconcile(exp1Graph, -1);
    store.applyAll(exp1Events);
    expect(store.matches(exp1Graph)).toBe(true);
  });

  it("ignores duplicate events after a reconnect replay", () => {
    const store = new GraphStore();
    store.applyAll(exp1Events);
    const seqBefore = store.lastSeq;
    store.applyAll(exp1Events); // the server replays from 0 on resubscribe
    expect(store.lastSeq).toBe(seqBefore);
    expect(store.matches(exp1Graph)).toBe(true);
  });

  it("tracks prompt lifecycle from events", () => {
    const store = new GraphStore();
    const opened: ServerEvent = {
      seq: 0,
      kind: "prompt_opened",
      payload: { prompt: { id: 1, kind: "confirm_object", payload: {}, created_at: 1, state: "open" } },
    };
    const closed: ServerEvent = { seq: 1, kind: "prompt_closed", payload: { prompt_id: 1 } };
    store.apply(opened);
    expect(store.openPrompt?.id).toBe(1);
    store.apply(closed);
    expect(store.openPrompt).toBeNull();
  });

  it("counts executions from the stream", () => {
    const store = new GraphStore();
    store.applyAll(exp1Events);
    expect(store.executions).toBe(2); // screw then nut picked
  });

  it("scene lane empties out as picks land", () => {
    const store = new GraphStore();
    store.applyAll(exp1Events);
    expect(store.graph.scene_labels).toEqual(["box_1", "yumi_1"]);
    const instances = store.graph.nodes.filter(
      (n) => n.kind === "object_instance",
    );
    expect(instances.map((n) => n.label).sort()).toEqual(["box_1", "yumi_1"]);
  });
});
