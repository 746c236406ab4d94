/** Headless view state: the graph as reconciled from snapshots plus events.
 *
 * The invariant the console lives by: after event quiescence the store's
 * node/edge sets equal a fresh GET /graph payload.  graph_changed events
 * carry full exports, so reconciliation is "adopt the freshest snapshot,
 * never apply anything out of order".
 */

import type { GraphExport, Prompt, ServerEvent } from "./types.js";

export interface StoreListener {
  (store: GraphStore): void;
}

export class GraphStore {
  graph: GraphExport = { nodes: [], edges: [], counters: {}, scene_labels: [] };
  openPrompt: Prompt | null = null;
  lastSeq = -1;
  executions = 0;
  private listeners: StoreListener[] = [];

  subscribe(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this);
  }

  /** Adopt the result of GET /graph (initial load or gap recovery). */
  reconcile(graph: GraphExport, atSeq: number): void {
    this.graph = graph;
    this.lastSeq = Math.max(this.lastSeq, atSeq);
    this.emit();
  }

  setPrompt(prompt: Prompt | null): void {
    this.openPrompt = prompt;
    this.emit();
  }

  /** Apply one server event; events must arrive in seq order per connection. */
  apply(event: ServerEvent): void {
    if (event.seq <= this.lastSeq) return; // replay overlap after reconnect
    this.lastSeq = event.seq;
    switch (event.kind) {
      case "graph_changed":
        this.graph = event.payload["graph"] as GraphExport;
        break;
      case "prompt_opened":
        this.openPrompt = event.payload["prompt"] as Prompt;
        break;
      case "prompt_closed":
        this.openPrompt = null;
        break;
      case "execution_recorded":
        this.executions += 1;
        break;
      case "scene_ingested":
        break;
    }
    this.emit();
  }

  applyAll(events: ServerEvent[]): void {
    for (const event of events) this.apply(event);
  }

  /** Deep equality against a fresh /graph payload (the convergence check). */
  matches(graph: GraphExport): boolean {
    return canonical(this.graph) === canonical(graph);
  }
}

function canonical(graph: GraphExport): string {
  return JSON.stringify({
    nodes: [...graph.nodes].sort((a, b) => a.id - b.id),
    edges: [...graph.edges].sort((a, b) => a.id - b.id),
    counters: Object.fromEntries(
      Object.entries(graph.counters).sort(([a], [b]) => a.localeCompare(b)),
    ),
    scene_labels: [...graph.scene_labels].sort(),
  });
}
