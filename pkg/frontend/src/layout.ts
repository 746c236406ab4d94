/** Lane-separated force layout for the dual graph.
 *
 * Prior knowledge settles in the left lane, scene instances in the right;
 * instance-of edges are the only ones crossing the gutter.  Within a lane a
 * small deterministic force simulation (springs on edges, repulsion between
 * nodes, pull toward the lane axis) untangles the structure.  No DOM use --
 * pure math, testable headlessly.
 */

import type { GraphEdge, GraphNode } from "./types.js";

export interface PlacedNode {
  id: number;
  x: number;
  y: number;
  lane: "prior" | "scene";
}

export interface LayoutOptions {
  width: number;
  height: number;
  laneGap: number;      // clear gutter between the two lanes
  iterations: number;
  springLength: number;
}

export const DEFAULT_OPTIONS: LayoutOptions = {
  width: 1200,
  height: 800,
  laneGap: 160,
  iterations: 220,
  springLength: 90,
};

/** Deterministic pseudo-random scatter so layouts replay identically. */
function scatter(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 0xffffffff;
  };
}

export function laneBounds(options: LayoutOptions): {
  prior: [number, number];
  scene: [number, number];
} {
  const half = options.width / 2;
  return {
    prior: [20, half - options.laneGap / 2],
    scene: [half + options.laneGap / 2, options.width - 20],
  };
}

export function layoutGraph(
  nodes: GraphNode[],
  edges: GraphEdge[],
  options: LayoutOptions = DEFAULT_OPTIONS,
): Map<number, PlacedNode> {
  const random = scatter(42);
  const bounds = laneBounds(options);
  const placed = new Map<number, PlacedNode>();

  for (const node of nodes) {
    const lane = node.subgraph === "prior" ? "prior" : "scene";
    const [left, right] = bounds[lane];
    placed.set(node.id, {
      id: node.id,
      lane,
      x: left + random() * (right - left),
      y: 40 + random() * (options.height - 80),
    });
  }

  const within = edges.filter((e) => {
    const a = placed.get(e.source);
    const b = placed.get(e.dest);
    return a && b;
  });

  for (let step = 0; step < options.iterations; step++) {
    const cooling = 1 - step / options.iterations;
    const fx = new Map<number, number>();
    const fy = new Map<number, number>();
    const nudge = (id: number, dx: number, dy: number) => {
      fx.set(id, (fx.get(id) ?? 0) + dx);
      fy.set(id, (fy.get(id) ?? 0) + dy);
    };

    // pairwise repulsion inside each lane
    const list = [...placed.values()];
    for (let i = 0; i < list.length; i++) {
      for (let j = i + 1; j < list.length; j++) {
        const a = list[i];
        const b = list[j];
        if (a.lane !== b.lane) continue;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        const dist2 = Math.max(dx * dx + dy * dy, 1);
        const force = 2200 / dist2;
        const dist = Math.sqrt(dist2);
        dx /= dist;
        dy /= dist;
        nudge(a.id, dx * force, dy * force);
        nudge(b.id, -dx * force, -dy * force);
      }
    }

    // springs along edges (cross-lane springs act on y only, the gutter is pinned)
    for (const edge of within) {
      const a = placed.get(edge.source)!;
      const b = placed.get(edge.dest)!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const stretch = (dist - options.springLength) / dist * 0.08;
      const sameLane = a.lane === b.lane;
      nudge(edge.source, sameLane ? dx * stretch : 0, dy * stretch);
      nudge(edge.dest, sameLane ? -dx * stretch : 0, -dy * stretch);
    }

    for (const node of placed.values()) {
      node.x += (fx.get(node.id) ?? 0) * cooling;
      node.y += (fy.get(node.id) ?? 0) * cooling;
      const [left, right] = bounds[node.lane];
      node.x = Math.min(Math.max(node.x, left), right);
      node.y = Math.min(Math.max(node.y, 30), options.height - 30);
    }
  }
  return placed;
}
