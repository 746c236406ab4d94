/** Payload types mirroring the service contract (docs/api.md). */

export type Subgraph = "prior" | "scene";
export type NodeKind = "type_concept" | "object_instance" | "property_slot" | "action_impl";
export type EdgeKind = "has" | "is" | "instance_of" | "action";

export interface GraphNode {
  id: number;
  label: string;
  subgraph: Subgraph;
  kind: NodeKind;
  value: unknown;
  skill_ref: string | null;
}

export interface GraphEdge {
  id: number;
  source: number;
  dest: number;
  kind: EdgeKind;
  action_label: string;
}

export interface GraphExport {
  nodes: GraphNode[];
  edges: GraphEdge[];
  counters: Record<string, number>;
  scene_labels: string[];
}

export type EventKind =
  | "graph_changed"
  | "prompt_opened"
  | "prompt_closed"
  | "execution_recorded"
  | "scene_ingested";

export interface ServerEvent {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type PromptKind =
  | "confirm_object"
  | "choose_action"
  | "label_unknown_object"
  | "teach_skill";

export interface Prompt {
  id: number;
  kind: PromptKind;
  payload: Record<string, unknown>;
  created_at: number;
  state: "open" | "answered" | "expired";
}

export interface NearMiss {
  action_label: string;
  object_type: string;
}

export interface Envelope<T> {
  request_id: string;
  ok: boolean;
  result?: T;
  error?: { code: string; message: string; details: Record<string, unknown> };
}

export interface InstructionResult {
  status: string;
  frame: unknown;
  outcome: { kind: string; [key: string]: unknown };
  record?: ExecutionRecord;
  prompt?: Prompt;
}

export interface ExecutionRecord {
  plan: { actor: string; patient: string; action: string; skill_ref: string };
  skill: string;
  result: "success" | { failed_step: number; reason: string };
  scene_delta: { removed: string[]; moved: { label: string; pose: unknown }[] };
}

export interface IngestReport {
  instantiated: { node_id: number; label: string; type: string }[];
  unknowns: number;
  discarded: number;
  prompt?: Prompt;
}
