/** SVG graph rendering and prompt-card DOM. Browser-only module. */

import { DEFAULT_OPTIONS, laneBounds, layoutGraph } from "./layout.js";
import type { GraphStore } from "./store.js";
import type { GraphEdge, GraphNode, NearMiss, Prompt } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const KIND_CLASS: Record<string, string> = {
  type_concept: "node-type",
  object_instance: "node-instance",
  property_slot: "node-slot",
  action_impl: "node-action",
};

function svgElement(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

export function renderGraph(svg: SVGSVGElement, store: GraphStore): void {
  const { nodes, edges } = store.graph;
  const options = { ...DEFAULT_OPTIONS };
  const viewBox = svg.viewBox.baseVal;
  if (viewBox && viewBox.width > 0) {
    options.width = viewBox.width;
    options.height = viewBox.height;
  }
  const placed = layoutGraph(nodes, edges, options);
  svg.replaceChildren();

  const bounds = laneBounds(options);
  svg.appendChild(svgElement("rect", {
    x: String(bounds.prior[0] - 10), y: "6",
    width: String(bounds.prior[1] - bounds.prior[0] + 20),
    height: String(options.height - 12), class: "lane lane-prior",
  }));
  svg.appendChild(svgElement("rect", {
    x: String(bounds.scene[0] - 10), y: "6",
    width: String(bounds.scene[1] - bounds.scene[0] + 20),
    height: String(options.height - 12), class: "lane lane-scene",
  }));
  const priorTitle = svgElement("text", {
    x: String((bounds.prior[0] + bounds.prior[1]) / 2), y: "26", class: "lane-title",
  });
  priorTitle.textContent = "prior knowledge";
  const sceneTitle = svgElement("text", {
    x: String((bounds.scene[0] + bounds.scene[1]) / 2), y: "26", class: "lane-title",
  });
  sceneTitle.textContent = "scene";
  svg.append(priorTitle, sceneTitle);

  for (const edge of edges) {
    const a = placed.get(edge.source);
    const b = placed.get(edge.dest);
    if (!a || !b) continue;
    const line = svgElement("line", {
      x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
      class: `edge edge-${edge.kind}`,
    });
    svg.appendChild(line);
    if (edge.kind === "action" && edge.action_label) {
      const label = svgElement("text", {
        x: String((a.x + b.x) / 2), y: String((a.y + b.y) / 2 - 4),
        class: "edge-label",
      });
      label.textContent = edge.action_label;
      svg.appendChild(label);
    }
  }

  for (const node of nodes) {
    const spot = placed.get(node.id);
    if (!spot) continue;
    const group = svgElement("g", {
      class: `node ${KIND_CLASS[node.kind] ?? ""} lane-${node.subgraph}`,
      transform: `translate(${spot.x}, ${spot.y})`,
    });
    // instances draw as squares (unclassified would carry "?"), concepts as circles
    if (node.kind === "object_instance") {
      group.appendChild(svgElement("rect", {
        x: "-9", y: "-9", width: "18", height: "18", rx: "3",
      }));
    } else {
      group.appendChild(svgElement("circle", {
        r: node.kind === "type_concept" ? "10" : "6",
      }));
    }
    const text = svgElement("text", { y: "-13", class: "node-label" });
    text.textContent = nodeCaption(node);
    group.appendChild(text);
    svg.appendChild(group);
  }
}

function nodeCaption(node: GraphNode): string {
  if (node.kind === "property_slot" && node.value != null) {
    const value = node.value as { t?: string; v?: unknown };
    if (value.t === "text" || value.t === "num") return `${node.label}=${value.v}`;
    return node.label;
  }
  return node.label;
}

// ---------------------------------------------------------------------- //
// prompt cards
// ---------------------------------------------------------------------- //

export interface CardCallbacks {
  submit(form: unknown): void;
}

export function renderPromptCard(host: HTMLElement, prompt: Prompt | null,
                                 callbacks: CardCallbacks): void {
  host.replaceChildren();
  if (prompt === null) {
    host.classList.add("hidden");
    return;
  }
  host.classList.remove("hidden");

  const title = document.createElement("h3");
  const body = document.createElement("div");
  body.className = "card-body";
  host.append(title, body);

  switch (prompt.kind) {
    case "confirm_object":
      renderConfirmObject(title, body, prompt, callbacks);
      break;
    case "label_unknown_object":
      renderLabelUnknown(title, body, prompt, callbacks);
      break;
    case "choose_action":
      renderChooseAction(title, body, prompt, callbacks);
      break;
    case "teach_skill":
      renderTeachSkill(title, body, prompt, callbacks);
      break;
  }
}

function renderConfirmObject(title: HTMLElement, body: HTMLElement,
                             prompt: Prompt, callbacks: CardCallbacks): void {
  const p = prompt.payload as {
    proposed: string;
    mismatched: { slot: string; value: unknown };
    requested: { slot: string; value: unknown };
  };
  title.textContent = "No exact match";
  const text = document.createElement("p");
  text.textContent =
    `No object with ${p.requested.slot} "${p.requested.value}" found. ` +
    `Accept ${p.proposed} (${p.mismatched.slot}: ${p.mismatched.value}) instead?`;
  const accept = button("Accept", () => callbacks.submit({ accepted: true }));
  const reject = button("Reject", () => callbacks.submit({ accepted: false }), "secondary");
  body.append(text, row(accept, reject));
}

function renderLabelUnknown(title: HTMLElement, body: HTMLElement,
                            prompt: Prompt, callbacks: CardCallbacks): void {
  const p = prompt.payload as {
    properties: Record<string, unknown>;
    known_types: string[];
  };
  title.textContent = "New object observed";
  const props = document.createElement("p");
  props.textContent = "Detected: " + Object.entries(p.properties)
    .map(([k, v]) => `${k}=${Array.isArray(v) ? v.join("×") : v}`).join(", ");
  body.appendChild(props);

  const labelInput = input("new type label", "new_obj");
  const parentSelect = select(["(no parent)", ...p.known_types]);
  const create = button("Create type", () => callbacks.submit({
    mode: "create_type",
    label: labelInput.value,
    parent: parentSelect.selectedIndex > 0 ? parentSelect.value : null,
  }));
  body.appendChild(row(labelInput, parentSelect, create));

  const linkSelect = select(p.known_types);
  const link = button("Link to existing", () => callbacks.submit({
    mode: "link_type",
    typeLabel: linkSelect.value,
  }), "secondary");
  body.appendChild(row(linkSelect, link));
}

function renderChooseAction(title: HTMLElement, body: HTMLElement,
                            prompt: Prompt, callbacks: CardCallbacks): void {
  const p = prompt.payload as {
    action_label: string;
    patient_type: string;
    near_misses: NearMiss[];
  };
  title.textContent = `No "${p.action_label}" for ${p.patient_type}`;
  const list = document.createElement("div");
  list.className = "near-misses";
  for (const miss of p.near_misses) {
    list.appendChild(button(
      `use ${miss.action_label}/${miss.object_type}`,
      () => callbacks.submit({ mode: "link", nearMiss: miss }),
    ));
  }
  body.appendChild(list);
  appendTeachControls(body, p, (skillName, steps) =>
    callbacks.submit({ mode: "teach", skillName, steps }));
}

function renderTeachSkill(title: HTMLElement, body: HTMLElement,
                          prompt: Prompt, callbacks: CardCallbacks): void {
  const p = prompt.payload as { action_label: string; patient_type: string };
  title.textContent = `Teach "${p.action_label}" for ${p.patient_type}`;
  appendTeachControls(body, p, (skillName, steps) =>
    callbacks.submit({ skillName, steps }));
}

function appendTeachControls(
  body: HTMLElement,
  p: { action_label: string; patient_type: string },
  submit: (skillName: string, steps: { op: string }[]) => void,
): void {
  const name = input("skill name",
    `${p.action_label}_${p.patient_type.toLowerCase()}_skill`);
  name.value = name.placeholder;
  const steps = input("steps, e.g. move_to,grip_close,remove_patient",
    "move_to,grip_close,remove_patient");
  steps.value = steps.placeholder;
  const teach = button("Teach skill", () => submit(
    name.value,
    steps.value.split(",").map((op) => ({ op: op.trim() })).filter((s) => s.op),
  ), "secondary");
  body.appendChild(row(name, steps, teach));
}

function button(label: string, onClick: () => void, variant = "primary"): HTMLButtonElement {
  const el = document.createElement("button");
  el.textContent = label;
  el.className = variant;
  el.addEventListener("click", onClick);
  return el;
}

function input(placeholder: string, value = ""): HTMLInputElement {
  const el = document.createElement("input");
  el.placeholder = placeholder;
  el.value = value;
  return el;
}

function select(options: string[]): HTMLSelectElement {
  const el = document.createElement("select");
  for (const option of options) {
    const opt = document.createElement("option");
    opt.value = option;
    opt.textContent = option;
    el.appendChild(opt);
  }
  return el;
}

function row(...children: HTMLElement[]): HTMLDivElement {
  const el = document.createElement("div");
  el.className = "row";
  el.append(...children);
  return el;
}
