/** Builds answer payloads from prompt-card form state.
 *
 * These shapes are the wire contract (docs/api.md); the fixture tests pin
 * them against answers the engine actually accepted.
 */

import type { NearMiss, Prompt } from "./types.js";

export interface ConfirmObjectForm {
  accepted: boolean;
}

export interface LabelUnknownForm {
  mode: "create_type" | "link_type";
  label?: string;          // create_type
  parent?: string | null;  // create_type
  slots?: string[];        // create_type
  typeLabel?: string;      // link_type
}

export interface ChooseActionForm {
  mode: "link" | "teach";
  nearMiss?: NearMiss;     // link
  skillName?: string;      // teach
  steps?: StepForm[];      // teach
}

export interface TeachSkillForm {
  skillName: string;
  steps: StepForm[];
}

export interface StepForm {
  op: "move_to" | "grip_close" | "grip_open" | "remove_patient" | "place_patient";
  pose?: { position: [number, number, number]; orientation: [number, number, number] };
}

export class FormError extends Error {}

export function confirmObjectAnswer(form: ConfirmObjectForm): Record<string, unknown> {
  return { accepted: form.accepted };
}

export function labelUnknownAnswer(form: LabelUnknownForm): Record<string, unknown> {
  if (form.mode === "create_type") {
    const label = (form.label ?? "").trim();
    if (!label) throw new FormError("a new type needs a non-empty label");
    const answer: Record<string, unknown> = { mode: "create_type", label };
    answer["parent"] = form.parent ?? null;
    if (form.slots && form.slots.length > 0) answer["slots"] = form.slots;
    return answer;
  }
  const typeLabel = (form.typeLabel ?? "").trim();
  if (!typeLabel) throw new FormError("pick an existing type to link to");
  return { mode: "link_type", type_label: typeLabel };
}

export function chooseActionAnswer(form: ChooseActionForm): Record<string, unknown> {
  if (form.mode === "link") {
    if (!form.nearMiss) throw new FormError("pick one of the offered actions");
    return {
      mode: "link",
      action_label: form.nearMiss.action_label,
      object_type: form.nearMiss.object_type,
    };
  }
  return { mode: "teach", ...teachFields(form.skillName, form.steps) };
}

export function teachSkillAnswer(form: TeachSkillForm): Record<string, unknown> {
  return teachFields(form.skillName, form.steps);
}

function teachFields(skillName?: string, steps?: StepForm[]): Record<string, unknown> {
  const name = (skillName ?? "").trim();
  if (!name) throw new FormError("the new skill needs a name");
  return {
    skill_name: name,
    steps: (steps ?? []).map((step) =>
      step.pose ? { op: step.op, pose: step.pose } : { op: step.op },
    ),
  };
}

/** Dispatch on the prompt kind; form must match the card being shown. */
export function buildAnswer(prompt: Prompt, form: unknown): Record<string, unknown> {
  switch (prompt.kind) {
    case "confirm_object":
      return confirmObjectAnswer(form as ConfirmObjectForm);
    case "label_unknown_object":
      return labelUnknownAnswer(form as LabelUnknownForm);
    case "choose_action":
      return chooseActionAnswer(form as ChooseActionForm);
    case "teach_skill":
      return teachSkillAnswer(form as TeachSkillForm);
  }
}
