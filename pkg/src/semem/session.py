"""Dialogue state machine for human-in-the-loop knowledge growth.

The dialogue is strictly sequential: at most one prompt is open at any
instant, prompt ids only grow.  Answers apply their effects atomically --
any propagated graph error rolls the knowledge graph, the signature database
and the skill registry back to the pre-answer state and leaves the prompt
open.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    DialogueBusy,
    PromptExpired,
    SememError,
    ShapeMismatch,
    UnknownPrompt,
)
from .executor import Executor, LogicalClock, SkillStep
from .graph import KnowledgeGraph, Pose, PropertyValue
from .nlparse import IntentFrame
from .perception import Observation, Perception, observation_to_dict
from .resolver import (
    NeedsActionConfirmation,
    NeedsObjectConfirmation,
    Resolved,
    confirm_object,
    outcome_to_dict,
    resolve,
)

DEFAULT_UNKNOWN_SLOTS = ["color", "shape", "position"]


class PromptKind(str, Enum):
    CONFIRM_OBJECT = "confirm_object"
    CHOOSE_ACTION = "choose_action"
    LABEL_UNKNOWN_OBJECT = "label_unknown_object"
    TEACH_SKILL = "teach_skill"


class PromptState(str, Enum):
    OPEN = "open"
    ANSWERED = "answered"
    EXPIRED = "expired"


@dataclass
class Prompt:
    id: int
    kind: PromptKind
    payload: dict
    created_at: int
    state: PromptState = PromptState.OPEN
    created_mono: float = field(default=0.0, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "payload": self.payload,
            "created_at": self.created_at,
            "state": self.state.value,
        }


class Session:
    def __init__(self, graph: KnowledgeGraph, perception: Perception, executor: Executor,
                 clock: Optional[LogicalClock] = None,
                 prompt_timeout: Optional[float] = None):
        self.graph = graph
        self.perception = perception
        self.executor = executor
        self.clock = clock if clock is not None else executor.clock
        self.prompt_timeout = prompt_timeout
        self._prompts: dict[int, Prompt] = {}
        self._context: dict[int, dict] = {}
        self._next_id = 1
        self._pending: deque[Observation] = deque()

    # ------------------------------------------------------------------ #
    # prompt lifecycle
    # ------------------------------------------------------------------ #

    def prompts(self) -> list[Prompt]:
        return [self._prompts[i] for i in sorted(self._prompts)]

    def get_prompt(self, prompt_id: int) -> Prompt:
        self.expire_stale()
        prompt = self._prompts.get(prompt_id)
        if prompt is None:
            raise UnknownPrompt(f"no prompt with id {prompt_id}", prompt_id=prompt_id)
        return prompt

    def open_prompt(self) -> Optional[Prompt]:
        self.expire_stale()
        for prompt in self._prompts.values():
            if prompt.state is PromptState.OPEN:
                return prompt
        return None

    def expire_stale(self) -> Optional[Prompt]:
        """Lazily expire the open prompt once the idle timeout has elapsed."""
        if self.prompt_timeout is None:
            return None
        for prompt in self._prompts.values():
            if (prompt.state is PromptState.OPEN
                    and time.monotonic() - prompt.created_mono > self.prompt_timeout):
                prompt.state = PromptState.EXPIRED
                return prompt
        return None

    def _open(self, kind: PromptKind, payload: dict, context: dict) -> Prompt:
        if self.open_prompt() is not None:
            raise DialogueBusy("another prompt is already awaiting an answer")
        prompt = Prompt(
            id=self._next_id,
            kind=kind,
            payload=payload,
            created_at=self.clock.tick(),
            created_mono=time.monotonic(),
        )
        self._next_id += 1
        self._prompts[prompt.id] = prompt
        self._context[prompt.id] = context
        return prompt

    # ------------------------------------------------------------------ #
    # raising prompts
    # ------------------------------------------------------------------ #

    def raise_unknown_object(self, obs: Observation) -> Prompt:
        payload = {
            "properties": {
                "color": obs.signature.color_class,
                "shape": obs.signature.shape_class,
                "size": list(obs.signature.size),
            },
            "pose": {"position": list(obs.pose.position),
                     "orientation": list(obs.pose.orientation)},
            "known_types": self.graph.type_labels(),
        }
        return self._open(PromptKind.LABEL_UNKNOWN_OBJECT, payload, {"observation": obs})

    def queue_unknowns(self, observations: list[Observation]) -> Optional[Prompt]:
        """Open a prompt for the first unknown; queue the rest for later."""
        if not observations:
            return None
        first, *rest = observations
        prompt = self.raise_unknown_object(first)
        self._pending.extend(rest)
        return prompt

    def pending_unknowns(self) -> int:
        return len(self._pending)

    def raise_confirm_object(self, outcome: NeedsObjectConfirmation) -> Prompt:
        payload = {
            "proposed": outcome.proposed_label,
            "mismatched": {"slot": outcome.mismatched.slot,
                           "value": _plain_value(outcome.mismatched.value)},
            "requested": {"slot": outcome.requested.slot,
                          "value": _plain_value(outcome.requested.value)},
            "instruction": outcome.plan_if_accepted.frame.raw,
        }
        return self._open(PromptKind.CONFIRM_OBJECT, payload, {"outcome": outcome})

    def raise_action_prompt(self, outcome: NeedsActionConfirmation,
                            frame: IntentFrame) -> Prompt:
        """Choose among near-misses when any exist, else ask for a taught skill."""
        context = {"outcome": outcome, "frame": frame}
        if outcome.near_misses:
            payload = {
                "action_label": outcome.action_label,
                "patient_type": outcome.patient_type,
                "near_misses": [{"action_label": a, "object_type": t}
                                for a, t in outcome.near_misses],
                "instruction": frame.raw,
            }
            return self._open(PromptKind.CHOOSE_ACTION, payload, context)
        payload = {
            "action_label": outcome.action_label,
            "patient_type": outcome.patient_type,
            "instruction": frame.raw,
        }
        return self._open(PromptKind.TEACH_SKILL, payload, context)

    # ------------------------------------------------------------------ #
    # answering
    # ------------------------------------------------------------------ #

    def answer(self, prompt_id: int, choice: dict) -> list[dict]:
        """Apply an operator's answer atomically; returns the applied effects."""
        prompt = self._prompts.get(prompt_id)
        if prompt is None:
            raise UnknownPrompt(f"no prompt with id {prompt_id}", prompt_id=prompt_id)
        self.expire_stale()
        if prompt.state is PromptState.EXPIRED:
            raise PromptExpired(f"prompt {prompt_id} expired before it was answered",
                                prompt_id=prompt_id)
        if prompt.state is not PromptState.OPEN:
            raise UnknownPrompt(f"prompt {prompt_id} was already answered",
                                prompt_id=prompt_id)
        _validate_choice(prompt.kind, choice)

        graph_before = self.graph.snapshot()
        signatures_before = self.perception.database.entries()
        skills_before = self.executor.registry.snapshot()
        try:
            effects = self._apply(prompt, choice)
        except SememError:
            self.graph.adopt(graph_before)
            self.perception.database.adopt(signatures_before)
            self.executor.registry.adopt(skills_before)
            raise
        prompt.state = PromptState.ANSWERED
        if self._pending:
            nxt = self.raise_unknown_object(self._pending.popleft())
            effects.append({"effect": "prompt_opened", "prompt": nxt.to_dict()})
        return effects

    def _apply(self, prompt: Prompt, choice: dict) -> list[dict]:
        context = self._context[prompt.id]
        if prompt.kind is PromptKind.LABEL_UNKNOWN_OBJECT:
            return self._apply_label_unknown(context["observation"], choice)
        if prompt.kind is PromptKind.CONFIRM_OBJECT:
            return self._apply_confirm_object(context["outcome"], choice)
        if prompt.kind is PromptKind.CHOOSE_ACTION:
            return self._apply_choose_action(context["outcome"], context["frame"], choice)
        return self._apply_teach_skill(context["outcome"], context["frame"], choice)

    def _apply_label_unknown(self, obs: Observation, choice: dict) -> list[dict]:
        effects: list[dict] = []
        if choice["mode"] == "create_type":
            label = choice["label"]
            slots = choice.get("slots") or list(DEFAULT_UNKNOWN_SLOTS)
            self.graph.add_type(label, choice.get("parent"), slots)
            effects.append({"effect": "type_created", "label": label,
                            "parent": choice.get("parent"), "slots": slots})
            type_label = label
        else:  # link_type
            type_label = choice["type_label"]
        self.perception.register_type_signature(type_label, obs.signature)
        effects.append({"effect": "signature_registered", "type": type_label})
        slot_names = {s.casefold() for s in self.graph.type_slots(type_label)}
        values = []
        if "color" in slot_names:
            values.append(PropertyValue("color", obs.signature.color_class))
        if "shape" in slot_names:
            values.append(PropertyValue("shape", obs.signature.shape_class))
        node_id = self.graph.instantiate(type_label, values, obs.pose)
        effects.append({"effect": "instance_created",
                        "label": self.graph.node(node_id).label,
                        "type": self.graph.find_type(type_label).label})
        return effects

    def _apply_confirm_object(self, outcome: NeedsObjectConfirmation,
                              choice: dict) -> list[dict]:
        result = confirm_object(self.graph, outcome, bool(choice["accepted"]))
        effects = [{"effect": "resolution", "outcome": outcome_to_dict(result)}]
        if isinstance(result, Resolved):
            record = self.executor.execute(result.plan)
            effects.append({"effect": "execution", "success": record.success,
                            "record": record.to_dict()})
        return effects

    def _apply_choose_action(self, outcome: NeedsActionConfirmation,
                             frame: IntentFrame, choice: dict) -> list[dict]:
        if choice["mode"] == "link":
            pair = (choice["action_label"], choice["object_type"])
            if pair not in outcome.near_misses:
                raise ShapeMismatch(
                    f"choice {pair!r} is not among the offered near-misses",
                    offered=list(outcome.near_misses))
            donor = self.graph.lookup_action(outcome.actor_type, pair[0], pair[1])
            skill_ref = donor.exact.skill_ref
        else:  # teach
            skill_ref = choice["skill_name"]
            steps = [SkillStep.from_dict(s) for s in choice["steps"]]
            self.teach_skill(skill_ref, steps)
        return self._define_and_run(outcome, frame, skill_ref,
                                    taught=choice["mode"] == "teach")

    def _apply_teach_skill(self, outcome: NeedsActionConfirmation,
                           frame: IntentFrame, choice: dict) -> list[dict]:
        skill_ref = choice["skill_name"]
        steps = [SkillStep.from_dict(s) for s in choice["steps"]]
        self.teach_skill(skill_ref, steps)
        return self._define_and_run(outcome, frame, skill_ref, taught=True)

    def _define_and_run(self, outcome: NeedsActionConfirmation, frame: IntentFrame,
                        skill_ref: str, taught: bool) -> list[dict]:
        effects: list[dict] = []
        if taught:
            effects.append({"effect": "skill_taught", "name": skill_ref})
        self.graph.define_action(outcome.actor_type, outcome.action_label,
                                 outcome.patient_type, skill_ref)
        effects.append({
            "effect": "action_defined",
            "actor_type": outcome.actor_type,
            "action_label": outcome.action_label,
            "object_type": outcome.patient_type,
            "skill_ref": skill_ref,
        })
        result = resolve(self.graph, frame)
        effects.append({"effect": "resolution", "outcome": outcome_to_dict(result)})
        if isinstance(result, Resolved):
            record = self.executor.execute(result.plan)
            effects.append({"effect": "execution", "success": record.success,
                            "record": record.to_dict()})
        return effects

    def teach_skill(self, name: str, steps: list[SkillStep]) -> None:
        """Record a demonstrated skill as an ordered primitive-step list."""
        self.executor.registry.register(name, steps)


# ---------------------------------------------------------------------- #
# answer shape validation
# ---------------------------------------------------------------------- #

def _require(condition: bool, message: str):
    if not condition:
        raise ShapeMismatch(message)


def _validate_steps(steps):
    _require(isinstance(steps, list), "steps must be a list")
    for i, step in enumerate(steps):
        _require(isinstance(step, dict) and "op" in step,
                 f"steps[{i}] must be an object with an 'op' field")
        try:
            SkillStep.from_dict(step)
        except (ValueError, KeyError, TypeError) as exc:
            raise ShapeMismatch(f"steps[{i}] is not a valid step: {exc}") from exc


def _validate_choice(kind: PromptKind, choice: dict):
    _require(isinstance(choice, dict), "answer must be a JSON object")
    if kind is PromptKind.CONFIRM_OBJECT:
        _require("accepted" in choice and isinstance(choice["accepted"], bool),
                 "confirm_object answer needs a boolean 'accepted' field")
    elif kind is PromptKind.LABEL_UNKNOWN_OBJECT:
        mode = choice.get("mode")
        _require(mode in ("create_type", "link_type"),
                 "label_unknown_object answer needs mode 'create_type' or 'link_type'")
        if mode == "create_type":
            _require(isinstance(choice.get("label"), str) and choice["label"].strip() != "",
                     "create_type answer needs a non-empty 'label'")
            if choice.get("slots") is not None:
                _require(isinstance(choice["slots"], list)
                         and all(isinstance(s, str) for s in choice["slots"]),
                         "'slots' must be a list of strings")
        else:
            _require(isinstance(choice.get("type_label"), str),
                     "link_type answer needs a 'type_label'")
    elif kind is PromptKind.CHOOSE_ACTION:
        mode = choice.get("mode")
        _require(mode in ("link", "teach"),
                 "choose_action answer needs mode 'link' or 'teach'")
        if mode == "link":
            _require(isinstance(choice.get("action_label"), str)
                     and isinstance(choice.get("object_type"), str),
                     "link answer needs 'action_label' and 'object_type'")
        else:
            _require(isinstance(choice.get("skill_name"), str),
                     "teach answer needs a 'skill_name'")
            _validate_steps(choice.get("steps", []))
    elif kind is PromptKind.TEACH_SKILL:
        _require(isinstance(choice.get("skill_name"), str),
                 "teach_skill answer needs a 'skill_name'")
        _validate_steps(choice.get("steps", []))


def _plain_value(value):
    if isinstance(value, Pose):
        return {"position": list(value.position), "orientation": list(value.orientation)}
    if isinstance(value, tuple):
        return list(value)
    return value
