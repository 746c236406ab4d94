"""Grounding of intent frames against the knowledge graph.

Follows the execution procedure: look the named actor and object up among the
prior type concepts, gather candidate scene instances through the type
closure, filter them by the requested properties, search the action edge, and
either produce a fully resolved plan or a typed outcome asking for help
(closest-match proposal, action suggestion) -- resolve itself never raises.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

logger = logging.getLogger(__name__)

from .errors import StaleProposal
from .graph import (
    KnowledgeGraph,
    NodeId,
    NodeKind,
    Pose,
    PropertyValue,
    instance_number,
    values_match,
)
from .nlparse import IntentFrame


@dataclass(frozen=True)
class ResolvedPlan:
    actor_instance: NodeId
    actor_label: str
    patient_instance: NodeId
    patient_label: str
    action_label: str
    skill_ref: str
    frame: IntentFrame

    def to_dict(self) -> dict:
        return {
            "actor": self.actor_label,
            "patient": self.patient_label,
            "action": self.action_label,
            "skill_ref": self.skill_ref,
        }


@dataclass(frozen=True)
class Resolved:
    kind = "resolved"
    plan: ResolvedPlan


@dataclass(frozen=True)
class NeedsObjectConfirmation:
    """No candidate satisfies every filter; the closest one is proposed instead."""

    kind = "needs_object_confirmation"
    proposed: NodeId
    proposed_label: str
    mismatched: PropertyValue   # the proposed instance's actual value
    requested: PropertyValue    # what the instruction asked for
    plan_if_accepted: ResolvedPlan


@dataclass(frozen=True)
class NeedsActionConfirmation:
    """The action label exists only for other object types; the user may link one."""

    kind = "needs_action_confirmation"
    near_misses: tuple[tuple[str, str], ...]  # (action_label, object_type)
    actor_type: str
    patient_type: str
    action_label: str


@dataclass(frozen=True)
class UnknownTypeWord:
    kind = "unknown_type_word"
    word: str


@dataclass(frozen=True)
class NoInstanceInScene:
    kind = "no_instance_in_scene"
    type_label: str


@dataclass(frozen=True)
class NoActorInScene:
    kind = "no_actor_in_scene"
    actor_type: str


ResolutionOutcome = Union[
    Resolved,
    NeedsObjectConfirmation,
    NeedsActionConfirmation,
    UnknownTypeWord,
    NoInstanceInScene,
    NoActorInScene,
]


def _closest_candidate(graph: KnowledgeGraph, candidates: list[NodeId],
                       filters: list[PropertyValue]) -> tuple[NodeId, PropertyValue, PropertyValue]:
    """Candidate minimizing violated filters (ties: instance number), plus the first mismatch."""

    def violations(nid: NodeId) -> int:
        slots = graph.instance_slots(nid)
        return sum(0 if values_match(slots.get(f.slot.casefold()), f.value) else 1
                   for f in filters)

    best = min(candidates,
               key=lambda nid: (violations(nid),
                                instance_number(graph.node(nid).label),
                                graph.node(nid).label))
    slots = graph.instance_slots(best)
    for f in filters:
        actual = slots.get(f.slot.casefold())
        if not values_match(actual, f.value):
            return best, PropertyValue(f.slot, actual if actual is not None else ""), f
    # unreachable when called with an empty filtered set
    first = filters[0]
    return best, PropertyValue(first.slot, slots.get(first.slot.casefold(), "")), first


def resolve(graph: KnowledgeGraph, frame: IntentFrame) -> ResolutionOutcome:
    """Ground a frame: all failures come back as outcome variants, never exceptions."""
    actor_type = graph.find_type(frame.actor)
    if actor_type is None:
        return UnknownTypeWord(word=frame.actor)
    patient_type = graph.find_type(frame.patient.type_word)
    if patient_type is None:
        return UnknownTypeWord(word=frame.patient.type_word)

    actor_instances = graph.query_instances(actor_type.label)
    if not actor_instances:
        return NoActorInScene(actor_type=actor_type.label)
    actor_id = actor_instances[0]

    candidates = graph.query_instances(patient_type.label)
    if not candidates:
        return NoInstanceInScene(type_label=patient_type.label)

    filters = list(frame.patient.modifiers)
    filtered = graph.query_instances(patient_type.label, filters)

    lookup = graph.lookup_action(actor_type.label, frame.action, patient_type.label)
    if lookup.exact is None:
        return NeedsActionConfirmation(
            near_misses=lookup.near_misses,
            actor_type=actor_type.label,
            patient_type=patient_type.label,
            action_label=frame.action,
        )

    def plan_for(patient_id: NodeId) -> ResolvedPlan:
        return ResolvedPlan(
            actor_instance=actor_id,
            actor_label=graph.node(actor_id).label,
            patient_instance=patient_id,
            patient_label=graph.node(patient_id).label,
            action_label=frame.action,
            skill_ref=lookup.exact.skill_ref,
            frame=frame,
        )

    if filtered:
        if len(filtered) > 1:
            # "the nut" with several matches: picks the lowest-numbered one
            logger.info("ambiguous reference %r: %d candidates, picking %s",
                        frame.raw, len(filtered), graph.node(filtered[0]).label)
        return Resolved(plan=plan_for(filtered[0]))

    proposed, actual, wanted = _closest_candidate(graph, candidates, filters)
    return NeedsObjectConfirmation(
        proposed=proposed,
        proposed_label=graph.node(proposed).label,
        mismatched=actual,
        requested=wanted,
        plan_if_accepted=plan_for(proposed),
    )


def confirm_object(graph: KnowledgeGraph, outcome: NeedsObjectConfirmation,
                   accepted: bool) -> ResolutionOutcome:
    """Apply the operator's verdict on a closest-match proposal."""
    plan = outcome.plan_if_accepted
    if not accepted:
        patient_type = graph.find_type(plan.frame.patient.type_word)
        label = patient_type.label if patient_type else plan.frame.patient.type_word
        return NoInstanceInScene(type_label=label)
    for node_id in (plan.patient_instance, plan.actor_instance):
        node = graph.get_node(node_id)
        if node is None or node.kind is not NodeKind.OBJECT_INSTANCE:
            raise StaleProposal(
                f"proposed instance {plan.patient_label!r} is no longer in the scene",
                node_id=node_id)
    return Resolved(plan=plan)


def outcome_to_dict(outcome: ResolutionOutcome) -> dict:
    """JSON-ready rendering of any resolution outcome."""
    if isinstance(outcome, Resolved):
        return {"kind": outcome.kind, "plan": outcome.plan.to_dict()}
    if isinstance(outcome, NeedsObjectConfirmation):
        return {
            "kind": outcome.kind,
            "proposed": outcome.proposed_label,
            "mismatched": {"slot": outcome.mismatched.slot,
                           "value": _plain(outcome.mismatched.value)},
            "requested": {"slot": outcome.requested.slot,
                          "value": _plain(outcome.requested.value)},
            "plan_if_accepted": outcome.plan_if_accepted.to_dict(),
        }
    if isinstance(outcome, NeedsActionConfirmation):
        return {
            "kind": outcome.kind,
            "near_misses": [{"action_label": a, "object_type": t}
                            for a, t in outcome.near_misses],
            "actor_type": outcome.actor_type,
            "patient_type": outcome.patient_type,
            "action_label": outcome.action_label,
        }
    if isinstance(outcome, UnknownTypeWord):
        return {"kind": outcome.kind, "word": outcome.word}
    if isinstance(outcome, NoInstanceInScene):
        return {"kind": outcome.kind, "type": outcome.type_label}
    if isinstance(outcome, NoActorInScene):
        return {"kind": outcome.kind, "actor_type": outcome.actor_type}
    raise TypeError(f"not a resolution outcome: {outcome!r}")


def _plain(value):
    if isinstance(value, Pose):
        return {"position": list(value.position), "orientation": list(value.orientation)}
    if isinstance(value, tuple):
        return list(value)
    return value
