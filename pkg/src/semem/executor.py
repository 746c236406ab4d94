"""Simulated actuator: runs resolved plans as ordered primitive steps.

Only ``remove_patient`` and ``place_patient`` steps touch the scene graph;
everything else is recorded motion.  Step timestamps come from a logical
clock so replays are bit-stable; a failure-injection hook lets tests drive
the failed-execution paths.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import DuplicateSkill, StalePlan, UnknownSkill
from .graph import KnowledgeGraph, NodeKind, Pose
from .resolver import ResolvedPlan


class LogicalClock:
    """Monotone integer clock; replays produce identical timestamps."""

    def __init__(self, start: int = 0):
        self._lock = threading.Lock()
        self._now = start

    def tick(self) -> int:
        with self._lock:
            self._now += 1
            return self._now

    @property
    def now(self) -> int:
        return self._now


class StepKind(str, Enum):
    MOVE_TO = "move_to"
    GRIP_CLOSE = "grip_close"
    GRIP_OPEN = "grip_open"
    REMOVE_PATIENT = "remove_patient"
    PLACE_PATIENT = "place_patient"


@dataclass(frozen=True)
class SkillStep:
    kind: StepKind
    pose: Optional[Pose] = None  # move_to with no pose targets the patient's position

    def to_dict(self) -> dict:
        d = {"op": self.kind.value}
        if self.pose is not None:
            d["pose"] = {"position": list(self.pose.position),
                         "orientation": list(self.pose.orientation)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SkillStep":
        kind = StepKind(d["op"])
        pose = None
        if d.get("pose") is not None:
            p = d["pose"]
            pose = Pose(*p["position"], *p["orientation"])
        return cls(kind, pose)


@dataclass(frozen=True)
class Skill:
    name: str
    steps: tuple[SkillStep, ...]


class SkillRegistry:
    def __init__(self):
        self._skills: dict[str, Skill] = {}

    def register(self, name: str, steps: list[SkillStep] | tuple[SkillStep, ...]) -> None:
        if name in self._skills:
            raise DuplicateSkill(f"skill {name!r} already registered", name=name)
        self._skills[name] = Skill(name, tuple(steps))

    def get(self, name: str) -> Skill:
        if name not in self._skills:
            raise UnknownSkill(f"no skill named {name!r}", name=name)
        return self._skills[name]

    def __contains__(self, name: str) -> bool:
        return name in self._skills

    def __len__(self) -> int:
        return len(self._skills)

    def names(self) -> list[str]:
        return sorted(self._skills)

    def snapshot(self) -> dict[str, Skill]:
        return dict(self._skills)

    def adopt(self, skills: dict[str, Skill]) -> None:
        self._skills = dict(skills)


@dataclass(frozen=True)
class StepRun:
    index: int
    kind: StepKind
    timestamp: int
    pose: Optional[Pose] = None

    def to_dict(self) -> dict:
        d = {"index": self.index, "op": self.kind.value, "timestamp": self.timestamp}
        if self.pose is not None:
            d["pose"] = {"position": list(self.pose.position),
                         "orientation": list(self.pose.orientation)}
        return d


@dataclass
class ExecutionRecord:
    plan: ResolvedPlan
    skill_name: str
    steps_run: list[StepRun] = field(default_factory=list)
    success: bool = True
    failed_step: Optional[int] = None
    failure_reason: Optional[str] = None
    removed: list[str] = field(default_factory=list)
    moved: list[tuple[str, Pose]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "skill": self.skill_name,
            "steps_run": [s.to_dict() for s in self.steps_run],
            "result": ("success" if self.success
                       else {"failed_step": self.failed_step,
                             "reason": self.failure_reason}),
            "scene_delta": {
                "removed": list(self.removed),
                "moved": [{"label": label,
                           "pose": {"position": list(pose.position),
                                    "orientation": list(pose.orientation)}}
                          for label, pose in self.moved],
            },
        }


SEED_OBJECT_TYPES = ("Nut", "Screw", "Box", "Clip")
DROPOFF_POSE = Pose(400.0, -200.0, 50.0)


class Executor:
    def __init__(self, graph: KnowledgeGraph, registry: Optional[SkillRegistry] = None,
                 clock: Optional[LogicalClock] = None):
        self.graph = graph
        self.registry = registry if registry is not None else SkillRegistry()
        self.clock = clock if clock is not None else LogicalClock()
        # failure injection: make the step at this index fail (tests only)
        self.fail_at_step: Optional[int] = None

    def execute(self, plan: ResolvedPlan) -> ExecutionRecord:
        """Run the plan's skill step by step, mutating the scene as steps dictate."""
        for node_id, label in ((plan.patient_instance, plan.patient_label),
                               (plan.actor_instance, plan.actor_label)):
            node = self.graph.get_node(node_id)
            if node is None or node.kind is not NodeKind.OBJECT_INSTANCE:
                raise StalePlan(f"instance {label!r} is no longer in the scene",
                                label=label)
        skill = self.registry.get(plan.skill_ref)

        record = ExecutionRecord(plan=plan, skill_name=skill.name)
        for index, step in enumerate(skill.steps):
            timestamp = self.clock.tick()
            if self.fail_at_step is not None and index == self.fail_at_step:
                record.success = False
                record.failed_step = index
                record.failure_reason = "injected failure"
                return record
            try:
                pose = self._apply_step(plan, step, record)
            except StalePlan as exc:
                record.success = False
                record.failed_step = index
                record.failure_reason = exc.message
                return record
            record.steps_run.append(StepRun(index, step.kind, timestamp, pose))
        return record

    def _apply_step(self, plan: ResolvedPlan, step: SkillStep,
                    record: ExecutionRecord) -> Optional[Pose]:
        if step.kind in (StepKind.GRIP_CLOSE, StepKind.GRIP_OPEN):
            return None
        patient = self.graph.get_node(plan.patient_instance)
        if step.kind is StepKind.MOVE_TO:
            if step.pose is not None:
                return step.pose
            if patient is None:
                raise StalePlan(f"patient {plan.patient_label!r} left the scene mid-skill")
            value = self.graph.instance_slots(plan.patient_instance).get("position")
            return value if isinstance(value, Pose) else None
        if patient is None or patient.kind is not NodeKind.OBJECT_INSTANCE:
            raise StalePlan(f"patient {plan.patient_label!r} left the scene mid-skill")
        if step.kind is StepKind.REMOVE_PATIENT:
            self.graph.remove_instance(plan.patient_instance)
            record.removed.append(plan.patient_label)
            return None
        if step.kind is StepKind.PLACE_PATIENT:
            slot = self.graph.instance_slot_node(plan.patient_instance, "position")
            if slot is not None:
                slot.value = step.pose
            record.moved.append((plan.patient_label, step.pose))
            return step.pose
        raise UnknownSkill(f"unhandled step kind {step.kind}")  # defensive


def pick_skill_steps() -> tuple[SkillStep, ...]:
    return (
        SkillStep(StepKind.MOVE_TO),           # to the patient
        SkillStep(StepKind.GRIP_CLOSE),
        SkillStep(StepKind.REMOVE_PATIENT),
    )


def place_skill_steps(dropoff: Pose = DROPOFF_POSE) -> tuple[SkillStep, ...]:
    return (
        SkillStep(StepKind.MOVE_TO, dropoff),
        SkillStep(StepKind.GRIP_OPEN),
        SkillStep(StepKind.PLACE_PATIENT, dropoff),
    )


def register_builtin_skills(graph: KnowledgeGraph, registry: SkillRegistry,
                            actor_type: str = "YuMi") -> list[str]:
    """Install pick/place skill templates for the seed object types.

    Also records the action edges so the actor can immediately use them.
    Raises DuplicateSkill when any builtin is already present.
    """
    installed = []
    for type_label in SEED_OBJECT_TYPES:
        lower = type_label.lower()
        pick_name = f"pick_{lower}_skill"
        place_name = f"place_{lower}_skill"
        registry.register(pick_name, pick_skill_steps())
        registry.register(place_name, place_skill_steps())
        installed.extend([pick_name, place_name])
        if graph.find_type(type_label) is not None and graph.find_type(actor_type) is not None:
            graph.define_action(actor_type, "pick", type_label, pick_name)
            graph.define_action(actor_type, "place", type_label, place_name)
    return installed
