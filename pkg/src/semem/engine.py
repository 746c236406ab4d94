"""Runtime facade tying the subsystems together behind one writer lock.

Every mutation (scene ingest, instruction, prompt answer, reset) is
serialized through the engine's lock and emits ordered events; reads run
against snapshots.  The service and the CLI both drive this object and
nothing else.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import persistence
from .errors import DialogueBusy
from .events import EventKind, EventLog
from .executor import ExecutionRecord, Executor, LogicalClock, SkillRegistry
from .graph import KnowledgeGraph, Subgraph
from .lexicon import Lexicon, default_lexicon
from .nlparse import IntentFrame, Strategy, parse
from .perception import (
    Observation,
    Perception,
    SignatureDatabase,
    parse_scene_document,
)
from .resolver import (
    NeedsActionConfirmation,
    NeedsObjectConfirmation,
    Resolved,
    ResolutionOutcome,
    outcome_to_dict,
    resolve,
)
from .session import Prompt, PromptState, Session


@dataclass
class InstructionResult:
    frame: IntentFrame
    outcome: ResolutionOutcome
    record: Optional[ExecutionRecord] = None
    prompt: Optional[Prompt] = None

    @property
    def status(self) -> str:
        if self.record is not None:
            return "executed" if self.record.success else "execution_failed"
        return self.outcome.kind

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "frame": self.frame.to_dict(),
            "outcome": outcome_to_dict(self.outcome),
        }
        if self.record is not None:
            d["record"] = self.record.to_dict()
        if self.prompt is not None:
            d["prompt"] = self.prompt.to_dict()
        return d


class Engine:
    def __init__(self, graph: Optional[KnowledgeGraph] = None,
                 signatures: Optional[SignatureDatabase] = None,
                 skills: Optional[SkillRegistry] = None,
                 lexicon: Optional[Lexicon] = None,
                 prompt_timeout: Optional[float] = None,
                 event_capacity: int = 10_000,
                 log_path: Optional[str | Path] = None):
        self.lock = threading.RLock()
        self.graph = graph if graph is not None else KnowledgeGraph()
        self.lexicon = lexicon if lexicon is not None else default_lexicon()
        self.clock = LogicalClock()
        self.signatures = signatures if signatures is not None else SignatureDatabase()
        self.skills = skills if skills is not None else SkillRegistry()
        self.perception = Perception(self.graph, self.signatures)
        self.executor = Executor(self.graph, self.skills, self.clock)
        self.session = Session(self.graph, self.perception, self.executor,
                               self.clock, prompt_timeout)
        self.events = EventLog(event_capacity)
        self.execution_log: list[dict] = []
        self.log_path = Path(log_path) if log_path is not None else None
        self.default_strategy = Strategy.HEURISTIC

    @classmethod
    def from_document(cls, path: str | Path, lexicon: Optional[Lexicon] = None,
                      prompt_timeout: Optional[float] = None,
                      log_path: Optional[str | Path] = None) -> "Engine":
        graph, signatures, skills = persistence.load(path)
        return cls(graph, signatures, skills, lexicon, prompt_timeout,
                   log_path=log_path)

    # ------------------------------------------------------------------ #
    # mutations
    # ------------------------------------------------------------------ #

    def ingest_observations(self, observations: list[Observation]) -> dict:
        """Classify and instantiate a batch of observations; prompt on unknowns."""
        with self.lock:
            self._sweep_expired()
            if self.session.open_prompt() is not None:
                raise DialogueBusy("cannot ingest while a prompt is awaiting an answer")
            report = self.perception.ingest_scene(observations)
            summary = {
                "instantiated": [{"node_id": nid,
                                  "label": self.graph.node(nid).label,
                                  "type": type_label}
                                 for nid, type_label in report.instantiated],
                "unknowns": len(report.unknowns),
                "discarded": report.discarded,
            }
            self.events.append(EventKind.SCENE_INGESTED, summary)
            if report.instantiated:
                self._graph_changed("scene_ingested")
            prompt = self.session.queue_unknowns(report.unknowns)
            if prompt is not None:
                summary["prompt"] = prompt.to_dict()
                self.events.append(EventKind.PROMPT_OPENED, {"prompt": prompt.to_dict()})
            return summary

    def ingest_scene_document(self, text: str) -> dict:
        return self.ingest_observations(parse_scene_document(text))

    def instruct(self, text: str, strategy: Strategy | str | None = None) -> InstructionResult:
        """Parse, ground and (when fully resolved) execute one instruction."""
        with self.lock:
            self._sweep_expired()
            chosen = Strategy(strategy) if strategy else self.default_strategy
            frame = parse(text, chosen, self.lexicon)
            outcome = resolve(self.graph, frame)
            result = InstructionResult(frame=frame, outcome=outcome)
            if isinstance(outcome, Resolved):
                record = self.executor.execute(outcome.plan)
                result.record = record
                self._record_execution(record.to_dict())
                self._graph_changed("execution")
            elif isinstance(outcome, NeedsObjectConfirmation):
                result.prompt = self.session.raise_confirm_object(outcome)
                self.events.append(EventKind.PROMPT_OPENED,
                                   {"prompt": result.prompt.to_dict()})
            elif isinstance(outcome, NeedsActionConfirmation):
                result.prompt = self.session.raise_action_prompt(outcome, frame)
                self.events.append(EventKind.PROMPT_OPENED,
                                   {"prompt": result.prompt.to_dict()})
            return result

    def answer_prompt(self, prompt_id: int, choice: dict) -> list[dict]:
        """Apply a prompt answer; emits prompt/exec/graph events for the effects."""
        with self.lock:
            effects = self.session.answer(prompt_id, choice)
            self.events.append(EventKind.PROMPT_CLOSED,
                               {"prompt_id": prompt_id, "state": "answered"})
            graph_touched = False
            for effect in effects:
                name = effect.get("effect")
                if name == "execution":
                    self._record_execution(effect["record"])
                    graph_touched = True
                elif name in ("type_created", "instance_created", "action_defined"):
                    graph_touched = True
                elif name == "prompt_opened":
                    self.events.append(EventKind.PROMPT_OPENED,
                                       {"prompt": effect["prompt"]})
            if graph_touched:
                self._graph_changed("prompt_answered")
            return effects

    def reset_scene(self) -> int:
        with self.lock:
            removed = self.graph.reset_scene()
            if removed:
                self._graph_changed("scene_reset")
            return removed

    # ------------------------------------------------------------------ #
    # reads
    # ------------------------------------------------------------------ #

    def open_prompt(self) -> Optional[Prompt]:
        with self.lock:
            self._sweep_expired()
            return self.session.open_prompt()

    def graph_export(self) -> dict:
        """Node/edge lists with subgraph tags, for visualization and sync."""
        with self.lock:
            graph = self.graph
            return {
                "nodes": [
                    {"id": n.id, "label": n.label, "subgraph": n.subgraph.value,
                     "kind": n.kind.value,
                     "value": persistence.encode_value(n.value),
                     "skill_ref": n.skill_ref}
                    for n in sorted(graph.nodes(), key=lambda n: n.id)
                ],
                "edges": [
                    {"id": e.id, "source": e.source, "dest": e.dest,
                     "kind": e.kind.value, "action_label": e.action_label}
                    for e in sorted(graph.edges(), key=lambda e: e.sort_key())
                ],
                "counters": dict(sorted(graph.counters().items())),
                "scene_labels": sorted(n.label for n in graph.scene_instances()),
            }

    def export_document(self, include_scene: bool = False) -> dict:
        with self.lock:
            return persistence.document_dict(self.graph, self.signatures, self.skills,
                                             include_scene)

    def save(self, destination: str | Path, include_scene: bool = False) -> int:
        with self.lock:
            return persistence.save(self.graph, self.signatures, self.skills,
                                    destination, include_scene)

    def check_invariants(self) -> list[str]:
        with self.lock:
            return self.graph.check_invariants()

    def scene_labels(self) -> list[str]:
        with self.lock:
            return sorted(n.label for n in self.graph.scene_instances())

    def log_slice(self, start: int = 0, limit: Optional[int] = None) -> list[dict]:
        with self.lock:
            rows = self.execution_log[start:]
            return rows[:limit] if limit is not None else rows

    # ------------------------------------------------------------------ #
    # internals
    # ------------------------------------------------------------------ #

    def _graph_changed(self, reason: str) -> None:
        export = self.graph_export()
        self.events.append(EventKind.GRAPH_CHANGED, {"reason": reason, "graph": export})

    def _record_execution(self, record: dict) -> None:
        self.execution_log.append(record)
        if self.log_path is not None:
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        self.events.append(EventKind.EXECUTION_RECORDED, {"record": record})

    def _sweep_expired(self) -> None:
        expired = self.session.expire_stale()
        if expired is not None and expired.state is PromptState.EXPIRED:
            self.events.append(EventKind.PROMPT_CLOSED,
                               {"prompt_id": expired.id, "state": "expired"})

    def snapshot_scene_counts(self) -> dict:
        with self.lock:
            return {
                "nodes": len(self.graph.nodes()),
                "edges": len(self.graph.edges()),
                "instances": len(self.graph.scene_instances()),
                "prior_nodes": sum(1 for n in self.graph.nodes()
                                   if n.subgraph is Subgraph.PRIOR),
            }
