"""Deterministic scenario replay: scripted instructions, answers and expectations.

A scenario file points at a prior brain and a scene document, then scripts a
sequence of steps.  Replay drives the engine through the thin client and
checks every expectation; the first mismatch stops the run.  Transcripts use
three labeled blocks per instruction (interpretation, match, execution) so
runs can be diffed by eye.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .client import SememClient, ServiceCallError
from .errors import MalformedDocument

STEP_OPS = ("instruct", "answer", "expect_removed", "expect_prompt", "expect_outcome",
            "expect_scene")


@dataclass
class Scenario:
    prior: Path
    scene: Optional[Path]
    lexicon: Optional[Path]
    strategy: Optional[str]
    script: list[dict]

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise MalformedDocument(f"cannot read scenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"scenario {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict) or "prior" not in raw or "script" not in raw:
            raise MalformedDocument(
                f"scenario {path} must be an object with 'prior' and 'script'")
        base = path.parent
        script = raw["script"]
        if not isinstance(script, list):
            raise MalformedDocument("scenario script must be a list of steps")
        for i, step in enumerate(script):
            if not isinstance(step, dict) or step.get("op") not in STEP_OPS:
                raise MalformedDocument(
                    f"script[{i}]: each step needs an 'op' among {STEP_OPS}")
        return cls(
            prior=base / raw["prior"],
            scene=(base / raw["scene"]) if raw.get("scene") else None,
            lexicon=(base / raw["lexicon"]) if raw.get("lexicon") else None,
            strategy=raw.get("strategy"),
            script=script,
        )


@dataclass
class ReplayResult:
    passed: bool
    steps_run: int
    failure: Optional[str] = None
    transcript: list[str] = field(default_factory=list)


def _frame_lines(frame: dict) -> list[str]:
    mods = ", ".join(f"{m['slot']}={m['value']}" for m in frame["patient"]["modifiers"])
    return [
        f"  actor:    {frame['actor']}",
        f"  action:   {frame['action']}",
        f"  patient:  {frame['patient']['type_word']}"
        + (f" [{mods}]" if mods else "")
        + f" ({frame['patient']['determiner']})",
    ]


def _outcome_lines(outcome: dict) -> list[str]:
    kind = outcome["kind"]
    if kind == "resolved":
        plan = outcome["plan"]
        return [f"  {plan['actor']} --{plan['action']}--> {plan['patient']}"
                f" via {plan['skill_ref']}"]
    if kind == "needs_object_confirmation":
        return [f"  no exact object; proposing {outcome['proposed']}"
                f" ({outcome['mismatched']['slot']}={outcome['mismatched']['value']}"
                f" instead of {outcome['requested']['value']})"]
    if kind == "needs_action_confirmation":
        pairs = ", ".join(f"{m['action_label']}/{m['object_type']}"
                          for m in outcome["near_misses"])
        return [f"  no action for {outcome['patient_type']}; near misses: {pairs or '-'}"]
    if kind == "unknown_type_word":
        return [f"  unknown word: {outcome['word']}"]
    if kind == "no_instance_in_scene":
        return [f"  nothing of type {outcome['type']} in scene"]
    if kind == "no_actor_in_scene":
        return [f"  actor {outcome['actor_type']} not present in scene"]
    return [f"  {kind}"]


def _record_lines(record: dict) -> list[str]:
    delta = record["scene_delta"]
    lines = [f"  skill {record['skill']}: "
             + ("success" if record["result"] == "success"
                else f"FAILED at step {record['result']['failed_step']}")]
    if delta["removed"]:
        lines.append(f"  removed: {', '.join(delta['removed'])}")
    if delta["moved"]:
        lines.append("  moved: " + ", ".join(m["label"] for m in delta["moved"]))
    return lines


class ScenarioRunner:
    def __init__(self, client: SememClient, echo: Callable[[str], None] = print,
                 strategy: Optional[str] = None):
        self.client = client
        self.echo = echo
        self.strategy = strategy
        self.last_status: Optional[str] = None
        self.seen_labels: set[str] = set()

    def _note_scene(self):
        self.seen_labels.update(self.client.graph()["scene_labels"])

    def ingest(self, observations: list[dict]) -> dict:
        report = self.client.ingest_scene(observations)
        self._note_scene()
        names = [row["label"] for row in report["instantiated"]]
        self.echo(f"[scene] instantiated: {', '.join(names) if names else '-'}"
                  f" | unknowns: {report['unknowns']} | discarded: {report['discarded']}")
        if report.get("prompt"):
            self._echo_prompt(report["prompt"])
        return report

    def instruct(self, text: str) -> Optional[dict]:
        self.echo("")
        self.echo(f"> {text}")
        try:
            result = self.client.instruct(text, self.strategy)
        except ServiceCallError as exc:
            self.last_status = f"error:{exc.code}"
            self.echo(f"[interpretation]\n  parse failed: {exc.code}: {exc.message}")
            return None
        self.echo("[interpretation]")
        for line in _frame_lines(result["frame"]):
            self.echo(line)
        self.echo("[match]")
        for line in _outcome_lines(result["outcome"]):
            self.echo(line)
        if "record" in result:
            self.echo("[execution]")
            for line in _record_lines(result["record"]):
                self.echo(line)
        if result.get("prompt"):
            self._echo_prompt(result["prompt"])
        self.last_status = result["status"]
        self._note_scene()
        return result

    def answer(self, choice: dict) -> list[dict]:
        prompt = self.client.open_prompt()
        if prompt is None:
            raise ServiceCallError(409, "no_open_prompt", "no prompt is awaiting an answer")
        effects = self.client.answer(prompt["id"], choice)
        self.echo(f"[answer] prompt {prompt['id']} ({prompt['kind']}):")
        status = "answered"
        for effect in effects:
            name = effect["effect"]
            if name == "execution":
                status = "executed" if effect["success"] else "execution_failed"
                self.echo("  execution: " + ("success" if effect["success"] else "failed"))
                for line in _record_lines(effect["record"]):
                    self.echo(line)
            elif name == "resolution":
                kind = effect["outcome"]["kind"]
                if kind != "resolved":
                    status = kind
                self.echo(f"  resolution: {kind}")
            elif name == "prompt_opened":
                self._echo_prompt(effect["prompt"])
            else:
                detail = {k: v for k, v in effect.items() if k != "effect"}
                self.echo(f"  {name}: {json.dumps(detail, sort_keys=True)}")
        self.last_status = status
        self._note_scene()
        return effects

    def _echo_prompt(self, prompt: dict):
        self.echo(f"[prompt #{prompt['id']}] {prompt['kind']}: "
                  f"{json.dumps(prompt['payload'], sort_keys=True)}")


def replay(scenario: Scenario, client: SememClient,
           echo: Callable[[str], None] = print) -> ReplayResult:
    """Run a scenario start to finish; stops at the first failed expectation."""
    transcript: list[str] = []

    def capture(line: str):
        transcript.append(line)
        echo(line)

    runner = ScenarioRunner(client, echo=capture, strategy=scenario.strategy)
    if scenario.scene is not None:
        observations = json.loads(Path(scenario.scene).read_text())
        runner.ingest(observations)

    for index, step in enumerate(scenario.script):
        op = step["op"]
        where = f"script[{index}] {op}"
        try:
            if op == "instruct":
                runner.instruct(step["text"])
            elif op == "answer":
                runner.answer(step["choice"])
            elif op == "expect_outcome":
                wanted = step["status"]
                if runner.last_status != wanted:
                    return ReplayResult(False, index,
                                        f"{where}: expected status {wanted!r}, "
                                        f"got {runner.last_status!r}", transcript)
            elif op == "expect_prompt":
                prompt = client.open_prompt()
                kind = prompt["kind"] if prompt else None
                if kind != step["kind"]:
                    return ReplayResult(False, index,
                                        f"{where}: expected open prompt {step['kind']!r}, "
                                        f"got {kind!r}", transcript)
            elif op == "expect_removed":
                label = step["label"]
                current = set(client.graph()["scene_labels"])
                if label not in runner.seen_labels:
                    return ReplayResult(False, index,
                                        f"{where}: {label!r} never appeared in the scene",
                                        transcript)
                if label in current:
                    return ReplayResult(False, index,
                                        f"{where}: {label!r} is still in the scene",
                                        transcript)
            elif op == "expect_scene":
                wanted = sorted(step["labels"])
                current = sorted(client.graph()["scene_labels"])
                if wanted != current:
                    return ReplayResult(False, index,
                                        f"{where}: scene is {current}, expected {wanted}",
                                        transcript)
        except ServiceCallError as exc:
            return ReplayResult(False, index, f"{where}: service error "
                                f"{exc.code}: {exc.message}", transcript)
    return ReplayResult(True, len(scenario.script), None, transcript)
