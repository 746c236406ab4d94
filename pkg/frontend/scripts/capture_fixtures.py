#!/usr/bin/env python3
"""Capture real service traffic as fixtures for the console's headless tests.

Runs the workbench scenes through the engine via the HTTP app and records:
  - exp1: the full event stream plus the final /graph payload
    (drives the view-state convergence check);
  - exp3: each prompt with the operator's answer and the resulting effects
    (drives the prompt-form round-trip checks).

Re-run after changing the service contract:  python3 scripts/capture_fixtures.py
"""

import json
import sys
from pathlib import Path

from semem.client import SememClient
from semem.seed import build_seed_engine

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
SCENARIOS = ROOT.parent / "scenarios"


def write(name: str, payload) -> None:
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(ROOT)}")


def capture_exp1() -> None:
    engine = build_seed_engine()
    with SememClient(engine=engine) as client:
        client.ingest_scene(json.loads((SCENARIOS / "exp1.scene.json").read_text()))
        client.instruct("YuMi, pick the screw!")
        client.instruct("YuMi, pick the green nut!")
        write("exp1_events.json", client.events(0))
        write("exp1_graph.json", client.graph())


def capture_exp3() -> None:
    engine = build_seed_engine()
    rounds = []
    with SememClient(engine=engine) as client:
        client.ingest_scene(json.loads((SCENARIOS / "exp3.scene.json").read_text()))

        prompt = client.open_prompt()
        choice = {"mode": "create_type", "label": "new_obj", "parent": None,
                  "slots": ["color", "shape", "position"]}
        rounds.append({"prompt": prompt, "choice": choice,
                       "effects": client.answer(prompt["id"], choice)})

        result = client.instruct("YuMi, pick the new_obj!")
        prompt = result["prompt"]
        choice = {"mode": "link", "action_label": "pick", "object_type": "Box"}
        rounds.append({"prompt": prompt, "choice": choice,
                       "effects": client.answer(prompt["id"], choice)})

        # teach branch: a second unknown taught a fresh skill end to end
        result = client.instruct("YuMi, test the box!")
        prompt = result["prompt"]
        choice = {"skill_name": "test_box_skill", "steps": [{"op": "move_to"}]}
        rounds.append({"prompt": prompt, "choice": choice,
                       "effects": client.answer(prompt["id"], choice)})

        write("exp3_prompt_rounds.json", rounds)
        write("exp3_graph.json", client.graph())


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    capture_exp1()
    capture_exp3()
    return 0


if __name__ == "__main__":
    sys.exit(main())
