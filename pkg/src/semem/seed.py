"""Seed brain for the workbench scenarios: robot + part types, skills, signatures.

Builds the prior knowledge the manipulation experiments start from: a YuMi
robot type, the four part types with color/shape/position slots, pick/place
skills wired as actions, and one reference signature per part variant so the
simulated sensor can classify observations.
"""

from __future__ import annotations

from .engine import Engine
from .executor import register_builtin_skills
from .graph import KnowledgeGraph
from .perception import DESCRIPTOR_DIM, Perception, Signature, SignatureDatabase


def _axis(i: int, sign: float = 1.0) -> tuple[float, ...]:
    v = [0.0] * DESCRIPTOR_DIM
    v[i % DESCRIPTOR_DIM] = sign
    return tuple(v)


# reference signatures per type; clips carry one per size variant
SEED_SIGNATURES = {
    "YuMi": [Signature("robot", "white", (500, 400, 600), _axis(0))],
    "Nut": [Signature("hexagon", "green", (8, 8, 4), _axis(1))],
    "Screw": [Signature("cylinder", "blue", (4, 4, 20), _axis(2))],
    "Box": [Signature("square", "gray", (60, 60, 40), _axis(3))],
    "Clip": [
        Signature("big", "green", (20, 10, 2), _axis(4)),
        Signature("small", "blue", (12, 6, 2), _axis(4)),
    ],
}

SEED_SLOTS = ["color", "shape", "position"]


def build_seed_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    graph.add_type("YuMi", None, ["position"])
    for label in ("Nut", "Screw", "Box", "Clip"):
        graph.add_type(label, None, list(SEED_SLOTS))
    return graph


def build_seed_engine(**engine_kwargs) -> Engine:
    """A fresh engine preloaded with the seed brain."""
    graph = build_seed_graph()
    signatures = SignatureDatabase()
    perception = Perception(graph, signatures)
    for type_label, sigs in SEED_SIGNATURES.items():
        for sig in sigs:
            perception.register_type_signature(type_label, sig)
    engine = Engine(graph=graph, signatures=signatures, **engine_kwargs)
    register_builtin_skills(engine.graph, engine.skills)
    return engine


def write_seed_document(destination) -> int:
    """Save the seed brain as a .semem.json document; returns bytes written."""
    engine = build_seed_engine()
    return engine.save(destination)
