"""Durable storage for a knowledge "brain": graph + signatures + skills.

One versioned JSON document bundles everything so a saved brain is
self-contained.  Serialization is canonical: nodes sorted by id, edges by
(source, dest, kind, label), signatures and skills sorted, keys sorted --
identical state always produces identical bytes.  Loading re-validates every
graph invariant at the boundary instead of trusting the file.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from .errors import (
    BadSignature,
    GraphIntegrityError,
    IntegrityViolation,
    IoFailure,
    MalformedDocument,
    UnsupportedVersion,
)
from .executor import SkillRegistry, SkillStep
from .graph import Edge, EdgeKind, KnowledgeGraph, Node, NodeKind, Pose, Subgraph
from .perception import Signature, SignatureDatabase

FORMAT_NAME = "semem"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)

PathLike = Union[str, Path]


# --------------------------------------------------------------------- #
# value codec (node/property values: text, number, vector or pose)
# --------------------------------------------------------------------- #

def encode_value(value) -> Optional[dict]:
    if value is None:
        return None
    if isinstance(value, str):
        return {"t": "text", "v": value}
    if isinstance(value, bool):
        raise MalformedDocument(f"boolean is not a storable value: {value!r}")
    if isinstance(value, (int, float)):
        return {"t": "num", "v": float(value)}
    if isinstance(value, Pose):
        return {"t": "pose", "position": list(value.position),
                "orientation": list(value.orientation)}
    if isinstance(value, (tuple, list)) and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in value):
        return {"t": "vec", "v": [float(c) for c in value]}
    raise MalformedDocument(f"value {value!r} is not storable")


def decode_value(raw, where: str = "value"):
    if raw is None:
        return None
    if not isinstance(raw, dict) or "t" not in raw:
        raise MalformedDocument(f"{where}: expected a tagged value object")
    tag = raw["t"]
    if tag == "text":
        if not isinstance(raw.get("v"), str):
            raise MalformedDocument(f"{where}: text value must be a string")
        return raw["v"]
    if tag == "num":
        if not isinstance(raw.get("v"), (int, float)):
            raise MalformedDocument(f"{where}: numeric value must be a number")
        return float(raw["v"])
    if tag == "vec":
        v = raw.get("v")
        if not isinstance(v, list) or not all(isinstance(c, (int, float)) for c in v):
            raise MalformedDocument(f"{where}: vector value must be a number array")
        return tuple(float(c) for c in v)
    if tag == "pose":
        try:
            return Pose(*raw["position"], *raw["orientation"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDocument(f"{where}: bad pose: {exc}") from exc
    raise MalformedDocument(f"{where}: unknown value tag {tag!r}")


# --------------------------------------------------------------------- #
# document assembly
# --------------------------------------------------------------------- #

def document_dict(graph: KnowledgeGraph, signatures: SignatureDatabase,
                  skills: SkillRegistry, include_scene: bool = False) -> dict:
    """Canonical in-memory form of the persistence document."""
    keep = lambda n: include_scene or n.subgraph is Subgraph.PRIOR
    nodes = sorted((n for n in graph.nodes() if keep(n)), key=lambda n: n.id)
    node_ids = {n.id for n in nodes}
    edges = sorted((e for e in graph.edges()
                    if e.source in node_ids and e.dest in node_ids),
                   key=lambda e: e.sort_key())

    sig_rows = sorted(
        ({"type": label,
          "shape": sig.shape_class,
          "color": sig.color_class,
          "size": list(sig.size),
          "descriptor": list(sig.descriptor) if sig.descriptor is not None else None}
         for label, sig in signatures.entries()),
        key=lambda r: json.dumps(r, sort_keys=True))
    skill_rows = [{"name": name, "steps": [s.to_dict() for s in skill.steps]}
                  for name, skill in sorted(skills.snapshot().items())]

    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "includes_scene": include_scene,
        "nodes": [
            {"id": n.id, "label": n.label, "subgraph": n.subgraph.value,
             "kind": n.kind.value, "value": encode_value(n.value),
             "skill_ref": n.skill_ref}
            for n in nodes
        ],
        "edges": [
            {"id": e.id, "source": e.source, "dest": e.dest,
             "kind": e.kind.value, "action_label": e.action_label}
            for e in edges
        ],
        "counters": dict(sorted(graph.counters().items())),
        "signatures": sig_rows,
        "skills": skill_rows,
    }


def render_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save(graph: KnowledgeGraph, signatures: SignatureDatabase, skills: SkillRegistry,
         destination: PathLike, include_scene: bool = False) -> int:
    """Write the canonical document; returns the byte count written."""
    text = render_document(document_dict(graph, signatures, skills, include_scene))
    data = text.encode("utf-8")
    try:
        Path(destination).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc
    return len(data)


# --------------------------------------------------------------------- #
# loading
# --------------------------------------------------------------------- #

def _field(obj: dict, name: str, types, where: str):
    if name not in obj:
        raise MalformedDocument(f"{where}: missing field {name!r}")
    value = obj[name]
    if not isinstance(value, types) or isinstance(value, bool) and types is not bool:
        raise MalformedDocument(
            f"{where}: field {name!r} has wrong type {type(value).__name__}")
    return value


def parse_document(text: str) -> tuple[KnowledgeGraph, SignatureDatabase, SkillRegistry]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(
            f"not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise MalformedDocument("document root must be an object")
    if raw.get("format") != FORMAT_NAME:
        raise MalformedDocument(f"not a {FORMAT_NAME} document")
    version = raw.get("format_version")
    if not isinstance(version, int):
        raise MalformedDocument("missing or non-integer format_version")
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion(f"format_version {version} is not supported",
                                 supported=list(SUPPORTED_VERSIONS))

    nodes = []
    for i, row in enumerate(_field(raw, "nodes", list, "document")):
        where = f"nodes[{i}]"
        if not isinstance(row, dict):
            raise MalformedDocument(f"{where}: expected an object")
        try:
            subgraph = Subgraph(_field(row, "subgraph", str, where))
            kind = NodeKind(_field(row, "kind", str, where))
        except ValueError as exc:
            raise MalformedDocument(f"{where}: {exc}") from exc
        skill_ref = row.get("skill_ref")
        if skill_ref is not None and not isinstance(skill_ref, str):
            raise MalformedDocument(f"{where}: skill_ref must be a string or null")
        nodes.append(Node(
            id=_field(row, "id", int, where),
            label=_field(row, "label", str, where),
            subgraph=subgraph,
            kind=kind,
            value=decode_value(row.get("value"), where),
            skill_ref=skill_ref,
        ))

    edges = []
    for i, row in enumerate(_field(raw, "edges", list, "document")):
        where = f"edges[{i}]"
        if not isinstance(row, dict):
            raise MalformedDocument(f"{where}: expected an object")
        try:
            kind = EdgeKind(_field(row, "kind", str, where))
        except ValueError as exc:
            raise MalformedDocument(f"{where}: {exc}") from exc
        edges.append(Edge(
            id=_field(row, "id", int, where),
            source=_field(row, "source", int, where),
            dest=_field(row, "dest", int, where),
            kind=kind,
            action_label=row.get("action_label", ""),
        ))

    counters = _field(raw, "counters", dict, "document")
    for label, count in counters.items():
        if not isinstance(count, int) or count < 0:
            raise MalformedDocument(f"counters[{label!r}] must be a non-negative integer")

    try:
        graph = KnowledgeGraph.restore(nodes, edges, dict(counters))
    except GraphIntegrityError as exc:
        raise IntegrityViolation(str(exc)) from exc

    signatures = SignatureDatabase()
    for i, row in enumerate(_field(raw, "signatures", list, "document")):
        where = f"signatures[{i}]"
        if not isinstance(row, dict):
            raise MalformedDocument(f"{where}: expected an object")
        descriptor = row.get("descriptor")
        try:
            sig = Signature(
                shape_class=_field(row, "shape", str, where),
                color_class=_field(row, "color", str, where),
                size=tuple(_field(row, "size", list, where)),
                descriptor=tuple(descriptor) if descriptor is not None else None,
            )
        except (BadSignature, TypeError, ValueError) as exc:
            raise MalformedDocument(f"{where}: {exc}") from exc
        type_label = _field(row, "type", str, where)
        if graph.find_type(type_label) is None:
            raise IntegrityViolation(
                f"{where}: signature references unknown type {type_label!r}")
        signatures.register(type_label, sig)

    skills = SkillRegistry()
    for i, row in enumerate(_field(raw, "skills", list, "document")):
        where = f"skills[{i}]"
        if not isinstance(row, dict):
            raise MalformedDocument(f"{where}: expected an object")
        name = _field(row, "name", str, where)
        steps = []
        for j, step in enumerate(_field(row, "steps", list, where)):
            try:
                steps.append(SkillStep.from_dict(step))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedDocument(f"{where}.steps[{j}]: {exc}") from exc
        if name in skills:
            raise MalformedDocument(f"{where}: duplicate skill {name!r}")
        skills.register(name, steps)

    return graph, signatures, skills


def load(source: PathLike) -> tuple[KnowledgeGraph, SignatureDatabase, SkillRegistry]:
    """Read and validate a brain document from disk."""
    try:
        text = Path(source).read_text("utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {source}: {exc}") from exc
    return parse_document(text)
