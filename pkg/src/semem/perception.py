"""Simulated sensing front-end: signature classification and scene ingest.

Observations arrive as symbolic + numeric signatures (shape class, color
class, size vector, optional descriptor vector).  Classification is a
nearest-neighbor search over the registered reference signatures; matches are
instantiated in the scene graph, unknowns are handed to the dialogue layer.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from .errors import BadSceneDocument, BadSignature, UnknownType
from .graph import KnowledgeGraph, NodeId, Pose, PropertyValue

DESCRIPTOR_DIM = 16
UNIT_NORM_TOL = 1e-9

# Distance weights: shape dominates type identity, the rest share the remainder.
WEIGHT_SHAPE = 0.4
WEIGHT_COLOR = 0.2
WEIGHT_SIZE = 0.2
WEIGHT_DESCRIPTOR = 0.2

MATCH_THRESHOLD = 0.25

# Observations smaller than this fraction of the smallest reference volume
# are treated as sensor noise and discarded.
MIN_SIZE_FACTOR = 0.5


@dataclass(frozen=True)
class Signature:
    """Perceptual fingerprint of an object."""

    shape_class: str
    color_class: str
    size: tuple[float, float, float]
    descriptor: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "size", tuple(float(c) for c in self.size))
        if len(self.size) != 3 or any(c <= 0 for c in self.size):
            raise BadSignature(f"size must be 3 positive components, got {self.size}")
        if self.descriptor is not None:
            desc = tuple(float(c) for c in self.descriptor)
            object.__setattr__(self, "descriptor", desc)
            if len(desc) != DESCRIPTOR_DIM:
                raise BadSignature(
                    f"descriptor must have {DESCRIPTOR_DIM} components, got {len(desc)}")
            norm = math.sqrt(sum(c * c for c in desc))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise BadSignature(f"descriptor must be unit-norm, got |d|={norm!r}")

    @property
    def volume(self) -> float:
        w, d, h = self.size
        return w * d * h


@dataclass(frozen=True)
class Observation:
    signature: Signature
    pose: Pose


@dataclass(frozen=True)
class Classification:
    """Match(type, distance) or Unknown with the nearest rejected candidate."""

    matched: bool
    type_label: Optional[str] = None
    distance: Optional[float] = None
    nearest: Optional[tuple[str, float]] = None


@dataclass
class IngestReport:
    instantiated: list[tuple[NodeId, str]] = field(default_factory=list)
    unknowns: list[Observation] = field(default_factory=list)
    discarded: int = 0

    def covers(self, n_observations: int) -> bool:
        return len(self.instantiated) + len(self.unknowns) + self.discarded == n_observations


def signature_distance(a: Signature, b: Signature) -> float:
    """Weighted mismatch between two signatures, in [0, 1].

    Shape and color compare as 0/1 class mismatches; size as a normalized
    Euclidean distance; descriptors (when both present) as Euclidean distance
    between unit vectors scaled to [0, 1].
    """
    d = 0.0
    if a.shape_class.strip().casefold() != b.shape_class.strip().casefold():
        d += WEIGHT_SHAPE
    if a.color_class.strip().casefold() != b.color_class.strip().casefold():
        d += WEIGHT_COLOR
    denom = math.sqrt(sum(c * c for c in a.size)) + math.sqrt(sum(c * c for c in b.size))
    if denom > 0:
        d += WEIGHT_SIZE * (math.dist(a.size, b.size) / denom)
    if a.descriptor is not None and b.descriptor is not None:
        d += WEIGHT_DESCRIPTOR * (math.dist(a.descriptor, b.descriptor) / 2.0)
    return d


class SignatureDatabase:
    """Reference signatures per type; single writer, snapshot reads."""

    def __init__(self):
        self._lock = threading.RLock()
        self._entries: list[tuple[str, Signature]] = []

    def register(self, type_label: str, signature: Signature) -> None:
        with self._lock:
            self._entries.append((type_label, signature))

    def entries(self) -> list[tuple[str, Signature]]:
        with self._lock:
            return list(self._entries)

    def for_type(self, type_label: str) -> list[Signature]:
        wanted = type_label.casefold()
        return [sig for label, sig in self.entries() if label.casefold() == wanted]

    def adopt(self, entries: list[tuple[str, Signature]]) -> None:
        with self._lock:
            self._entries = list(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def min_reference_volume(self) -> Optional[float]:
        entries = self.entries()
        if not entries:
            return None
        return min(sig.volume for _, sig in entries)


class Perception:
    """Classifies observations against the prior knowledge and fills the scene graph."""

    def __init__(self, graph: KnowledgeGraph, database: Optional[SignatureDatabase] = None,
                 threshold: float = MATCH_THRESHOLD):
        self.graph = graph
        self.database = database if database is not None else SignatureDatabase()
        self.threshold = threshold

    def register_type_signature(self, type_label: str, signature: Signature) -> None:
        type_node = self.graph.find_type(type_label)
        if type_node is None:
            raise UnknownType(f"unknown type {type_label!r}", label=type_label)
        self.database.register(type_node.label, signature)

    def classify(self, signature: Signature) -> Classification:
        """Nearest reference decides; ties break on the lexicographic type label."""
        best: Optional[tuple[float, str]] = None
        for type_label, reference in self.database.entries():
            d = signature_distance(signature, reference)
            key = (d, type_label)
            if best is None or key < best:
                best = key
        if best is None:
            return Classification(matched=False)
        distance, type_label = best
        if distance <= self.threshold:
            return Classification(matched=True, type_label=type_label, distance=distance)
        return Classification(matched=False, nearest=(type_label, distance))

    def min_volume_threshold(self) -> float:
        smallest = self.database.min_reference_volume()
        return MIN_SIZE_FACTOR * smallest if smallest is not None else 0.0

    def ingest_scene(self, observations: list[Observation]) -> IngestReport:
        """Discard undersized observations, instantiate matches, collect unknowns."""
        report = IngestReport()
        min_volume = self.min_volume_threshold()
        for obs in observations:
            if obs.signature.volume < min_volume:
                report.discarded += 1
                continue
            outcome = self.classify(obs.signature)
            if not outcome.matched:
                report.unknowns.append(obs)
                continue
            type_label = outcome.type_label
            slots = {s.casefold() for s in self.graph.type_slots(type_label)}
            values = []
            if "color" in slots:
                values.append(PropertyValue("color", obs.signature.color_class))
            if "shape" in slots:
                values.append(PropertyValue("shape", obs.signature.shape_class))
            node_id = self.graph.instantiate(type_label, values, obs.pose)
            report.instantiated.append((node_id, type_label))
        return report


# --------------------------------------------------------------------- #
# scene-description documents
# --------------------------------------------------------------------- #

_REQUIRED_FIELDS = {"shape", "color", "size", "position", "orientation"}
_OPTIONAL_FIELDS = {"descriptor"}


def parse_scene_document(text: str) -> list[Observation]:
    """Parse and validate a scene-description JSON document.

    The document is a top-level array of observations:
    ``{"shape": str, "color": str, "size": [w,d,h], "descriptor": [f...]?,
    "position": [x,y,z], "orientation": [yaw,pitch,roll]}``.
    Unknown fields are rejected.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadSceneDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise BadSceneDocument("scene document must be a top-level array")
    observations = []
    for i, item in enumerate(raw):
        observations.append(_parse_observation(item, i))
    return observations


def _parse_observation(item, index: int) -> Observation:
    where = f"observation[{index}]"
    if not isinstance(item, dict):
        raise BadSceneDocument(f"{where}: expected an object")
    unknown = set(item) - _REQUIRED_FIELDS - _OPTIONAL_FIELDS
    if unknown:
        raise BadSceneDocument(f"{where}: unknown fields {sorted(unknown)}")
    missing = _REQUIRED_FIELDS - set(item)
    if missing:
        raise BadSceneDocument(f"{where}: missing fields {sorted(missing)}")
    if not isinstance(item["shape"], str) or not isinstance(item["color"], str):
        raise BadSceneDocument(f"{where}: shape and color must be strings")

    def vec(name, length):
        v = item[name] if name in item else None
        if (not isinstance(v, list) or len(v) != length
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
            raise BadSceneDocument(f"{where}: {name} must be a list of {length} numbers")
        return [float(c) for c in v]

    size = vec("size", 3)
    position = vec("position", 3)
    orientation = vec("orientation", 3)
    descriptor = None
    if "descriptor" in item:
        descriptor = tuple(vec("descriptor", DESCRIPTOR_DIM))
    try:
        signature = Signature(item["shape"], item["color"], tuple(size), descriptor)
        pose = Pose(position[0], position[1], position[2],
                    yaw=orientation[0], pitch=orientation[1], roll=orientation[2])
    except (BadSignature, ValueError) as exc:
        raise BadSceneDocument(f"{where}: {exc}") from exc
    return Observation(signature, pose)


def observation_to_dict(obs: Observation) -> dict:
    doc = {
        "shape": obs.signature.shape_class,
        "color": obs.signature.color_class,
        "size": list(obs.signature.size),
        "position": list(obs.pose.position),
        "orientation": list(obs.pose.orientation),
    }
    if obs.signature.descriptor is not None:
        doc["descriptor"] = list(obs.signature.descriptor)
    return doc
