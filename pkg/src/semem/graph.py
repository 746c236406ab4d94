"""Dual knowledge graph: prior knowledge (types, properties, actions) + scene (instances).

The graph holds two tightly linked subgraphs.  The prior subgraph stores type
concepts, their property slots and action implementations; the scene subgraph
stores object instances observed in the world.  ``instance-of`` is the only
edge kind allowed to span the two, always from scene to prior.

Instantiating a type copies the type's whole ``has``-linked property structure
into the scene, names the instance ``<typelabel>_<n>`` and does bookkeeping of
per-type instance counters.  Counters never decrease, so instance names are
never reused even after removal.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Union

from .errors import (
    DuplicateType,
    GraphIntegrityError,
    HierarchyCycle,
    NotAnInstance,
    UnknownParent,
    UnknownSlot,
    UnknownType,
)

NodeId = int

# Matching tolerances for property filters.  Text matches are case-insensitive
# after trimming; numeric vectors match within a relative Euclidean tolerance.
NUMERIC_RTOL = 1e-6


def _wrap_angle(deg: float) -> float:
    """Map an angle in degrees onto [-180, 180)."""
    wrapped = math.fmod(deg + 180.0, 360.0)
    if wrapped < 0:
        wrapped += 360.0
    return wrapped - 180.0


@dataclass(frozen=True)
class Pose:
    """Object pose: position (x, y, z) in millimeters, orientation (yaw, pitch, roll) in degrees."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "yaw", "pitch", "roll"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"pose component {name} must be finite, got {v!r}")
        # keep orientation components in [-180, 180)
        for name in ("yaw", "pitch", "roll"):
            object.__setattr__(self, name, _wrap_angle(float(getattr(self, name))))
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def orientation(self) -> tuple[float, float, float]:
        return (self.yaw, self.pitch, self.roll)

    def as_vector(self) -> tuple[float, ...]:
        return (self.x, self.y, self.z, self.yaw, self.pitch, self.roll)


Value = Union[str, float, int, tuple, list, Pose]


@dataclass(frozen=True)
class PropertyValue:
    """A named property: slot label plus a text, numeric or pose value."""

    slot: str
    value: Value

    def __post_init__(self):
        if not self.slot or not self.slot.strip():
            raise ValueError("property slot must be non-empty")


def values_match(stored: Optional[Value], wanted: Value) -> bool:
    """Compare a stored slot value against a requested one.

    Text: case-insensitive after trimming.  Numbers and numeric vectors:
    Euclidean distance <= 1e-6 * (1 + |wanted|).  Poses compare as 6-vectors.
    """
    if stored is None:
        return False
    if isinstance(stored, str) and isinstance(wanted, str):
        return stored.strip().casefold() == wanted.strip().casefold()
    if isinstance(stored, str) or isinstance(wanted, str):
        return False

    def to_vec(v) -> Optional[tuple[float, ...]]:
        if isinstance(v, Pose):
            return v.as_vector()
        if isinstance(v, (int, float)):
            return (float(v),)
        if isinstance(v, (tuple, list)) and all(isinstance(c, (int, float)) for c in v):
            return tuple(float(c) for c in v)
        return None

    a, b = to_vec(stored), to_vec(wanted)
    if a is None or b is None or len(a) != len(b):
        return False
    dist = math.dist(a, b)
    norm = math.sqrt(sum(c * c for c in b))
    return dist <= NUMERIC_RTOL * (1.0 + norm)


class Subgraph(str, Enum):
    PRIOR = "prior"
    SCENE = "scene"


class NodeKind(str, Enum):
    TYPE_CONCEPT = "type_concept"
    OBJECT_INSTANCE = "object_instance"
    PROPERTY_SLOT = "property_slot"
    ACTION_IMPL = "action_impl"


class EdgeKind(str, Enum):
    HAS = "has"
    IS = "is"
    INSTANCE_OF = "instance_of"
    ACTION = "action"


@dataclass
class Node:
    id: NodeId
    label: str
    subgraph: Subgraph
    kind: NodeKind
    value: Optional[Value] = None
    skill_ref: Optional[str] = None


@dataclass
class Edge:
    id: int
    source: NodeId
    dest: NodeId
    kind: EdgeKind
    action_label: str = ""

    def sort_key(self) -> tuple:
        return (self.source, self.dest, self.kind.value, self.action_label, self.id)


@dataclass(frozen=True)
class ActionRef:
    """Resolved action implementation: the skill to run plus its graph anchors."""

    skill_ref: str
    impl_node: NodeId
    edge_id: int
    object_type: str


@dataclass(frozen=True)
class ActionLookup:
    """Result of an action search: an exact match, or near-misses sharing the label."""

    exact: Optional[ActionRef]
    near_misses: tuple[tuple[str, str], ...] = ()  # (action_label, object_type)


def instance_number(label: str) -> int:
    """Instance sequence number encoded in a scene label like ``nut_3``."""
    _, _, tail = label.rpartition("_")
    try:
        return int(tail)
    except ValueError:
        return 0


class KnowledgeGraph:
    """Container of the prior-knowledge and scene subgraphs.

    Mutations are serialized through an internal lock (single writer); read
    queries may run against a ``snapshot()`` without blocking the writer.
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._nodes: dict[NodeId, Node] = {}
        self._edges: dict[int, Edge] = {}
        self._next_node_id = 1
        self._next_edge_id = 1
        self._counters: dict[str, int] = {}  # type label -> instances ever issued
        # secondary indexes
        self._out: dict[NodeId, list[int]] = {}
        self._in: dict[NodeId, list[int]] = {}
        self._types_ci: dict[str, NodeId] = {}  # casefolded type label -> node

    # ------------------------------------------------------------------ #
    # low-level structure
    # ------------------------------------------------------------------ #

    def _alloc_node(self, label: str, subgraph: Subgraph, kind: NodeKind,
                    value: Optional[Value] = None, skill_ref: Optional[str] = None) -> Node:
        node = Node(self._next_node_id, label, subgraph, kind, value, skill_ref)
        self._next_node_id += 1
        self._nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = []
        if kind is NodeKind.TYPE_CONCEPT:
            self._types_ci[label.casefold()] = node.id
        return node

    def _alloc_edge(self, source: NodeId, dest: NodeId, kind: EdgeKind,
                    action_label: str = "") -> Edge:
        edge = Edge(self._next_edge_id, source, dest, kind, action_label)
        self._next_edge_id += 1
        self._edges[edge.id] = edge
        self._out[source].append(edge.id)
        self._in[dest].append(edge.id)
        return edge

    def _drop_edge(self, edge_id: int) -> None:
        edge = self._edges.pop(edge_id)
        self._out[edge.source].remove(edge_id)
        self._in[edge.dest].remove(edge_id)

    def _drop_node(self, node_id: NodeId) -> None:
        for eid in list(self._out[node_id]) + list(self._in[node_id]):
            if eid in self._edges:
                self._drop_edge(eid)
        node = self._nodes.pop(node_id)
        del self._out[node_id]
        del self._in[node_id]
        if node.kind is NodeKind.TYPE_CONCEPT:
            self._types_ci.pop(node.label.casefold(), None)

    def _out_edges(self, node_id: NodeId, kind: Optional[EdgeKind] = None) -> list[Edge]:
        return [self._edges[e] for e in self._out.get(node_id, ())
                if kind is None or self._edges[e].kind is kind]

    def _in_edges(self, node_id: NodeId, kind: Optional[EdgeKind] = None) -> list[Edge]:
        return [self._edges[e] for e in self._in.get(node_id, ())
                if kind is None or self._edges[e].kind is kind]

    # ------------------------------------------------------------------ #
    # read access
    # ------------------------------------------------------------------ #

    def node(self, node_id: NodeId) -> Node:
        return self._nodes[node_id]

    def get_node(self, node_id: NodeId) -> Optional[Node]:
        return self._nodes.get(node_id)

    def nodes(self) -> list[Node]:
        return list(self._nodes.values())

    def edges(self) -> list[Edge]:
        return list(self._edges.values())

    def counters(self) -> dict[str, int]:
        return dict(self._counters)

    def find_type(self, label: str) -> Optional[Node]:
        """Case-insensitive lookup of a TypeConcept node."""
        nid = self._types_ci.get(label.strip().casefold())
        return self._nodes.get(nid) if nid is not None else None

    def type_labels(self) -> list[str]:
        return sorted(self._nodes[nid].label for nid in self._types_ci.values())

    def scene_instances(self) -> list[Node]:
        return [n for n in self._nodes.values() if n.kind is NodeKind.OBJECT_INSTANCE]

    def find_instance(self, label: str) -> Optional[Node]:
        for n in self._nodes.values():
            if n.kind is NodeKind.OBJECT_INSTANCE and n.label == label:
                return n
        return None

    def instance_type(self, instance_id: NodeId) -> Node:
        """The TypeConcept an ObjectInstance classifies as (its instance-of target)."""
        edges = self._out_edges(instance_id, EdgeKind.INSTANCE_OF)
        if not edges:
            raise GraphIntegrityError(f"instance {instance_id} has no instance-of edge")
        return self._nodes[edges[0].dest]

    def parent_type(self, type_id: NodeId) -> Optional[Node]:
        edges = self._out_edges(type_id, EdgeKind.IS)
        return self._nodes[edges[0].dest] if edges else None

    def supertype_chain(self, label: str) -> list[str]:
        """Type label plus ancestors, bottom-up along ``is`` edges."""
        node = self.find_type(label)
        if node is None:
            raise UnknownType(f"unknown type {label!r}", label=label)
        chain = [node.label]
        current = node
        while True:
            parent = self.parent_type(current.id)
            if parent is None:
                return chain
            chain.append(parent.label)
            current = parent

    def type_slots(self, type_label: str) -> list[str]:
        """Labels of the type's has-linked property slots (transitive, surface order)."""
        node = self.find_type(type_label)
        if node is None:
            raise UnknownType(f"unknown type {type_label!r}", label=type_label)
        return [self._nodes[nid].label for nid in self._has_closure(node.id)]

    def _has_closure(self, root: NodeId) -> list[NodeId]:
        """PropertySlot nodes reachable from ``root`` via ``has`` edges, BFS order."""
        seen: set[NodeId] = set()
        order: list[NodeId] = []
        queue = [root]
        while queue:
            current = queue.pop(0)
            for edge in self._out_edges(current, EdgeKind.HAS):
                child = self._nodes[edge.dest]
                if child.kind is NodeKind.PROPERTY_SLOT and child.id not in seen:
                    seen.add(child.id)
                    order.append(child.id)
                    queue.append(child.id)
        return order

    def instance_slots(self, instance_id: NodeId) -> dict[str, Optional[Value]]:
        """Copied slot values of a scene instance, keyed by casefolded slot label."""
        return {
            self._nodes[nid].label.casefold(): self._nodes[nid].value
            for nid in self._has_closure(instance_id)
        }

    def instance_slot_node(self, instance_id: NodeId, slot: str) -> Optional[Node]:
        wanted = slot.strip().casefold()
        for nid in self._has_closure(instance_id):
            if self._nodes[nid].label.casefold() == wanted:
                return self._nodes[nid]
        return None

    def snapshot(self) -> "KnowledgeGraph":
        """Deep, independent copy for concurrent readers."""
        with self._lock:
            clone = KnowledgeGraph()
            clone._nodes = {nid: replace(n) for nid, n in self._nodes.items()}
            clone._edges = {eid: replace(e) for eid, e in self._edges.items()}
            clone._next_node_id = self._next_node_id
            clone._next_edge_id = self._next_edge_id
            clone._counters = dict(self._counters)
            clone._out = {nid: list(eids) for nid, eids in self._out.items()}
            clone._in = {nid: list(eids) for nid, eids in self._in.items()}
            clone._types_ci = dict(self._types_ci)
            return clone

    def adopt(self, other: "KnowledgeGraph") -> None:
        """Replace this graph's entire state with a snapshot's (rollback support)."""
        with self._lock:
            clone = other.snapshot()
            self._nodes = clone._nodes
            self._edges = clone._edges
            self._next_node_id = clone._next_node_id
            self._next_edge_id = clone._next_edge_id
            self._counters = clone._counters
            self._out = clone._out
            self._in = clone._in
            self._types_ci = clone._types_ci

    # ------------------------------------------------------------------ #
    # prior-knowledge mutations
    # ------------------------------------------------------------------ #

    def add_type(self, label: str, parent_label: Optional[str] = None,
                 property_slots: Iterable[str] = ()) -> NodeId:
        """Define a new type concept with optional parent and property slots."""
        label = label.strip()
        if not label:
            raise UnknownType("type label must be non-empty", label=label)
        with self._lock:
            if self.find_type(label) is not None:
                raise DuplicateType(f"type {label!r} already defined", label=label)
            parent = None
            if parent_label is not None:
                if parent_label.strip().casefold() == label.casefold():
                    raise HierarchyCycle(
                        f"type {label!r} cannot be its own ancestor", label=label)
                parent = self.find_type(parent_label)
                if parent is None:
                    raise UnknownParent(
                        f"unknown parent type {parent_label!r}", label=parent_label)
            node = self._alloc_node(label, Subgraph.PRIOR, NodeKind.TYPE_CONCEPT)
            if parent is not None:
                self._link_is(node.id, parent.id)
            for slot in property_slots:
                slot_node = self._alloc_node(slot, Subgraph.PRIOR, NodeKind.PROPERTY_SLOT)
                self._alloc_edge(node.id, slot_node.id, EdgeKind.HAS)
            return node.id

    def _link_is(self, child: NodeId, parent: NodeId) -> Edge:
        """Insert an ``is`` edge, refusing cycles in the type hierarchy."""
        if self._reaches_via_is(parent, child):
            raise HierarchyCycle(
                f"linking {self._nodes[child].label!r} under "
                f"{self._nodes[parent].label!r} would close a cycle")
        return self._alloc_edge(child, parent, EdgeKind.IS)

    def _reaches_via_is(self, start: NodeId, target: NodeId) -> bool:
        if start == target:
            return True
        stack = [start]
        seen = set()
        while stack:
            current = stack.pop()
            for edge in self._out_edges(current, EdgeKind.IS):
                if edge.dest == target:
                    return True
                if edge.dest not in seen:
                    seen.add(edge.dest)
                    stack.append(edge.dest)
        return False

    def define_action(self, actor_type: str, action_label: str, object_type: str,
                      skill_ref: str) -> int:
        """Record an action edge from an actor type to a skill implementation.

        The implementation node is reused when an identical ``skill_ref``
        already exists; the target object type is attached to the
        implementation with a ``has`` edge, keeping action definitions out of
        the property structure that gets copied at instantiation time.
        """
        if not action_label.strip():
            raise GraphIntegrityError("action label must be non-empty")
        with self._lock:
            actor = self.find_type(actor_type)
            if actor is None:
                raise UnknownType(f"unknown actor type {actor_type!r}", label=actor_type)
            target = self.find_type(object_type)
            if target is None:
                raise UnknownType(f"unknown object type {object_type!r}", label=object_type)
            impl = None
            for node in self._nodes.values():
                if node.kind is NodeKind.ACTION_IMPL and node.skill_ref == skill_ref:
                    impl = node
                    break
            if impl is None:
                impl = self._alloc_node(skill_ref, Subgraph.PRIOR, NodeKind.ACTION_IMPL,
                                        skill_ref=skill_ref)
            if not any(e.dest == target.id for e in self._out_edges(impl.id, EdgeKind.HAS)):
                self._alloc_edge(impl.id, target.id, EdgeKind.HAS)
            for edge in self._out_edges(actor.id, EdgeKind.ACTION):
                if edge.dest == impl.id and edge.action_label == action_label:
                    return edge.id
            return self._alloc_edge(actor.id, impl.id, EdgeKind.ACTION, action_label).id

    # ------------------------------------------------------------------ #
    # scene mutations
    # ------------------------------------------------------------------ #

    def instantiate(self, type_label: str, values: Iterable[PropertyValue] = (),
                    pose: Optional[Pose] = None) -> NodeId:
        """Create a scene instance of a type: copy its property structure, name it.

        The new node is linked ``instance-of`` to the type, renamed to
        ``<typelabel>_<n>``, and every ``has``-linked property slot of the type
        is copied (recursively, structure preserved) into the scene before the
        supplied values are written into the copies.
        """
        with self._lock:
            type_node = self.find_type(type_label)
            if type_node is None:
                raise UnknownType(f"unknown type {type_label!r}", label=type_label)

            slot_labels = {self._nodes[nid].label.casefold()
                           for nid in self._has_closure(type_node.id)}
            values = list(values)
            for pv in values:
                if pv.slot.strip().casefold() not in slot_labels:
                    raise UnknownSlot(
                        f"type {type_node.label!r} has no slot {pv.slot!r}",
                        type=type_node.label, slot=pv.slot)

            count = self._counters.get(type_node.label, 0) + 1
            self._counters[type_node.label] = count
            label = f"{type_node.label.lower()}_{count}"
            instance = self._alloc_node(label, Subgraph.SCENE, NodeKind.OBJECT_INSTANCE)
            self._alloc_edge(instance.id, type_node.id, EdgeKind.INSTANCE_OF)
            self._copy_slots(type_node.id, instance.id)

            for pv in values:
                slot_node = self.instance_slot_node(instance.id, pv.slot)
                slot_node.value = pv.value
            if pose is not None:
                slot_node = self.instance_slot_node(instance.id, "position")
                if slot_node is not None:
                    slot_node.value = pose
            return instance.id

    def _copy_slots(self, src: NodeId, dst: NodeId) -> None:
        for edge in self._out_edges(src, EdgeKind.HAS):
            child = self._nodes[edge.dest]
            if child.kind is not NodeKind.PROPERTY_SLOT:
                continue
            copy = self._alloc_node(child.label, Subgraph.SCENE, NodeKind.PROPERTY_SLOT,
                                    value=child.value)
            self._alloc_edge(dst, copy.id, EdgeKind.HAS)
            self._copy_slots(child.id, copy.id)

    def remove_instance(self, instance_id: NodeId) -> int:
        """Remove a scene instance and its copied property subtree; counters keep their value."""
        with self._lock:
            node = self._nodes.get(instance_id)
            if node is None or node.kind is not NodeKind.OBJECT_INSTANCE:
                raise NotAnInstance(f"node {instance_id} is not a live scene instance",
                                    node_id=instance_id)
            doomed = [instance_id] + self._has_closure(instance_id)
            for nid in doomed:
                self._drop_node(nid)
            return len(doomed)

    def reset_scene(self) -> int:
        """Drop every scene node.  Counters are preserved: names are never reused."""
        with self._lock:
            removed = 0
            for node in self.scene_instances():
                removed += self.remove_instance(node.id)
            # orphaned scene nodes cannot exist if invariants hold, but be thorough
            for node in [n for n in self._nodes.values() if n.subgraph is Subgraph.SCENE]:
                self._drop_node(node.id)
                removed += 1
            return removed

    # ------------------------------------------------------------------ #
    # queries
    # ------------------------------------------------------------------ #

    def type_closure(self, label: str) -> list[str]:
        """The type plus all its subtypes (reversed ``is`` reachability), sorted."""
        node = self.find_type(label)
        if node is None:
            raise UnknownType(f"unknown type {label!r}", label=label)
        closure = {node.label}
        stack = [node.id]
        while stack:
            current = stack.pop()
            for edge in self._in_edges(current, EdgeKind.IS):
                child = self._nodes[edge.source]
                if child.label not in closure:
                    closure.add(child.label)
                    stack.append(edge.source)
        return sorted(closure, key=lambda s: (s.casefold(), s))

    def query_instances(self, type_label: str,
                        filters: Iterable[PropertyValue] = ()) -> list[NodeId]:
        """Scene instances of the type (or a subtype) whose copied slots match every filter."""
        closure = set(self.type_closure(type_label))
        filters = list(filters)
        hits: list[Node] = []
        for inst in self.scene_instances():
            if self.instance_type(inst.id).label not in closure:
                continue
            slots = self.instance_slots(inst.id)
            if all(values_match(slots.get(f.slot.strip().casefold()), f.value)
                   for f in filters):
                hits.append(inst)
        hits.sort(key=lambda n: (instance_number(n.label), n.label))
        return [n.id for n in hits]

    def lookup_action(self, actor_type: str, action_label: str,
                      object_type: str) -> ActionLookup:
        """Find the action implementation linking an actor to an object type.

        Both supertype chains are searched bottom-up with the object's chain
        taking precedence, so the most specific implementation for the object
        wins.  When no implementation covers the object, every other object
        type carrying the same action label is reported as a near-miss.
        """
        actor_chain = self.supertype_chain(actor_type)  # raises UnknownType
        target = self.find_type(object_type)
        object_chain = self.supertype_chain(object_type) if target is not None else []

        # (object_type -> ActionRef) for every edge carrying the label
        available: dict[str, ActionRef] = {}
        for actor_label in actor_chain:
            actor_node = self.find_type(actor_label)
            for edge in self._out_edges(actor_node.id, EdgeKind.ACTION):
                if edge.action_label != action_label:
                    continue
                impl = self._nodes[edge.dest]
                for has_edge in self._out_edges(impl.id, EdgeKind.HAS):
                    bound = self._nodes[has_edge.dest]
                    if bound.kind is NodeKind.TYPE_CONCEPT and bound.label not in available:
                        available[bound.label] = ActionRef(
                            impl.skill_ref, impl.id, edge.id, bound.label)

        for obj_label in object_chain:
            if obj_label in available:
                return ActionLookup(exact=available[obj_label])
        near = tuple(sorted(((action_label, t) for t in available), key=lambda p: p[1]))
        return ActionLookup(exact=None, near_misses=near)

    # ------------------------------------------------------------------ #
    # integrity
    # ------------------------------------------------------------------ #

    def check_invariants(self) -> list[str]:
        """Full structural scan; returns human-readable violations (empty when healthy)."""
        problems: list[str] = []
        for node in self._nodes.values():
            if node.kind is NodeKind.OBJECT_INSTANCE and node.subgraph is not Subgraph.SCENE:
                problems.append(f"instance {node.label!r} outside scene subgraph")
            if node.kind is NodeKind.TYPE_CONCEPT and node.subgraph is not Subgraph.PRIOR:
                problems.append(f"type {node.label!r} outside prior subgraph")
            if node.value is not None and node.skill_ref is not None:
                problems.append(f"node {node.label!r} carries both value and skill_ref")
            if node.kind is NodeKind.ACTION_IMPL and not node.skill_ref:
                problems.append(f"action node {node.label!r} lacks skill_ref")
            if node.kind is not NodeKind.ACTION_IMPL and node.skill_ref is not None:
                problems.append(f"non-action node {node.label!r} carries skill_ref")

        for edge in self._edges.values():
            src = self._nodes.get(edge.source)
            dst = self._nodes.get(edge.dest)
            if src is None or dst is None:
                problems.append(f"edge {edge.id} references missing node")
                continue
            spans = src.subgraph is Subgraph.SCENE and dst.subgraph is Subgraph.PRIOR
            if edge.kind is EdgeKind.INSTANCE_OF:
                if not spans:
                    problems.append(f"instance-of edge {edge.id} does not span scene->prior")
            elif src.subgraph is not dst.subgraph:
                problems.append(f"{edge.kind.value} edge {edge.id} spans subgraphs")
            if edge.kind is EdgeKind.IS:
                if src.kind is not NodeKind.TYPE_CONCEPT or dst.kind is not NodeKind.TYPE_CONCEPT:
                    problems.append(f"is edge {edge.id} endpoints are not both types")
            if edge.kind is EdgeKind.ACTION:
                if not edge.action_label:
                    problems.append(f"action edge {edge.id} has empty label")
                if dst.kind is not NodeKind.ACTION_IMPL:
                    problems.append(f"action edge {edge.id} does not target an implementation")
                if src.kind not in (NodeKind.TYPE_CONCEPT, NodeKind.OBJECT_INSTANCE):
                    problems.append(f"action edge {edge.id} source is not an actor")

        if self._is_cyclic():
            problems.append("type hierarchy contains an `is` cycle")

        labels_seen: set[str] = set()
        for node in self._nodes.values():
            if node.subgraph is not Subgraph.SCENE:
                continue
            if node.kind is NodeKind.OBJECT_INSTANCE:
                if node.label in labels_seen:
                    problems.append(f"duplicate scene label {node.label!r}")
                labels_seen.add(node.label)
                out = self._out_edges(node.id, EdgeKind.INSTANCE_OF)
                if len(out) != 1:
                    problems.append(
                        f"instance {node.label!r} has {len(out)} instance-of edges")
                    continue
                type_node = self._nodes[out[0].dest]
                number = instance_number(node.label)
                expected_prefix = f"{type_node.label.lower()}_"
                if number < 1 or not node.label.startswith(expected_prefix):
                    problems.append(
                        f"instance label {node.label!r} does not follow "
                        f"{expected_prefix}<n>")
                elif number > self._counters.get(type_node.label, 0):
                    problems.append(
                        f"instance {node.label!r} exceeds counter "
                        f"{self._counters.get(type_node.label, 0)}")
        return problems

    def _is_cyclic(self) -> bool:
        color: dict[NodeId, int] = {}

        def visit(nid: NodeId) -> bool:
            color[nid] = 1
            for edge in self._out_edges(nid, EdgeKind.IS):
                state = color.get(edge.dest, 0)
                if state == 1:
                    return True
                if state == 0 and visit(edge.dest):
                    return True
            color[nid] = 2
            return False

        for node in self._nodes.values():
            if node.kind is NodeKind.TYPE_CONCEPT and color.get(node.id, 0) == 0:
                if visit(node.id):
                    return True
        return False

    # ------------------------------------------------------------------ #
    # restore (persistence boundary)
    # ------------------------------------------------------------------ #

    @classmethod
    def restore(cls, nodes: Iterable[Node], edges: Iterable[Edge],
                counters: dict[str, int]) -> "KnowledgeGraph":
        """Rebuild a graph from raw parts, enforcing every invariant first."""
        graph = cls()
        for node in nodes:
            if node.id in graph._nodes:
                raise GraphIntegrityError(f"duplicate node id {node.id}")
            graph._nodes[node.id] = node
            graph._out[node.id] = []
            graph._in[node.id] = []
            if node.kind is NodeKind.TYPE_CONCEPT:
                if node.label.casefold() in graph._types_ci:
                    raise GraphIntegrityError(f"duplicate type label {node.label!r}")
                graph._types_ci[node.label.casefold()] = node.id
        for edge in edges:
            if edge.id in graph._edges:
                raise GraphIntegrityError(f"duplicate edge id {edge.id}")
            if edge.source not in graph._nodes or edge.dest not in graph._nodes:
                raise GraphIntegrityError(
                    f"edge {edge.id} references missing node "
                    f"({edge.source} -> {edge.dest})")
            graph._edges[edge.id] = edge
            graph._out[edge.source].append(edge.id)
            graph._in[edge.dest].append(edge.id)
        if any(c < 0 for c in counters.values()):
            raise GraphIntegrityError("negative instance counter")
        graph._counters = dict(counters)
        graph._next_node_id = max(graph._nodes, default=0) + 1
        graph._next_edge_id = max(graph._edges, default=0) + 1
        problems = graph.check_invariants()
        if problems:
            raise GraphIntegrityError("; ".join(problems))
        return graph
