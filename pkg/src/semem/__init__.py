"""semem: a semantic-memory engine for simulated industrial robots.

A dynamic dual knowledge graph (prior knowledge + live scene) that grounds
restricted natural-language instructions against accumulated type knowledge,
executes simulated manipulation skills, and grows through operator dialogue
when it meets unknown objects or actions.
"""

from .graph import (
    ActionLookup,
    ActionRef,
    Edge,
    EdgeKind,
    KnowledgeGraph,
    Node,
    NodeId,
    NodeKind,
    Pose,
    PropertyValue,
    Subgraph,
)

__version__ = "0.1.0"

__all__ = [
    "ActionLookup",
    "ActionRef",
    "Edge",
    "EdgeKind",
    "KnowledgeGraph",
    "Node",
    "NodeId",
    "NodeKind",
    "Pose",
    "PropertyValue",
    "Subgraph",
    "__version__",
]
