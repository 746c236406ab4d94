"""Perception tests: classification, nearest-neighbor oracle agreement, scene ingest."""

import json
import math
import random

import numpy as np
import pytest

from semem.errors import BadSceneDocument, BadSignature, UnknownType
from semem.graph import KnowledgeGraph, Pose, Subgraph
from semem.perception import (
    DESCRIPTOR_DIM,
    MATCH_THRESHOLD,
    WEIGHT_COLOR,
    WEIGHT_DESCRIPTOR,
    WEIGHT_SHAPE,
    WEIGHT_SIZE,
    Observation,
    Perception,
    Signature,
    parse_scene_document,
    signature_distance,
)

POSE = Pose(100, 200, 10)


def unit_axis(i):
    v = [0.0] * DESCRIPTOR_DIM
    v[i % DESCRIPTOR_DIM] = 1.0
    return tuple(v)


def oracle_classify(entries, query, threshold):
    """Brute-force nearest-neighbor oracle using numpy, independent of the engine."""
    best = None
    for type_label, ref in entries:
        d = 0.0
        if query.shape_class.strip().casefold() != ref.shape_class.strip().casefold():
            d += WEIGHT_SHAPE
        if query.color_class.strip().casefold() != ref.color_class.strip().casefold():
            d += WEIGHT_COLOR
        qs, rs = np.asarray(query.size), np.asarray(ref.size)
        denom = np.linalg.norm(qs) + np.linalg.norm(rs)
        if denom > 0:
            d += WEIGHT_SIZE * float(np.linalg.norm(qs - rs)) / denom
        if query.descriptor is not None and ref.descriptor is not None:
            qd, rd = np.asarray(query.descriptor), np.asarray(ref.descriptor)
            d += WEIGHT_DESCRIPTOR * float(np.linalg.norm(qd - rd)) / 2.0
        if best is None or (d, type_label) < best:
            best = (d, type_label)
    if best is None:
        return ("unknown", None)
    d, label = best
    return ("match", label) if d <= threshold else ("unknown", label)


@pytest.fixture
def graph():
    g = KnowledgeGraph()
    for label in ("YuMi", "Nut", "Screw", "Box"):
        g.add_type(label, None, ["color", "shape", "position"])
    return g


@pytest.fixture
def perception(graph):
    p = Perception(graph)
    p.register_type_signature("Nut", Signature("hexagon", "green", (8, 8, 4), unit_axis(1)))
    p.register_type_signature("Screw", Signature("cylinder", "blue", (4, 4, 20), unit_axis(2)))
    p.register_type_signature("Box", Signature("square", "gray", (60, 60, 40), unit_axis(3)))
    p.register_type_signature("YuMi", Signature("robot", "white", (500, 400, 600), unit_axis(0)))
    return p


class TestRegister:
    def test_database_grows(self, perception):
        before = len(perception.database)
        perception.register_type_signature("Nut", Signature("hexagon", "red", (8, 8, 4)))
        assert len(perception.database) == before + 1

    def test_two_signatures_per_type_retrievable(self, perception):
        perception.register_type_signature("Nut", Signature("hexagon", "red", (8, 8, 4)))
        assert len(perception.database.for_type("Nut")) == 2

    def test_unknown_type_rejected(self, perception):
        with pytest.raises(UnknownType):
            perception.register_type_signature("Ghost", Signature("s", "c", (1, 1, 1)))


class TestClassify:
    def test_exact_copy_matches_at_zero(self, perception):
        sig = Signature("hexagon", "green", (8, 8, 4), unit_axis(1))
        outcome = perception.classify(sig)
        assert outcome.matched
        assert outcome.type_label == "Nut"
        assert outcome.distance == 0.0

    def test_tie_breaks_lexicographically(self, graph):
        p = Perception(graph)
        # identical references for two types: every query ties between them
        p.register_type_signature("Nut", Signature("hexagon", "green", (8, 8, 4)))
        p.register_type_signature("Box", Signature("hexagon", "green", (8, 8, 4)))
        outcome = p.classify(Signature("hexagon", "green", (8, 8, 4)))
        assert outcome.matched
        assert outcome.type_label == "Box"
        expected = oracle_classify(p.database.entries(),
                                   Signature("hexagon", "green", (8, 8, 4)),
                                   p.threshold)
        assert expected == ("match", "Box")

    def test_unfamiliar_signature_is_unknown(self, perception):
        sig = Signature("square", "gray", (20, 20, 6), tuple(-c for c in unit_axis(3)))
        outcome = perception.classify(sig)
        assert not outcome.matched
        assert outcome.nearest is not None
        nearest_label, nearest_distance = outcome.nearest
        assert nearest_label == "Box"
        assert nearest_distance > MATCH_THRESHOLD

    def test_empty_database_unknown_without_nearest(self, graph):
        p = Perception(graph)
        outcome = p.classify(Signature("s", "c", (1, 1, 1)))
        assert not outcome.matched
        assert outcome.nearest is None

    def test_permutation_invariance(self, graph):
        entries = [
            ("Nut", Signature("hexagon", "green", (8, 8, 4))),
            ("Box", Signature("square", "gray", (60, 60, 40))),
            ("Screw", Signature("cylinder", "blue", (4, 4, 20))),
        ]
        query = Signature("hexagon", "gray", (10, 10, 5))
        results = set()
        for perm in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
            p = Perception(graph)
            for i in perm:
                p.register_type_signature(*entries[i])
            outcome = p.classify(query)
            results.add((outcome.matched, outcome.type_label))
        assert len(results) == 1


class TestOracleAgreement:
    def test_random_signatures_agree_with_brute_force(self, graph):
        rng = random.Random(7)
        shapes = ["hexagon", "cylinder", "square", "robot", "big", "small"]
        colors = ["green", "blue", "gray", "white", "red"]
        p = Perception(graph)
        for i in range(50):
            label = ("Nut", "Screw", "Box", "YuMi")[i % 4]
            sig = Signature(
                rng.choice(shapes), rng.choice(colors),
                tuple(rng.uniform(2, 200) for _ in range(3)),
                unit_axis(rng.randrange(DESCRIPTOR_DIM)) if rng.random() < 0.7 else None,
            )
            p.register_type_signature(label, sig)
        entries = p.database.entries()
        disagreements = 0
        for _ in range(300):
            query = Signature(
                rng.choice(shapes), rng.choice(colors),
                tuple(rng.uniform(2, 200) for _ in range(3)),
                unit_axis(rng.randrange(DESCRIPTOR_DIM)) if rng.random() < 0.7 else None,
            )
            outcome = p.classify(query)
            got = ("match", outcome.type_label) if outcome.matched else \
                ("unknown", outcome.nearest[0] if outcome.nearest else None)
            if got != oracle_classify(entries, query, p.threshold):
                disagreements += 1
        assert disagreements == 0


class TestIngest:
    def exp1_observations(self):
        return [
            Observation(Signature("hexagon", "green", (8, 8, 4), unit_axis(1)), POSE),
            Observation(Signature("cylinder", "blue", (4, 4, 20), unit_axis(2)), POSE),
            Observation(Signature("square", "gray", (60, 60, 40), unit_axis(3)), POSE),
            Observation(Signature("robot", "white", (500, 400, 600), unit_axis(0)), POSE),
        ]

    def test_exp1_scene_fully_instantiated(self, perception, graph):
        report = perception.ingest_scene(self.exp1_observations())
        assert [graph.node(nid).label for nid, _ in report.instantiated] == \
            ["nut_1", "screw_1", "box_1", "yumi_1"]
        assert report.unknowns == []
        assert report.discarded == 0
        assert report.covers(4)

    def test_unknown_collected_not_instantiated(self, perception, graph):
        unknown = Observation(
            Signature("square", "gray", (20, 20, 6), tuple(-c for c in unit_axis(3))), POSE)
        report = perception.ingest_scene([
            Observation(Signature("square", "gray", (60, 60, 40), unit_axis(3)), POSE),
            unknown,
            Observation(Signature("robot", "white", (500, 400, 600), unit_axis(0)), POSE),
        ])
        assert len(report.instantiated) == 2
        assert report.unknowns == [unknown]
        assert report.covers(3)
        assert graph.find_instance("box_1") is not None
        assert len(graph.scene_instances()) == 2

    def test_undersized_observation_discarded(self, perception):
        # smallest reference volume is the nut (256 mm^3); threshold 128
        speck = Observation(Signature("hexagon", "green", (4, 4, 4)), POSE)  # 64 mm^3
        report = perception.ingest_scene([speck])
        assert report.discarded == 1
        assert report.covers(1)

    def test_empty_scene(self, perception):
        report = perception.ingest_scene([])
        assert report.covers(0)
        assert report.instantiated == [] and report.unknowns == [] and report.discarded == 0

    def test_prior_subgraph_untouched(self, perception, graph):
        before = sorted((n.id, n.label) for n in graph.nodes() if n.subgraph is Subgraph.PRIOR)
        perception.ingest_scene(self.exp1_observations())
        after = sorted((n.id, n.label) for n in graph.nodes() if n.subgraph is Subgraph.PRIOR)
        assert before == after

    def test_instance_slots_filled_from_signature(self, perception, graph):
        report = perception.ingest_scene(self.exp1_observations())
        nut_id = report.instantiated[0][0]
        slots = graph.instance_slots(nut_id)
        assert slots["color"] == "green"
        assert slots["shape"] == "hexagon"
        assert slots["position"] == POSE


class TestSignatureValidation:
    def test_negative_size_rejected(self):
        with pytest.raises(BadSignature):
            Signature("s", "c", (1, -1, 1))

    def test_bad_descriptor_dim(self):
        with pytest.raises(BadSignature):
            Signature("s", "c", (1, 1, 1), (1.0, 0.0))

    def test_non_unit_descriptor(self):
        with pytest.raises(BadSignature):
            Signature("s", "c", (1, 1, 1), tuple([0.5] + [0.0] * (DESCRIPTOR_DIM - 1)))

    def test_unit_norm_tolerance(self):
        wobble = 1.0 + 5e-10
        desc = tuple([wobble] + [0.0] * (DESCRIPTOR_DIM - 1))
        Signature("s", "c", (1, 1, 1), desc)  # within 1e-9


class TestSceneDocument:
    def doc(self):
        return [{
            "shape": "hexagon", "color": "green", "size": [8, 8, 4],
            "position": [100, 200, 10], "orientation": [0, 0, 0],
        }]

    def test_round_trip(self):
        observations = parse_scene_document(json.dumps(self.doc()))
        assert len(observations) == 1
        assert observations[0].signature.shape_class == "hexagon"
        assert observations[0].pose.x == 100

    def test_unknown_field_rejected(self):
        doc = self.doc()
        doc[0]["weight"] = 4
        with pytest.raises(BadSceneDocument, match="unknown fields"):
            parse_scene_document(json.dumps(doc))

    def test_missing_field_rejected(self):
        doc = self.doc()
        del doc[0]["size"]
        with pytest.raises(BadSceneDocument, match="missing fields"):
            parse_scene_document(json.dumps(doc))

    def test_top_level_must_be_array(self):
        with pytest.raises(BadSceneDocument):
            parse_scene_document("{}")

    def test_invalid_json(self):
        with pytest.raises(BadSceneDocument, match="invalid JSON"):
            parse_scene_document("[{")

    def test_bad_vector_shape(self):
        doc = self.doc()
        doc[0]["size"] = [8, 8]
        with pytest.raises(BadSceneDocument, match="size"):
            parse_scene_document(json.dumps(doc))

    def test_descriptor_length_checked(self):
        doc = self.doc()
        doc[0]["descriptor"] = [1.0, 0.0]
        with pytest.raises(BadSceneDocument):
            parse_scene_document(json.dumps(doc))

    def test_exp3_margin(self):
        # the gray/square unknown sits safely past the match threshold
        box = Signature("square", "gray", (60, 60, 40), unit_axis(3))
        new_obj = Signature("square", "gray", (20, 20, 6), tuple(-c for c in unit_axis(3)))
        assert signature_distance(new_obj, box) > MATCH_THRESHOLD + 0.04


def test_distance_symmetry():
    a = Signature("hexagon", "green", (8, 8, 4), unit_axis(1))
    b = Signature("square", "gray", (60, 60, 40), unit_axis(3))
    assert math.isclose(signature_distance(a, b), signature_distance(b, a))
