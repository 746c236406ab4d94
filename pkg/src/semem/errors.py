"""Error hierarchy shared across the engine.

Every error carries a stable ``code`` string so the service layer and the
CLI can report failures uniformly without matching on exception classes.
"""

from __future__ import annotations


class SememError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


# --- graph-core ---

class DuplicateType(SememError):
    code = "duplicate_type"


class UnknownType(SememError):
    code = "unknown_type"


class UnknownParent(SememError):
    code = "unknown_parent"


class HierarchyCycle(SememError):
    code = "hierarchy_cycle"


class UnknownSlot(SememError):
    code = "unknown_slot"


class NotAnInstance(SememError):
    code = "not_an_instance"


class GraphIntegrityError(SememError):
    """Internal structural violation; fatal unless raised at a load boundary."""

    code = "graph_integrity"


# --- nlparse ---

class ParseError(SememError):
    code = "parse_error"


class EmptyInput(ParseError):
    code = "empty_input"


class NoVerbFound(ParseError):
    code = "no_verb_found"


class NoPatientFound(ParseError):
    code = "no_patient_found"


class NoTripletFound(ParseError):
    code = "no_triplet_found"


class UnknownModifier(ParseError):
    code = "unknown_modifier"


class UnsupportedGrammar(ParseError):
    code = "unsupported_grammar"


class BadLexicon(SememError):
    code = "bad_lexicon"


# --- resolver ---

class StaleProposal(SememError):
    code = "stale_proposal"


# --- session ---

class DialogueBusy(SememError):
    code = "dialogue_busy"


class UnknownPrompt(SememError):
    code = "unknown_prompt"


class PromptExpired(SememError):
    code = "prompt_expired"


class ShapeMismatch(SememError):
    code = "shape_mismatch"


# --- executor ---

class DuplicateSkill(SememError):
    code = "duplicate_skill"


class UnknownSkill(SememError):
    code = "unknown_skill"


class StalePlan(SememError):
    code = "stale_plan"


# --- persistence ---

class MalformedDocument(SememError):
    code = "malformed_document"


class UnsupportedVersion(SememError):
    code = "unsupported_version"


class IntegrityViolation(SememError):
    code = "integrity_violation"


class IoFailure(SememError):
    code = "io_failure"


# --- perception ---

class BadSignature(SememError):
    code = "bad_signature"


class BadSceneDocument(SememError):
    code = "bad_scene_document"
