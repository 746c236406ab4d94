"""Restricted instruction-language parsing into predicate-argument intent frames.

Two interchangeable strategies produce the same frame shape:

* ``heuristic`` tags tokens with a small rule table (vocative, verb, adjective,
  determiner, noun) and assembles actor / action / patient from the tags;
* ``triplet`` extracts a (subject, predicate, object) triple around the verb
  and decomposes the object noun-phrase.

Both are pure functions of (text, lexicon).  The grammar covers single-clause
imperative commands only; conjunctions are rejected outright, and modifier
words missing from the lexicon raise instead of silently dropping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    EmptyInput,
    NoPatientFound,
    NoTripletFound,
    NoVerbFound,
    UnknownModifier,
    UnsupportedGrammar,
)
from .graph import PropertyValue
from .lexicon import Lexicon, default_lexicon

PUNCTUATION = {",", "!", ".", "?", ";", ":"}
DETERMINERS = {"the": "definite", "a": "indefinite", "an": "indefinite"}
CONJUNCTIONS = {"and", "or"}

DEFAULT_ACTOR = "yumi"


class Determiner(str, Enum):
    DEFINITE = "definite"
    INDEFINITE = "indefinite"
    NONE = "none"


class Strategy(str, Enum):
    HEURISTIC = "heuristic"
    TRIPLET = "triplet"


@dataclass(frozen=True)
class ObjectDescriptor:
    type_word: str
    modifiers: tuple[PropertyValue, ...] = ()
    determiner: Determiner = Determiner.NONE


@dataclass(frozen=True)
class IntentFrame:
    actor: str
    action: str
    patient: ObjectDescriptor
    raw: str = field(compare=False, default="")

    def to_dict(self) -> dict:
        return {
            "actor": self.actor,
            "action": self.action,
            "patient": {
                "type_word": self.patient.type_word,
                "modifiers": [{"slot": m.slot, "value": m.value}
                              for m in self.patient.modifiers],
                "determiner": self.patient.determiner.value,
            },
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntentFrame":
        patient = d["patient"]
        return cls(
            actor=d["actor"],
            action=d["action"],
            patient=ObjectDescriptor(
                type_word=patient["type_word"],
                modifiers=tuple(PropertyValue(m["slot"], m["value"])
                                for m in patient.get("modifiers", [])),
                determiner=Determiner(patient.get("determiner", "none")),
            ),
            raw=d.get("raw", ""),
        )


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with punctuation peeled off into separate tokens."""
    if not text or not text.strip():
        raise EmptyInput("instruction text is empty")
    tokens: list[str] = []
    for chunk in text.lower().split():
        head: list[str] = []
        while chunk and chunk[0] in PUNCTUATION:
            head.append(chunk[0])
            chunk = chunk[1:]
        tail: list[str] = []
        while chunk and chunk[-1] in PUNCTUATION:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def _reject_conjunctions(tokens: list[str]):
    for word in tokens:
        if word in CONJUNCTIONS:
            raise UnsupportedGrammar(
                f"conjunction {word!r} not supported: give one command at a time",
                word=word)


def _split_vocative(tokens: list[str]) -> tuple[Optional[str], list[str]]:
    """A sentence-initial token followed by a comma names the actor."""
    if len(tokens) >= 2 and tokens[1] == "," and tokens[0] not in PUNCTUATION:
        return tokens[0], tokens[2:]
    return None, list(tokens)


def _find_verb(clause: list[str], lexicon: Lexicon) -> Optional[int]:
    """Index of the first lexicon verb; imperative position as a fallback.

    When no known verb appears, the clause-initial word is still read as a
    verb provided it cannot be anything else (not punctuation, determiner,
    adjective or stopword) -- the way a POS tagger resolves imperatives.
    """
    for i, word in enumerate(clause):
        if word in lexicon.verbs:
            return i
    if clause:
        first = clause[0]
        if (first not in PUNCTUATION and first not in DETERMINERS
                and first not in lexicon.stopwords
                and lexicon.adjective_class(first) is None):
            return 0
    return None


def _decompose_noun_phrase(words: list[str], lexicon: Lexicon) -> Optional[ObjectDescriptor]:
    """Break `[det] [adj]* noun` into a descriptor; None when no head noun exists.

    Every word before the head must be a determiner, a known adjective or a
    stopword; anything else is an unknown modifier and raises.
    """
    content = [w for w in words if w not in PUNCTUATION]
    head_index = None
    for i in range(len(content) - 1, -1, -1):
        word = content[i]
        if (word not in DETERMINERS and word not in lexicon.stopwords
                and lexicon.adjective_class(word) is None):
            head_index = i
            break
    if head_index is None:
        return None
    determiner = Determiner.NONE
    modifiers: list[PropertyValue] = []
    for word in content[:head_index]:
        if word in DETERMINERS:
            determiner = Determiner(DETERMINERS[word])
        elif word in lexicon.stopwords:
            continue
        else:
            adjective_class = lexicon.adjective_class(word)
            if adjective_class is None:
                raise UnknownModifier(
                    f"unknown modifier {word!r}: not in the lexicon's adjective classes",
                    word=word)
            modifiers.append(PropertyValue(adjective_class, word))
    return ObjectDescriptor(content[head_index], tuple(modifiers), determiner)


def parse_heuristic(text: str, lexicon: Optional[Lexicon] = None) -> IntentFrame:
    """Rule-table tagging: vocative actor, first verb, last noun as patient."""
    lexicon = lexicon or default_lexicon()
    tokens = tokenize(text)
    _reject_conjunctions(tokens)
    vocative, clause = _split_vocative(tokens)
    verb_index = _find_verb(clause, lexicon)
    if verb_index is None:
        raise NoVerbFound(f"no verb found in {text!r}")
    patient = _decompose_noun_phrase(clause[verb_index + 1:], lexicon)
    if patient is None:
        raise NoPatientFound(f"no object of {clause[verb_index]!r} found in {text!r}")
    return IntentFrame(
        actor=vocative or DEFAULT_ACTOR,
        action=clause[verb_index],
        patient=patient,
        raw=text,
    )


def parse_triplet(text: str, lexicon: Optional[Lexicon] = None) -> IntentFrame:
    """Subject-predicate-object extraction around the first verb."""
    lexicon = lexicon or default_lexicon()
    tokens = tokenize(text)
    _reject_conjunctions(tokens)
    vocative, clause = _split_vocative(tokens)
    verb_index = _find_verb(clause, lexicon)
    if verb_index is None:
        raise NoTripletFound(f"no predicate found in {text!r}")
    subject = vocative
    if subject is None:
        before = [w for w in clause[:verb_index]
                  if w not in PUNCTUATION and w not in DETERMINERS
                  and w not in lexicon.stopwords]
        subject = before[-1] if before else DEFAULT_ACTOR
    obj = _decompose_noun_phrase(clause[verb_index + 1:], lexicon)
    if obj is None:
        raise NoTripletFound(f"no object found after {clause[verb_index]!r} in {text!r}")
    return IntentFrame(actor=subject, action=clause[verb_index], patient=obj, raw=text)


def parse(text: str, strategy: Strategy | str = Strategy.HEURISTIC,
          lexicon: Optional[Lexicon] = None) -> IntentFrame:
    strategy = Strategy(strategy)
    if strategy is Strategy.TRIPLET:
        return parse_triplet(text, lexicon)
    return parse_heuristic(text, lexicon)


def render_frame(frame: IntentFrame) -> str:
    """Render a frame back to the canonical template sentence."""
    parts = [f"{frame.actor},", frame.action]
    if frame.patient.determiner is Determiner.DEFINITE:
        parts.append("the")
    elif frame.patient.determiner is Determiner.INDEFINITE:
        parts.append("a")
    parts.extend(str(m.value) for m in frame.patient.modifiers)
    parts.append(frame.patient.type_word)
    return " ".join(parts) + "!"
