"""Instruction-language lexicon, loaded from a JSON config file.

The lexicon is data, not code: operators can add verbs or adjective classes
without touching the parser.  The four word sets must stay pairwise disjoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import BadLexicon

DEFAULT_VERBS = ["pick", "place", "test", "move", "grab", "inspect"]
DEFAULT_COLORS = ["red", "green", "blue", "gray", "grey", "white", "black", "yellow", "orange"]
DEFAULT_SHAPES = ["big", "small", "square", "round", "hexagon", "cylinder", "flat", "long"]
DEFAULT_STOPWORDS = ["please", "kindly", "now", "then"]


@dataclass(frozen=True)
class Lexicon:
    verbs: frozenset[str]
    colors: frozenset[str]
    shapes: frozenset[str]
    stopwords: frozenset[str]

    def __post_init__(self):
        sets = {
            "verbs": self.verbs, "colors": self.colors,
            "shapes": self.shapes, "stopwords": self.stopwords,
        }
        for a in sets:
            for b in sets:
                if a < b and sets[a] & sets[b]:
                    raise BadLexicon(
                        f"lexicon sets {a!r} and {b!r} overlap: {sorted(sets[a] & sets[b])}")

    def adjective_class(self, word: str) -> str | None:
        if word in self.colors:
            return "color"
        if word in self.shapes:
            return "shape"
        return None

    def to_dict(self) -> dict:
        return {
            "verbs": sorted(self.verbs),
            "colors": sorted(self.colors),
            "shapes": sorted(self.shapes),
            "stopwords": sorted(self.stopwords),
        }


def default_lexicon() -> Lexicon:
    return Lexicon(
        verbs=frozenset(DEFAULT_VERBS),
        colors=frozenset(DEFAULT_COLORS),
        shapes=frozenset(DEFAULT_SHAPES),
        stopwords=frozenset(DEFAULT_STOPWORDS),
    )


def load_lexicon(path: str | Path) -> Lexicon:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise BadLexicon(f"cannot read lexicon file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadLexicon(f"lexicon file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise BadLexicon("lexicon config must be a JSON object")
    unknown = set(raw) - {"verbs", "colors", "shapes", "stopwords"}
    if unknown:
        raise BadLexicon(f"unknown lexicon keys {sorted(unknown)}")

    def words(key):
        values = raw.get(key, [])
        if not isinstance(values, list) or not all(isinstance(w, str) for w in values):
            raise BadLexicon(f"lexicon key {key!r} must be an array of strings")
        return frozenset(w.strip().lower() for w in values if w.strip())

    return Lexicon(verbs=words("verbs"), colors=words("colors"),
                   shapes=words("shapes"), stopwords=words("stopwords"))


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(json.dumps(lexicon.to_dict(), indent=2) + "\n")
