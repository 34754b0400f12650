"""Text normalization shared by extraction, indexing and the local providers.

Everything here is deterministic and dependency-free: entity and predicate
canonicalization, suffix-rule singularization and the three tokenizer modes.
"""

from __future__ import annotations

import json
import re
import unicodedata
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CanonicalizationError

# Words that end in "s" but are already singular.
DEFAULT_NO_STRIP = frozenset(
    {"status", "analysis", "news", "series", "species", "basis", "canvas", "alias", "bonus",
     "campus", "census", "corpus", "process", "address", "access", "business", "class", "gas",
     "atlas", "bias", "chaos", "lens", "plus", "thesis", "axis", "this", "its", "his", "yes",
     "sales", "logistics", "analytics", "statistics", "economics", "physics"}
)
IRREGULAR_PLURALS = {
    "statuses": "status",
    "analyses": "analysis",
    "aliases": "alias",
    "bonuses": "bonus",
    "processes": "process",
    "people": "person",
    "ids": "id",
    "children": "child",
    "criteria": "criterion",
}

STOPWORDS = frozenset(
    {"a", "an", "the", "of", "all", "me", "my", "i", "to", "for", "with", "in", "on", "at", "by",
     "and", "or", "is", "are", "be", "from", "this", "that", "it", "as", "please", "can", "you",
     "do", "does", "what", "which", "any", "some", "our", "your", "we", "us"}
)

TOKENIZER_MODES = ("whitespace", "word_boundary", "lemma")

_WORD_RE = re.compile(r"\b\w+\b")
_ALNUM_RE = re.compile(r"[^\W_]+")


def singularize(token: str, no_strip: frozenset[str] = DEFAULT_NO_STRIP) -> str:
    """Strip a plural suffix from a single lowercase token.

    >>> singularize("suppliers"), singularize("entries"), singularize("boxes")
    ('supplier', 'entry', 'box')
    """
    if token in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[token]
    if len(token) <= 3 or token in no_strip or not token.endswith("s"):
        return token
    if token.endswith(("ss", "us", "is")):
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith(("sses", "xes", "zzes", "ches", "shes")):
        return token[:-2]
    # covers "...ses" too: purchases -> purchase, cases -> case
    return token[:-1]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def _strip_punct(text: str) -> str:
    start, end = 0, len(text)
    while start < end and _is_punct(text[start]):
        start += 1
    while end > start and _is_punct(text[end - 1]):
        end -= 1
    return text[start:end]


def _entity_pass(text: str, no_strip: frozenset[str]) -> str:
    text = " ".join(text.lower().split())
    text = _strip_punct(text).strip()
    if not text:
        return ""
    tokens = text.split()
    tokens[-1] = singularize(tokens[-1], no_strip)
    return " ".join(tokens)


def canonicalize_entity(surface: str, no_strip: frozenset[str] = DEFAULT_NO_STRIP) -> str:
    """Map an entity surface form to its canonical node name.

    Lowercases, collapses whitespace, strips surrounding punctuation and
    singularizes the final token. Passes repeat until nothing changes, which
    makes the function idempotent by construction.
    """
    current = surface
    for _ in range(len(surface) + 2):
        nxt = _entity_pass(current, no_strip)
        if not nxt:
            raise CanonicalizationError(f"entity {surface!r} is empty after canonicalization")
        if nxt == current:
            return nxt
        current = nxt
    return current


def normalize_predicate(surface: str) -> str:
    current = surface
    while True:
        nxt = "_".join(current.lower().split())
        if nxt == current:
            break
        current = nxt
    if not current:
        raise CanonicalizationError(f"predicate {surface!r} is empty")
    return current


@dataclass(frozen=True)
class SynonymTable:
    """Surface-to-canonical mappings for predicates and entities.

    Keys and values are normalized on construction. A canonical value may not
    itself be remapped to something else, so lookups are idempotent.
    """

    predicate_synonyms: dict[str, str] = field(default_factory=dict)
    entity_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        preds = _functional_map(self.predicate_synonyms, normalize_predicate, "predicate")
        ents = _functional_map(self.entity_overrides, canonicalize_entity, "entity")
        object.__setattr__(self, "predicate_synonyms", preds)
        object.__setattr__(self, "entity_overrides", ents)

    @classmethod
    def default(cls) -> "SynonymTable":
        return cls(
            predicate_synonyms={
                "works at": "employed_by",
                "works for": "employed_by",
                "employed by": "employed_by",
                "is employed by": "employed_by",
                "has param": "has_parameter",
                "has parameters": "has_parameter",
                "has lob": "has_line_of_business",
                "belongs to": "part_of",
                "is part of": "part_of",
                "related with": "related_to",
            }
        )

    @classmethod
    def from_file(cls, path, extend_default: bool = True) -> "SynonymTable":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        preds = dict(cls.default().predicate_synonyms) if extend_default else {}
        preds.update(data.get("predicate_synonyms", {}))
        return cls(predicate_synonyms=preds, entity_overrides=data.get("entity_overrides", {}))

    def to_dict(self) -> dict:
        return {
            "predicate_synonyms": dict(sorted(self.predicate_synonyms.items())),
            "entity_overrides": dict(sorted(self.entity_overrides.items())),
        }

    def entity(self, canonical: str) -> str:
        return self.entity_overrides.get(canonical, canonical)


def _functional_map(mapping, norm, what):
    out: dict[str, str] = {}
    for surface, canonical in mapping.items():
        key, value = norm(surface), norm(canonical)
        if key in out and out[key] != value:
            raise ValueError(f"{what} synonym {surface!r} maps to both {out[key]!r} and {value!r}")
        out[key] = value
    for key, value in out.items():
        if value in out and out[value] != value:
            raise ValueError(
                f"{what} synonym target {value!r} (from {key!r}) is itself remapped to {out[value]!r}"
            )
    return out


def canonicalize_predicate(surface: str, table: SynonymTable | None = None) -> str:
    """Lowercase, join words with underscores, then apply the synonym table
    (the default table when none is given).

    >>> canonicalize_predicate("works at", SynonymTable.default())
    'employed_by'
    """
    norm = normalize_predicate(surface)
    table = _default_table() if table is None else table
    return table.predicate_synonyms.get(norm, norm)


@lru_cache(maxsize=1)
def _default_table() -> SynonymTable:
    return SynonymTable.default()


def tokenize(text: str, mode: str = "word_boundary") -> list[str]:
    if mode == "whitespace":
        return text.lower().split()
    if mode == "word_boundary":
        return _WORD_RE.findall(text.lower())
    if mode == "lemma":
        return [singularize(t) for t in _WORD_RE.findall(text.lower())]
    raise ValueError(f"unknown tokenizer mode {mode!r}; expected one of {TOKENIZER_MODES}")


def name_tokens(text: str) -> list[str]:
    """Canonical tokens for name matching and hashing.

    Splits on anything that is not a letter or digit (so ``report_id`` gives
    ``report id``) and singularizes every token.
    """
    return [singularize(t) for t in _ALNUM_RE.findall(text.lower())]
