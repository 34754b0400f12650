from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import OntologyError

_SNAKE = re.compile(r"^[a-z][a-z0-9]*(_[a-z0-9]+)*$")

DEFAULT_ENTITY_TYPES = (
    "tool",
    "parameter",
    "line_of_business",
    "business_object",
    "capability",
    "department",
)

DEFAULT_PREDICATES = (
    # structural relations emitted for every tool
    "has_parameter",
    "has_entity",
    "has_line_of_business",
    "has_business_object",
    "has_capability",
    "has_department",
    # relations between extracted entities
    "used_by",
    "assigned_to",
    "related_to",
    "contains",
    "used_for",
    "has_attribute",
    "associated_with",
    "managed_by",
    "part_of",
    "required_for",
    "depends_on",
    "produces",
    "receives_from",
    "involved_in",
    "reports_to",
    "responsible_for",
    "affects",
    "includes",
    "employed_by",
    "categorized_by",
    "triggered_by",
)


@dataclass(frozen=True)
class Ontology:
    """Closed vocabularies of node types and edge predicates."""

    entity_types: frozenset[str]
    predicate_types: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "entity_types", frozenset(self.entity_types))
        object.__setattr__(self, "predicate_types", frozenset(self.predicate_types))
        if not self.entity_types or not self.predicate_types:
            raise OntologyError("ontology needs at least one entity type and one predicate")
        missing = {"tool", "parameter"} - self.entity_types
        if missing:
            raise OntologyError(f"ontology is missing required entity types {sorted(missing)}")
        bad = sorted(n for n in self.entity_types | self.predicate_types if not _SNAKE.match(n))
        if bad:
            raise OntologyError(f"ontology names must be lowercase snake_case: {bad}")

    @classmethod
    def default(cls) -> "Ontology":
        return cls(frozenset(DEFAULT_ENTITY_TYPES), frozenset(DEFAULT_PREDICATES))

    @property
    def metadata_types(self) -> frozenset[str]:
        """Entity types usable as tool metadata keys."""
        return self.entity_types - {"tool", "parameter"}

    def to_dict(self) -> dict:
        return {
            "entity_types": sorted(self.entity_types),
            "predicate_types": sorted(self.predicate_types),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Ontology":
        return cls(frozenset(data["entity_types"]), frozenset(data["predicate_types"]))

    def extended(self, entity_types=(), predicate_types=()) -> "Ontology":
        return Ontology(self.entity_types | set(entity_types), self.predicate_types | set(predicate_types))
