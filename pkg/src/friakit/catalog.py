"""Declarative catalogs: condition rules, field mappings, rights, taxonomies.

Catalogs are data, not code. They load from human-editable JSON documents,
validate against a closed schema, and are immutable afterwards; swapping a
catalog means loading a new version. The predicate language is a closed
boolean expression tree (equals / contains-tag / threshold-gte / and / or /
not), which keeps every trigger condition auditable and serializable.
"""

from __future__ import annotations

import json
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any, Literal, Mapping, Optional, Union

import pydantic
from pydantic import Field, field_validator, model_validator

from .canonical import checksum_of
from .errors import MissingField, ParseError, PredicateError, SchemaError
from .model import (
    DPIA_LEAF_PATHS,
    EU_EEA_COUNTRIES,
    FRIA_LEAF_PATHS,
    Frozen,
    FundamentalRight,
    MappingRelation,
    NecessityOutcome,
    SortedStrSet,
)


# ---------------------------------------------------------------------------
# Predicate expression trees
# ---------------------------------------------------------------------------

class FieldType(str, Enum):
    Boolean = "boolean"
    Ordinal = "ordinal"
    Number = "number"
    String = "string"
    TagSet = "tag-set"


# Which predicate operators make sense on which field types.
_OPS_BY_TYPE: dict[FieldType, frozenset[str]] = {
    FieldType.Boolean: frozenset({"equals"}),
    FieldType.Ordinal: frozenset({"equals", "threshold-gte"}),
    FieldType.Number: frozenset({"equals", "threshold-gte"}),
    FieldType.String: frozenset({"equals"}),
    FieldType.TagSet: frozenset({"contains-tag"}),
}


class Predicate(Frozen):
    """One node of a condition expression tree."""

    op: Literal["equals", "contains-tag", "threshold-gte", "and", "or", "not"]
    field: Optional[str] = None
    value: Any = None
    args: tuple["Predicate", ...] = ()
    arg: Optional["Predicate"] = None

    @model_validator(mode="after")
    def _shape(self) -> "Predicate":
        if self.op in ("equals", "contains-tag", "threshold-gte"):
            if not self.field:
                raise ValueError(f"{self.op} needs a field name")
            if self.value is None:
                raise ValueError(f"{self.op} needs a comparison value")
        elif self.op in ("and", "or"):
            if len(self.args) < 2:
                raise ValueError(f"{self.op} needs at least two operands")
        elif self.op == "not":
            if self.arg is None:
                raise ValueError("not needs exactly one operand")
        return self

    def referenced_fields(self) -> set[str]:
        if self.field:
            return {self.field}
        fields: set[str] = set()
        for child in self.args:
            fields |= child.referenced_fields()
        if self.arg:
            fields |= self.arg.referenced_fields()
        return fields

    def evaluate(self, fields: Mapping[str, Any], rule_id: str) -> bool:
        """Evaluate against a profile field map; absent fields are an error,
        because treating them as false would under-trigger obligations."""
        if self.op == "and":
            return all(child.evaluate(fields, rule_id) for child in self.args)
        if self.op == "or":
            return any(child.evaluate(fields, rule_id) for child in self.args)
        if self.op == "not":
            assert self.arg is not None
            return not self.arg.evaluate(fields, rule_id)
        assert self.field is not None
        if self.field not in fields or fields[self.field] is None:
            raise MissingField(self.field, rule_id)
        actual = fields[self.field]
        if self.op == "equals":
            return actual == self.value
        if self.op == "contains-tag":
            return self.value in actual
        return actual >= self.value  # threshold-gte

    def describe(self) -> str:
        if self.op == "and":
            return "(" + " and ".join(c.describe() for c in self.args) + ")"
        if self.op == "or":
            return "(" + " or ".join(c.describe() for c in self.args) + ")"
        if self.op == "not":
            assert self.arg is not None
            return f"not {self.arg.describe()}"
        if self.op == "equals":
            return f"{self.field} = {json.dumps(self.value)}"
        if self.op == "contains-tag":
            return f"{self.field} contains {json.dumps(self.value)}"
        return f"{self.field} >= {self.value}"


def validate_predicate_fields(
    predicate: Predicate, dictionary: Mapping[str, FieldType], rule_id: str
) -> None:
    """Reject predicates over undeclared fields or type-incompatible operators."""
    if predicate.op in ("and", "or"):
        for child in predicate.args:
            validate_predicate_fields(child, dictionary, rule_id)
        return
    if predicate.op == "not":
        assert predicate.arg is not None
        validate_predicate_fields(predicate.arg, dictionary, rule_id)
        return
    assert predicate.field is not None
    if predicate.field not in dictionary:
        raise PredicateError(rule_id, predicate.field)
    allowed = _OPS_BY_TYPE[dictionary[predicate.field]]
    if predicate.op not in allowed:
        raise PredicateError(
            rule_id, predicate.field,
            f"operator {predicate.op!r} not usable on {dictionary[predicate.field].value} fields",
        )


# ---------------------------------------------------------------------------
# Condition catalog
# ---------------------------------------------------------------------------

class RuleSource(str, Enum):
    GdprArt35 = "GdprArt35"
    EdpbGuideline = "EdpbGuideline"
    DpaList = "DpaList"
    AiActAnnexI = "AiActAnnexI"
    AiActAnnexIII = "AiActAnnexIII"
    AiActArt6 = "AiActArt6"
    AiActArt27 = "AiActArt27"


# Strongest outcome wins; an Exempt rule beats Required only when the rule
# is explicitly marked overriding (conservative compliance default).
OUTCOME_STRENGTH: dict[NecessityOutcome, int] = {
    NecessityOutcome.Required: 3,
    NecessityOutcome.Conditional: 2,
    NecessityOutcome.Exempt: 1,
    NecessityOutcome.NotRequired: 0,
}


class ConditionRule(Frozen):
    id: str = Field(min_length=1)
    source: RuleSource
    jurisdictions: Union[Literal["All"], SortedStrSet] = "All"
    predicate: Predicate
    outcome: NecessityOutcome
    overriding: bool = False
    citation: str = ""
    notes: str = ""

    @field_validator("jurisdictions")
    @classmethod
    def _admissible(cls, v):
        if v == "All":
            return v
        unknown = set(v) - set(EU_EEA_COUNTRIES)
        if unknown:
            raise ValueError(f"unknown jurisdiction codes: {sorted(unknown)}")
        return v

    def applies_to(self, code: str) -> bool:
        return self.jurisdictions == "All" or code in self.jurisdictions


class ConditionCatalog(Frozen):
    version: str
    field_dictionary: dict[str, FieldType]
    rules: tuple[ConditionRule, ...]
    jurisdiction_slots: dict[str, str] = Field(default_factory=dict)
    checksum: str = ""

    def rules_for(
        self, sources: set[RuleSource], jurisdiction_code: str
    ) -> tuple[ConditionRule, ...]:
        return tuple(
            r for r in self.rules
            if r.source in sources and r.applies_to(jurisdiction_code)
        )

    def rule(self, rule_id: str) -> ConditionRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


class TallyReport(Frozen):
    source: RuleSource
    counts: dict[NecessityOutcome, int]
    total: int


_CATALOG_KEYS = {"version", "field_dictionary", "rules", "jurisdiction_slots"}


def _parse_document(document: Union[bytes, str]) -> Any:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"catalog is not valid UTF-8: {exc}") from exc
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"catalog is not valid JSON: {exc}") from exc


def load_catalog(document: Union[bytes, str]) -> ConditionCatalog:
    """Parse, schema-check, and predicate-validate a condition catalog."""
    tree = _parse_document(document)
    if not isinstance(tree, dict):
        raise SchemaError("catalog root must be an object")
    unknown = set(tree) - _CATALOG_KEYS
    if unknown:
        raise SchemaError(f"unknown catalog keys: {sorted(unknown)}")
    for required in ("version", "field_dictionary", "rules"):
        if required not in tree:
            raise SchemaError(f"catalog is missing {required!r}")
    try:
        catalog = ConditionCatalog(
            version=tree["version"],
            field_dictionary=tree["field_dictionary"],
            rules=tree["rules"],
            jurisdiction_slots=tree.get("jurisdiction_slots", {}),
            checksum=checksum_of(tree),
        )
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc
    seen: set[str] = set()
    for rule in catalog.rules:
        if rule.id in seen:
            raise SchemaError(f"duplicate rule id {rule.id!r}")
        seen.add(rule.id)
        validate_predicate_fields(rule.predicate, catalog.field_dictionary, rule.id)
    return catalog


def tally_catalog(catalog: ConditionCatalog, source: RuleSource) -> TallyReport:
    counts = {outcome: 0 for outcome in NecessityOutcome}
    for rule in catalog.rules:
        if rule.source == source:
            counts[rule.outcome] += 1
    return TallyReport(source=source, counts=counts, total=sum(counts.values()))


# ---------------------------------------------------------------------------
# Mapping catalog (DPIA field <-> FRIA field alignment)
# ---------------------------------------------------------------------------

class MappingEntry(Frozen):
    relation: MappingRelation
    dpia_path: Optional[str] = None
    fria_path: Optional[str] = None
    transform_note: str = ""

    @model_validator(mode="after")
    def _paths_match_relation(self) -> "MappingEntry":
        if self.relation in (MappingRelation.Equivalent, MappingRelation.Partial):
            if not (self.dpia_path and self.fria_path):
                raise ValueError(f"{self.relation.value} entries carry both paths")
        elif self.relation == MappingRelation.DpiaOnly:
            if not self.dpia_path or self.fria_path:
                raise ValueError("DpiaOnly entries carry only a dpia_path")
        else:
            if not self.fria_path or self.dpia_path:
                raise ValueError("FriaOnly entries carry only a fria_path")
        return self


class MappingCatalog(Frozen):
    version: str
    entries: tuple[MappingEntry, ...]
    checksum: str = ""

    def shared(self) -> tuple[MappingEntry, ...]:
        return tuple(
            e for e in self.entries
            if e.relation in (MappingRelation.Equivalent, MappingRelation.Partial)
        )

    def dpia_only_paths(self) -> tuple[str, ...]:
        return tuple(
            e.dpia_path for e in self.entries
            if e.relation == MappingRelation.DpiaOnly and e.dpia_path
        )

    def fria_only_paths(self) -> tuple[str, ...]:
        return tuple(
            e.fria_path for e in self.entries
            if e.relation == MappingRelation.FriaOnly and e.fria_path
        )


def load_mapping_catalog(document: Union[bytes, str]) -> MappingCatalog:
    """Load and enforce totality: every leaf path of both description types
    appears in exactly one entry."""
    tree = _parse_document(document)
    if not isinstance(tree, dict):
        raise SchemaError("mapping catalog root must be an object")
    unknown = set(tree) - {"version", "entries"}
    if unknown:
        raise SchemaError(f"unknown mapping catalog keys: {sorted(unknown)}")
    try:
        catalog = MappingCatalog(
            version=tree.get("version", ""),
            entries=tree.get("entries", []),
            checksum=checksum_of(tree),
        )
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc

    problems: list[str] = []
    dpia_seen: dict[str, int] = {}
    fria_seen: dict[str, int] = {}
    for entry in catalog.entries:
        if entry.dpia_path:
            dpia_seen[entry.dpia_path] = dpia_seen.get(entry.dpia_path, 0) + 1
        if entry.fria_path:
            fria_seen[entry.fria_path] = fria_seen.get(entry.fria_path, 0) + 1
    for path, count in sorted(dpia_seen.items()):
        if path not in DPIA_LEAF_PATHS:
            problems.append(f"unknown dpia path {path!r}")
        elif count > 1:
            problems.append(f"dpia path {path!r} mapped {count} times")
    for path, count in sorted(fria_seen.items()):
        if path not in FRIA_LEAF_PATHS:
            problems.append(f"unknown fria path {path!r}")
        elif count > 1:
            problems.append(f"fria path {path!r} mapped {count} times")
    for path in DPIA_LEAF_PATHS:
        if path not in dpia_seen:
            problems.append(f"dpia path {path!r} is unmapped")
    for path in FRIA_LEAF_PATHS:
        if path not in fria_seen:
            problems.append(f"fria path {path!r} is unmapped")
    if problems:
        raise SchemaError("mapping catalog is not total: " + "; ".join(problems))
    return catalog


# ---------------------------------------------------------------------------
# Rights catalog
# ---------------------------------------------------------------------------

class RightsCatalog(Frozen):
    version: str
    rights: tuple[FundamentalRight, ...]
    checksum: str = ""

    def __iter__(self):
        return iter(self.rights)

    def __len__(self) -> int:
        return len(self.rights)

    def by_article(self, article: int) -> FundamentalRight:
        for right in self.rights:
            if right.charter_article == article:
                return right
        raise KeyError(article)


def load_rights_catalog(document: Union[bytes, str]) -> RightsCatalog:
    tree = _parse_document(document)
    if not isinstance(tree, dict):
        raise SchemaError("rights catalog root must be an object")
    unknown = set(tree) - {"version", "rights"}
    if unknown:
        raise SchemaError(f"unknown rights catalog keys: {sorted(unknown)}")
    try:
        catalog = RightsCatalog(
            version=tree.get("version", ""),
            rights=tree.get("rights", []),
            checksum=checksum_of(tree),
        )
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc
    articles = [r.charter_article for r in catalog.rights]
    if len(articles) != len(set(articles)):
        raise SchemaError("duplicate charter articles in rights catalog")
    return catalog


# ---------------------------------------------------------------------------
# Taxonomies
# ---------------------------------------------------------------------------

class TaxonomyKind(str, Enum):
    Risk = "Risk"
    RiskSource = "RiskSource"
    Consequence = "Consequence"
    Mitigation = "Mitigation"


class TaxonomyEntry(Frozen):
    id: str = Field(min_length=1)
    label: str = Field(min_length=1)
    description: str = ""


class Taxonomy(Frozen):
    kind: TaxonomyKind
    entries: tuple[TaxonomyEntry, ...]
    version: str = ""

    def ids(self) -> frozenset[str]:
        return frozenset(e.id for e in self.entries)

    def entry(self, entry_id: str) -> TaxonomyEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)


def load_taxonomy(document: Union[bytes, str], kind: TaxonomyKind) -> Taxonomy:
    tree = _parse_document(document)
    if not isinstance(tree, dict):
        raise SchemaError("taxonomy document root must be an object")
    unknown = set(tree) - {"version", "taxonomies"}
    if unknown:
        raise SchemaError(f"unknown taxonomy document keys: {sorted(unknown)}")
    taxonomies = tree.get("taxonomies", {})
    if kind.value not in taxonomies:
        raise SchemaError(f"taxonomy document has no {kind.value!r} section")
    try:
        taxonomy = Taxonomy(
            kind=kind,
            entries=taxonomies[kind.value],
            version=tree.get("version", ""),
        )
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc
    ids = [e.id for e in taxonomy.entries]
    if len(ids) != len(set(ids)):
        raise SchemaError(f"duplicate entry ids in {kind.value} taxonomy")
    return taxonomy


# ---------------------------------------------------------------------------
# Seed data
# ---------------------------------------------------------------------------

def seed_bytes(name: str) -> bytes:
    return resources.files("friakit.data").joinpath(name).read_bytes()


@lru_cache(maxsize=None)
def default_conditions() -> ConditionCatalog:
    return load_catalog(seed_bytes("conditions.json"))


@lru_cache(maxsize=None)
def default_mapping() -> MappingCatalog:
    return load_mapping_catalog(seed_bytes("mapping.json"))


@lru_cache(maxsize=None)
def default_rights() -> RightsCatalog:
    return load_rights_catalog(seed_bytes("rights.json"))


@lru_cache(maxsize=None)
def default_taxonomy(kind: TaxonomyKind) -> Taxonomy:
    return load_taxonomy(seed_bytes("taxonomies.json"), kind)


def default_taxonomies() -> dict[TaxonomyKind, Taxonomy]:
    return {kind: default_taxonomy(kind) for kind in TaxonomyKind}
