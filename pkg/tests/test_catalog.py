"""Catalog loading, predicate validation, tallies, mapping totality, seeds."""

import json

import pytest

from friakit.canonical import checksum_of
from friakit.catalog import (
    FieldType,
    Predicate,
    RuleSource,
    TaxonomyKind,
    default_conditions,
    default_mapping,
    default_rights,
    default_taxonomy,
    load_catalog,
    load_mapping_catalog,
    load_rights_catalog,
    load_taxonomy,
    seed_bytes,
    tally_catalog,
)
from friakit.errors import MissingField, ParseError, PredicateError, SchemaError
from friakit.model import MappingRelation, NecessityOutcome


def make_catalog_doc(rules=None, fields=None, **extra):
    return json.dumps({
        "version": "test-1",
        "field_dictionary": fields if fields is not None else {
            "flag": "boolean", "level": "ordinal", "tags": "tag-set",
        },
        "rules": rules if rules is not None else [],
        **extra,
    }).encode("utf-8")


class TestConditionCatalogLoading:
    def test_seed_has_25_annex3_rules(self):
        catalog = default_conditions()
        annex3 = [r for r in catalog.rules if r.source == RuleSource.AiActAnnexIII]
        assert len(annex3) >= 25

    def test_empty_rules_is_valid(self):
        catalog = load_catalog(make_catalog_doc(rules=[]))
        assert catalog.rules == ()

    def test_undeclared_field_names_rule(self):
        doc = make_catalog_doc(rules=[{
            "id": "bad-rule", "source": "GdprArt35",
            "predicate": {"op": "equals", "field": "nonexistent", "value": True},
            "outcome": "Required",
        }])
        with pytest.raises(PredicateError) as err:
            load_catalog(doc)
        assert "bad-rule" in str(err.value)
        assert "nonexistent" in str(err.value)

    def test_every_seed_rule_predicates_on_declared_fields(self):
        catalog = default_conditions()
        declared = set(catalog.field_dictionary)
        for rule in catalog.rules:
            assert rule.predicate.referenced_fields() <= declared, rule.id

    def test_malformed_bytes(self):
        with pytest.raises(ParseError):
            load_catalog(b"{not json")

    def test_unknown_top_level_key(self):
        with pytest.raises(SchemaError):
            load_catalog(make_catalog_doc(surprise=1))

    def test_duplicate_rule_ids(self):
        rule = {
            "id": "dup", "source": "GdprArt35",
            "predicate": {"op": "equals", "field": "flag", "value": True},
            "outcome": "Required",
        }
        with pytest.raises(SchemaError):
            load_catalog(make_catalog_doc(rules=[rule, rule]))

    def test_type_incompatible_operator(self):
        doc = make_catalog_doc(rules=[{
            "id": "r1", "source": "GdprArt35",
            "predicate": {"op": "contains-tag", "field": "flag", "value": "x"},
            "outcome": "Required",
        }])
        with pytest.raises(PredicateError):
            load_catalog(doc)

    def test_load_is_pure(self):
        doc = seed_bytes("conditions.json")
        a = load_catalog(doc)
        b = load_catalog(doc)
        assert a.checksum == b.checksum
        assert a == b
        assert a.checksum == checksum_of(json.loads(doc))

    def test_jurisdiction_slots_cover_all_thirty(self):
        assert len(default_conditions().jurisdiction_slots) == 30


class TestTally:
    def test_annex3_tally(self):
        report = tally_catalog(default_conditions(), RuleSource.AiActAnnexIII)
        assert report.total == 25
        assert report.counts[NecessityOutcome.Required] == 22
        assert report.counts[NecessityOutcome.Conditional] == 3

    def test_empty_catalog_all_zero(self):
        catalog = load_catalog(make_catalog_doc(rules=[]))
        report = tally_catalog(catalog, RuleSource.AiActAnnexIII)
        assert report.total == 0
        assert all(v == 0 for v in report.counts.values())

    def test_gdpr_art35_tally(self):
        report = tally_catalog(default_conditions(), RuleSource.GdprArt35)
        assert report.counts[NecessityOutcome.Required] == 3
        assert report.total == 3


class TestPredicates:
    def test_missing_field_is_error(self):
        predicate = Predicate(op="equals", field="flag", value=True)
        with pytest.raises(MissingField) as err:
            predicate.evaluate({}, "rule-x")
        assert err.value.field == "flag"
        assert err.value.rule_id == "rule-x"

    def test_boolean_tree(self):
        predicate = Predicate(
            op="and", args=(
                Predicate(op="equals", field="flag", value=True),
                Predicate(op="not", arg=Predicate(op="contains-tag", field="tags", value="x")),
            ),
        )
        assert predicate.evaluate({"flag": True, "tags": set()}, "r")
        assert not predicate.evaluate({"flag": True, "tags": {"x"}}, "r")

    def test_threshold(self):
        predicate = Predicate(op="threshold-gte", field="level", value=4)
        assert predicate.evaluate({"level": 4}, "r")
        assert not predicate.evaluate({"level": 3}, "r")

    def test_describe_is_readable(self):
        predicate = Predicate(op="threshold-gte", field="level", value=4)
        assert "level >= 4" in predicate.describe()


class TestMappingCatalog:
    def test_seed_is_total(self):
        # Loading enforces totality; reaching here means it held.
        catalog = default_mapping()
        assert len(catalog.entries) == 41

    def test_legal_bases_is_dpia_only(self):
        assert "legal_bases" in default_mapping().dpia_only_paths()

    def test_provenance_paths_are_fria_only(self):
        fria_only = set(default_mapping().fria_only_paths())
        assert {
            "provenance.development_summary",
            "provenance.datasheets",
            "provenance.lifecycle_changes",
        } <= fria_only

    def test_purposes_maps_partially_to_developed(self):
        entry = next(
            e for e in default_mapping().entries if e.dpia_path == "purposes"
        )
        assert entry.fria_path == "intended_purposes.developed"
        assert entry.relation == MappingRelation.Partial

    def test_missing_path_rejected(self):
        entries = [
            e.model_dump(mode="json") for e in default_mapping().entries
            if e.dpia_path != "legal_bases"
        ]
        with pytest.raises(SchemaError) as err:
            load_mapping_catalog(json.dumps({"version": "t", "entries": entries}))
        assert "legal_bases" in str(err.value)

    def test_duplicate_path_rejected(self):
        entries = [e.model_dump(mode="json") for e in default_mapping().entries]
        entries.append({"relation": "DpiaOnly", "dpia_path": "legal_bases"})
        with pytest.raises(SchemaError):
            load_mapping_catalog(json.dumps({"version": "t", "entries": entries}))

    def test_relation_path_consistency_rejected(self):
        with pytest.raises(SchemaError):
            load_mapping_catalog(json.dumps({"version": "t", "entries": [
                {"relation": "Equivalent", "dpia_path": "purposes"},
            ]}))


class TestRightsCatalog:
    def test_seed_contains_required_rights(self):
        rights = default_rights()
        non_discrimination = rights.by_article(21)
        assert "discrimination" in non_discrimination.name.lower()
        movement = rights.by_article(45)
        assert "movement" in movement.name.lower()

    def test_duplicate_articles_rejected(self):
        doc = json.dumps({"version": "t", "rights": [
            {"charter_article": 21, "name": "a", "exercise": "Passive", "limitability": "Limited"},
            {"charter_article": 21, "name": "b", "exercise": "Passive", "limitability": "Limited"},
        ]})
        with pytest.raises(SchemaError):
            load_rights_catalog(doc)


# The four taxonomy enumerations, frozen from their source lists.
EXPECTED_RISK_LABELS = {
    "The system stops working completely",
    "Component failure",
    "System or component experiences reduced efficiency",
    "System or component gives an incorrect output",
    "Unauthorised use of the system",
    "The system is attacked or damaged",
    "The system is hacked or taken control of",
}
EXPECTED_SOURCE_LABELS = {
    "The system itself",
    "A specific component of the system",
    "The user or operator of the system",
    "The human subject of the system",
    "The environment of use",
    "Malicious actors",
}
EXPECTED_CONSEQUENCE_LABELS = {
    "Reduction in service quality or availability",
    "Exclusion from service or process",
    "Loss of opportunity",
    "Delays in service or producing outputs",
    "Denial of a service",
    "Unauthorised use",
    "Physical effect on the subject",
    "Psychological effect",
    "Cybersecurity incident",
}
EXPECTED_MITIGATION_LABELS = {
    "Prevent or reduce the likelihood or the severity of the risk or consequence event",
    "Establish monitoring controls",
    "Technical and organisational audits",
    "Conducting organisational training",
    "Providing literacy and awareness to specific stakeholders",
}


class TestTaxonomies:
    @pytest.mark.parametrize("kind,count,labels", [
        (TaxonomyKind.Risk, 7, EXPECTED_RISK_LABELS),
        (TaxonomyKind.RiskSource, 6, EXPECTED_SOURCE_LABELS),
        (TaxonomyKind.Consequence, 9, EXPECTED_CONSEQUENCE_LABELS),
        (TaxonomyKind.Mitigation, 5, EXPECTED_MITIGATION_LABELS),
    ])
    def test_seed_counts_and_labels(self, kind, count, labels):
        taxonomy = default_taxonomy(kind)
        assert len(taxonomy.entries) == count
        assert {e.label for e in taxonomy.entries} == labels

    def test_missing_section_rejected(self):
        with pytest.raises(SchemaError):
            load_taxonomy(json.dumps({"version": "t", "taxonomies": {}}), TaxonomyKind.Risk)
