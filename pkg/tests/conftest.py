"""Shared fixtures: the automated passport-control scenario end to end."""

from __future__ import annotations

import pytest

from friakit.bridge import check_prefill_coverage, map_dpia_to_fria
from friakit.catalog import default_mapping
from friakit.intake import materialize_fria, next_questions, submit_answer
from friakit.model import (
    Assessment,
    ConsequenceRef,
    CrossBorder,
    DpiaDescription,
    DurationProfile,
    EntityRef,
    Jurisdiction,
    MitigationRef,
    PersonalDataItem,
    ProcessingOperation,
    Purpose,
    RiskItem,
    ScaleProfile,
    SubjectCategory,
    SystemProfile,
    new_assessment,
)
from friakit.necessity import evaluate_fria_necessity
from friakit.risk import apply_mitigations, default_matrix
from friakit.catalog import default_conditions
from friakit import impacts as impacts_mod
from friakit.intake import classify_affected_persons


@pytest.fixture
def jurisdiction() -> Jurisdiction:
    return Jurisdiction(code="IE")


@pytest.fixture
def passport_profile() -> SystemProfile:
    return SystemProfile(
        roles=frozenset({"deployer"}),
        annex3_tags=frozenset({"border-identification"}),
        processes_personal_data=True,
        special_category=True,
        automated_decisions=True,
        legal_or_significant_effects=True,
        public_area_monitoring=True,
        scale_data=4,
        scale_operations=4,
        scale_subjects=5,
    )


@pytest.fixture
def passport_dpia() -> DpiaDescription:
    return DpiaDescription(
        purposes=(
            Purpose(
                id="purpose-border-check",
                description="Verify traveller identity at the border crossing",
                kind="Deployment",
                domain_tags=frozenset({"border-control"}),
                capability_tags=frozenset({"face-matching"}),
            ),
        ),
        processing_operations=(
            ProcessingOperation(name="face capture", automation=True),
            ProcessingOperation(
                name="identity matching", automation=True,
                scoring=True, decision_making=True,
            ),
        ),
        personal_data=(
            PersonalDataItem(
                name="passport photo", special_category=True,
                quality={"accuracy": 4, "completeness": 5}, role_in_system="Input",
            ),
            PersonalDataItem(
                name="live face image", special_category=True,
                quality={"accuracy": 4, "completeness": 4}, role_in_system="Input",
            ),
        ),
        data_subjects=(SubjectCategory(category="passengers", vulnerable=False),),
        entities=(
            EntityRef(id="border-agency", name="Border agency",
                      roles=frozenset({"Controller", "Deployer"})),
            EntityRef(id="officer", name="Immigration officer",
                      roles=frozenset({"AiUser"}), relationship_to_deployer="Employment"),
        ),
        cross_border=CrossBorder(enabled=False),
        scale=ScaleProfile(data=4, operations=4, subjects=5),
        duration=DurationProfile(processing_days=365, storage_days=30,
                                 deletion_policy="purged after 30 days"),
        legal_bases=("LegalObligation",),
        necessity_statement="Identity verification at borders is a statutory requirement.",
        proportionality_statement="Only the passport photo and a live image are compared.",
        inferences=("identity match decision",),
        technical_measures=("template encryption", "on-device matching"),
        organisational_measures=("officer supervision procedure",),
        locality="PublicArea",
    )


PASSPORT_ANSWERS: list[dict] = [
    {"question_id": "q-purposes-developed", "value": [{
        "id": "purpose-dev", "kind": "Development",
        "description": "Automated passport verification at border gates",
        "domain_tags": ["border-control"], "capability_tags": ["face-matching"],
    }]},
    {"question_id": "q-purposes-marketed", "value": [{
        "id": "purpose-market", "kind": "MarketPlacement",
        "description": "eGate identity verification product",
        "domain_tags": ["border-control"], "capability_tags": ["face-matching"],
    }]},
    {"question_id": "q-deployer", "value": [{
        "id": "border-agency", "name": "Border agency", "roles": ["Deployer", "Controller"],
    }]},
    {"question_id": "q-provider", "value": [{
        "id": "vendor", "name": "Gate Systems Ltd", "roles": ["Provider"],
    }]},
    {"question_id": "q-can-update", "value": False},
    {"question_id": "q-users", "value": [{
        "id": "officer", "name": "Immigration officer", "roles": ["AiUser"],
        "relationship_to_deployer": "Employment",
    }]},
    {"question_id": "q-ai-subjects", "value": [{
        "id": "passenger", "name": "Passengers", "roles": ["AiSubject"],
        "relationship_to_deployer": "ServiceRecipient",
    }]},
    {"question_id": "q-interaction-context", "value": [{
        "subject_id": "passenger", "active": True, "intended": True, "informed": True,
    }]},
    {"question_id": "q-subject-controls", "value": ["None"]},
    {"question_id": "q-data-inputs", "value": [
        {"name": "passport photo", "special_category": True,
         "quality": {"accuracy": 4, "completeness": 5}, "role_in_system": "Input"},
        {"name": "live face image", "special_category": True,
         "quality": {"accuracy": 4, "completeness": 4}, "role_in_system": "Input"},
        {"name": "training face dataset", "special_category": True,
         "quality": {"accuracy": 2, "completeness": 3}, "role_in_system": "Training"},
    ]},
    {"question_id": "q-data-collection-purposes", "value": [{
        "id": "purpose-collect", "kind": "DataCollection",
        "description": "Collection of face images for identity verification",
        "domain_tags": ["border-control"], "capability_tags": [],
    }]},
    {"question_id": "q-data-operations", "value": ["face capture", "template extraction", "matching"]},
    {"question_id": "q-data-outputs", "value": [{
        "name": "identity match decision", "is_inference": True,
        "quality": {"accuracy": 4, "completeness": 4}, "role_in_system": "Output",
    }]},
    {"question_id": "q-output-profiling", "value": False},
    {"question_id": "q-output-decision", "value": True},
    {"question_id": "q-integrations", "value": ["passport chip reader", "border gate control"]},
    {"question_id": "q-modality", "value": "fixed eGate lane at the airport border crossing"},
    {"question_id": "q-hardware-software", "value": ["gate camera", "face matching engine"]},
    {"question_id": "q-user-interface", "value": "officer monitoring console"},
    {"question_id": "q-duration", "value": "365"},
    {"question_id": "q-frequency", "value": "5000"},
    {"question_id": "q-development-summary",
     "value": "Trained by the vendor on a licensed face dataset; validated on airport pilot data."},
    {"question_id": "q-datasheets", "value": [{
        "title": "face-dataset-sheet", "reference": "DS-1",
        "notes": "documented lower accuracy for some demographic groups",
    }]},
    {"question_id": "q-lifecycle-changes", "value": [{
        "description": "matching threshold updated", "date": "2026-01-15",
    }]},
    {"question_id": "q-expected-outputs", "value": "match or no-match decision with confidence score"},
    {"question_id": "q-logic-summary",
     "value": "face embedding comparison against the passport chip photo with a fixed decision threshold"},
    {"question_id": "q-predetermined-changes", "value": ["quarterly model refresh"]},
    {"question_id": "q-performance-metrics", "value": [{
        "metric": "false_rejection_rate", "value": 0.02,
        "appropriateness": "acceptable for gate throughput; varies across demographic groups",
    }]},
]


@pytest.fixture
def passport_answers() -> list[dict]:
    return [dict(entry) for entry in PASSPORT_ANSWERS]


def make_passport_risk() -> RiskItem:
    return RiskItem(
        id="risk-biased-match",
        risk_kind="incorrect_output",
        sources=frozenset({"system_component"}),
        threat_description=(
            "face matching fails disproportionately for some demographic groups"
        ),
        likelihood=4,
        severity=4,
        consequences=(
            ConsequenceRef(taxonomy_id="exclusion_from_service",
                           affected_profile="passenger",
                           significant=True, lasting="Temporary"),
            ConsequenceRef(taxonomy_id="service_delay",
                           affected_profile="passenger"),
        ),
        mitigations=(
            MitigationRef(taxonomy_id="prevent_or_reduce", strategy="Reduce",
                          likelihood_delta=2),
            MitigationRef(taxonomy_id="monitoring_controls", strategy="Monitor"),
        ),
    )


@pytest.fixture
def passport_risk() -> RiskItem:
    return make_passport_risk()


def build_passport_assessment(answers: list[dict] | None = None) -> Assessment:
    """Drive the full pipeline through the engine functions (no HTTP)."""
    profile = SystemProfile(
        roles=frozenset({"deployer"}),
        annex3_tags=frozenset({"border-identification"}),
        processes_personal_data=True,
        special_category=True,
        automated_decisions=True,
        legal_or_significant_effects=True,
        public_area_monitoring=True,
        scale_data=4, scale_operations=4, scale_subjects=5,
    )
    assessment = new_assessment("passport-e2e", Jurisdiction(code="IE"), actor="test")
    decision = evaluate_fria_necessity(profile, default_conditions(), assessment.jurisdiction)
    assessment = assessment.record(
        "stage1.profile", "test", system_profile=profile, necessity=decision,
    ).complete_stage(1, "test")
    assessment = assessment.skip_stage2("test")
    for entry in (answers or PASSPORT_ANSWERS):
        assessment = submit_answer(assessment, entry["question_id"], entry["value"], actor="test")
    assert not next_questions(assessment)
    description = materialize_fria(assessment)
    assessment = assessment.record(
        "stage3.materialize", "test", fria=description,
    )
    risk_item = apply_mitigations(make_passport_risk(), default_matrix())
    assessment = assessment.record(
        "stage3.risk", "test", risks=(risk_item,),
    ).complete_stage(3, "test")
    profiles = classify_affected_persons(description)
    derivation = impacts_mod.derive_rights_impacts(assessment.risks, profiles)
    enriched = tuple(
        impact.model_copy(update={"remedial_measures": impacts_mod.suggest_remedies(impact)})
        for impact in derivation.impacts
    )
    assessment = assessment.record("stage4.derive", "test", impacts=enriched)
    assessment = assessment.complete_stage(4, "test")
    return assessment


@pytest.fixture
def passport_assessment() -> Assessment:
    return build_passport_assessment()


@pytest.fixture
def passport_prefill(passport_dpia):
    result = map_dpia_to_fria(passport_dpia, default_mapping())
    check_prefill_coverage(result)
    return result
