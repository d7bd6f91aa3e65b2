"""Stage 1: decide whether a DPIA and/or FRIA is required, with a full trace.

Pure functions over immutable inputs. Every rule that is in scope for the
jurisdiction is evaluated and appears in the trace; the decision outcome is
the tie-break resolution over the rules that fired.

Annex III rules carry data-protection-oriented outcomes (does the clause make
a DPIA necessary). For the FRIA question the same match means the system is
high-risk, so a fired high-risk rule contributes Required to the FRIA
decision when the profile holds the deployer duty, regardless of the stored
outcome; exemption rules contribute Exempt and may override when marked.
"""

from __future__ import annotations

from typing import Any, Mapping, Union

from .catalog import OUTCOME_STRENGTH, ConditionCatalog, ConditionRule, RuleSource
from .model import (
    DpiaDescription,
    Frozen,
    Jurisdiction,
    Locality,
    NecessityDecision,
    NecessityOutcome,
    NecessitySubject,
    RuleFiring,
    SystemProfile,
    TraceEntry,
)

DPIA_SOURCES = {
    RuleSource.GdprArt35,
    RuleSource.EdpbGuideline,
    RuleSource.DpaList,
    RuleSource.AiActAnnexIII,
}
FRIA_SOURCES = {
    RuleSource.AiActAnnexI,
    RuleSource.AiActAnnexIII,
    RuleSource.AiActArt6,
    RuleSource.AiActArt27,
}
HIGH_RISK_SOURCES = {
    RuleSource.AiActAnnexI,
    RuleSource.AiActAnnexIII,
    RuleSource.AiActArt6,
}

# Annex III areas by rule-id prefix, for high-risk classification reports.
ANNEX3_AREAS: dict[str, str] = {
    "annex3-1": "biometrics",
    "annex3-2": "critical-infrastructure",
    "annex3-3": "education-and-vocational-training",
    "annex3-4": "employment-and-workers-management",
    "annex3-5": "essential-private-and-public-services",
    "annex3-6": "law-enforcement",
    "annex3-7": "migration-and-border-control",
    "annex3-8": "justice-and-democratic-processes",
}


class HighRiskMatch(Frozen):
    area: str
    rule_id: str
    citation: str


class HighRiskClassification(Frozen):
    areas: tuple[str, ...]
    matches: tuple[HighRiskMatch, ...]
    catalog_version: str


ProfileLike = Union[SystemProfile, DpiaDescription, Mapping[str, Any]]


def profile_from_dpia(d: DpiaDescription) -> SystemProfile:
    """Derive the rule-facing feature snapshot from a systematic description."""
    return SystemProfile(
        processes_personal_data=bool(d.personal_data),
        special_category=any(item.special_category for item in d.personal_data),
        profiling=any(op.profiling for op in d.processing_operations),
        scoring=any(op.scoring for op in d.processing_operations),
        automated_decisions=any(
            op.automation and op.decision_making for op in d.processing_operations
        ),
        legal_or_significant_effects=any(
            op.decision_making for op in d.processing_operations
        ),
        public_area_monitoring=d.locality == Locality.PublicArea,
        vulnerable_subjects=any(s.vulnerable for s in d.data_subjects),
        scale_data=d.scale.data,
        scale_operations=d.scale.operations,
        scale_subjects=d.scale.subjects,
    )


def _fields_of(profile: ProfileLike) -> Mapping[str, Any]:
    if isinstance(profile, DpiaDescription):
        return profile_from_dpia(profile).to_fields()
    if isinstance(profile, SystemProfile):
        return profile.to_fields()
    return profile


def resolve_outcome(firings: list[RuleFiring], catalog: ConditionCatalog) -> NecessityOutcome:
    """Strongest-outcome tie-break with the overriding-exemption escape hatch."""
    if not firings:
        return NecessityOutcome.NotRequired
    for firing in firings:
        if firing.outcome == NecessityOutcome.Exempt and catalog.rule(firing.rule_id).overriding:
            return NecessityOutcome.Exempt
    return max((f.outcome for f in firings), key=lambda o: OUTCOME_STRENGTH[o])


def _evaluate(
    subject: NecessitySubject,
    rules: tuple[ConditionRule, ...],
    fields: Mapping[str, Any],
    jurisdiction: Jurisdiction,
    catalog: ConditionCatalog,
    deployer_duty: bool,
) -> NecessityDecision:
    firings: list[RuleFiring] = []
    trace: list[TraceEntry] = []
    open_conditions: list[str] = []
    for rule in rules:
        fired = rule.predicate.evaluate(fields, rule.id)
        if not fired:
            trace.append(TraceEntry(
                rule_id=rule.id, predicate_result=False,
                explanation=f"{rule.predicate.describe()} did not match",
            ))
            continue
        contribution = rule.outcome
        explanation = f"{rule.predicate.describe()} matched -> {rule.outcome.value}"
        if (
            subject == NecessitySubject.Fria
            and rule.source in HIGH_RISK_SOURCES
            and rule.outcome != NecessityOutcome.Exempt
        ):
            # A high-risk match obliges the deployer; other roles carry no
            # stage-5 duty of their own for this system.
            if deployer_duty:
                contribution = NecessityOutcome.Required
                explanation = f"{rule.predicate.describe()} matched -> high-risk, assessment required"
            else:
                contribution = NecessityOutcome.NotRequired
                explanation = (
                    f"{rule.predicate.describe()} matched, but the profile holds no "
                    "deployer role, so no assessment duty attaches"
                )
        if rule.outcome == NecessityOutcome.Exempt and rule.overriding:
            explanation += " (overriding exemption)"
        if contribution == NecessityOutcome.Conditional and rule.notes:
            open_conditions.append(f"{rule.id}: {rule.notes}")
        firings.append(RuleFiring(rule_id=rule.id, outcome=contribution))
        trace.append(TraceEntry(rule_id=rule.id, predicate_result=True, explanation=explanation))
    return NecessityDecision(
        subject=subject,
        outcome=resolve_outcome(firings, catalog),
        fired_rules=tuple(firings),
        trace=tuple(trace),
        jurisdiction=jurisdiction,
        catalog_version=catalog.version,
        open_conditions=tuple(open_conditions),
    )


def evaluate_dpia_necessity(
    profile: ProfileLike,
    jurisdiction: Jurisdiction,
    catalog: ConditionCatalog,
) -> NecessityDecision:
    """Evaluate the data-protection trigger rules in scope for a jurisdiction."""
    fields = _fields_of(profile)
    rules = catalog.rules_for(DPIA_SOURCES, jurisdiction.code)
    return _evaluate(NecessitySubject.Dpia, rules, fields, jurisdiction, catalog, deployer_duty=True)


def evaluate_fria_necessity(
    profile: Union[SystemProfile, Mapping[str, Any]],
    catalog: ConditionCatalog,
    jurisdiction: Jurisdiction | None = None,
) -> NecessityDecision:
    """Required iff a high-risk rule fires for a deployer and no overriding
    exemption fires. The duty is union-wide, so jurisdiction only scopes
    which rules apply (national lists), not the outcome semantics."""
    fields = _fields_of(profile)
    jurisdiction = jurisdiction or Jurisdiction(code="IE")
    rules = catalog.rules_for(FRIA_SOURCES, jurisdiction.code)
    deployer_duty = "deployer" in {str(r).lower() for r in fields.get("roles", set())}
    return _evaluate(NecessitySubject.Fria, rules, fields, jurisdiction, catalog, deployer_duty)


def classify_high_risk(
    profile: Union[SystemProfile, Mapping[str, Any]],
    catalog: ConditionCatalog,
) -> HighRiskClassification:
    """Match the profile against the high-risk classification rules and
    report every matched area; no role gating, no deduplication loss."""
    fields = _fields_of(profile)
    matches: list[HighRiskMatch] = []
    for rule in catalog.rules:
        if rule.source not in HIGH_RISK_SOURCES:
            continue
        if not rule.predicate.evaluate(fields, rule.id):
            continue
        area = "annex1" if rule.source == RuleSource.AiActAnnexI else "art6"
        for prefix, name in ANNEX3_AREAS.items():
            if rule.id.startswith(prefix):
                area = name
                break
        matches.append(HighRiskMatch(area=area, rule_id=rule.id, citation=rule.citation))
    seen: list[str] = []
    for match in matches:
        if match.area not in seen:
            seen.append(match.area)
    return HighRiskClassification(
        areas=tuple(seen), matches=tuple(matches), catalog_version=catalog.version
    )
