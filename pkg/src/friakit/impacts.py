"""Stage 4: derive impacts on fundamental rights from risk consequences.

The engine proposes and the human disposes: a rule table maps consequence
kinds (optionally filtered by person and right attributes) to impact
categories; anything without a matching rule lands in a leftover report for
human classification instead of being dropped or guessed. Escalation
("becomes a violation if left unresolved") is declared on the impact and
materialized at report time, not silently applied.
"""

from __future__ import annotations

import json
from functools import lru_cache
from typing import Optional, Union

import pydantic
from pydantic import Field, model_validator

from .catalog import RightsCatalog, Taxonomy, TaxonomyKind, default_rights, default_taxonomy
from .errors import DanglingRef, ParseError, SchemaError
from .intake import AffectedPersonProfile
from .model import (
    CategorySet,
    ConsequenceRef,
    Frozen,
    FundamentalRight,
    ImpactCategory,
    RemedialMeasure,
    RightExercise,
    RightLimitability,
    RightsImpact,
    RiskItem,
)


# ---------------------------------------------------------------------------
# Impact rules
# ---------------------------------------------------------------------------

class PersonCondition(Frozen):
    """Equality tests over affected-person fields; all listed must hold."""

    vulnerable: Optional[bool] = None
    vulnerability_basis: Optional[str] = None
    potentially_excluded: Optional[bool] = None
    intended: Optional[bool] = None
    relation: Optional[str] = None

    def matches(self, profile: AffectedPersonProfile) -> bool:
        fields = profile.to_fields()
        for name in ("vulnerable", "vulnerability_basis", "potentially_excluded", "relation"):
            wanted = getattr(self, name)
            if wanted is not None and fields[name] != wanted:
                return False
        if self.intended is not None and profile.posture.intended != self.intended:
            return False
        return True


class RightCondition(Frozen):
    exercise: Optional[RightExercise] = None
    limitability: Optional[RightLimitability] = None

    def matches(self, right: FundamentalRight) -> bool:
        if self.exercise is not None and right.exercise != self.exercise:
            return False
        if self.limitability is not None and right.limitability != self.limitability:
            return False
        return True


class ImpactRule(Frozen):
    id: str = Field(min_length=1)
    consequence_kind: str
    charter_article: int = Field(ge=1)
    categories: CategorySet
    person_condition: Optional[PersonCondition] = None
    right_condition: Optional[RightCondition] = None
    escalates_to: Optional[ImpactCategory] = None
    note: str = ""

    @model_validator(mode="after")
    def _non_empty(self) -> "ImpactRule":
        if not self.categories:
            raise ValueError("an impact rule must assign at least one category")
        return self


class ImpactRuleTable(Frozen):
    version: str = ""
    rules: tuple[ImpactRule, ...] = ()


def load_impact_rules(
    document: Union[bytes, str], rights: Optional[RightsCatalog] = None
) -> ImpactRuleTable:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"impact rules are not valid JSON: {exc}") from exc
    if not isinstance(tree, dict) or set(tree) - {"version", "rules"}:
        raise SchemaError("impact rule document must carry only 'version' and 'rules'")
    try:
        table = ImpactRuleTable(version=tree.get("version", ""), rules=tree.get("rules", []))
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc
    rights = rights or default_rights()
    for rule in table.rules:
        try:
            rights.by_article(rule.charter_article)
        except KeyError:
            raise DanglingRef("charter article", f"{rule.charter_article} (rule {rule.id})")
    return table


@lru_cache(maxsize=None)
def default_impact_rules() -> ImpactRuleTable:
    from .catalog import seed_bytes
    return load_impact_rules(seed_bytes("impact_rules.json"))


# ---------------------------------------------------------------------------
# Classification and derivation
# ---------------------------------------------------------------------------

UNCLASSIFIED = "Unclassified"


def classify_impact(
    consequence: ConsequenceRef,
    right: FundamentalRight,
    context: AffectedPersonProfile,
    rules: Optional[ImpactRuleTable] = None,
) -> Union[frozenset[ImpactCategory], str]:
    """Rule-table lookup: the union of categories from every matching rule,
    or the explicit Unclassified marker for a human decision."""
    rules = rules or default_impact_rules()
    categories: set[ImpactCategory] = set()
    for rule in rules.rules:
        if rule.consequence_kind != consequence.taxonomy_id:
            continue
        if rule.charter_article != right.charter_article:
            continue
        if rule.right_condition and not rule.right_condition.matches(right):
            continue
        if rule.person_condition and not rule.person_condition.matches(context):
            continue
        categories |= set(rule.categories)
    if not categories:
        return UNCLASSIFIED
    return frozenset(categories)


class LeftoverPair(Frozen):
    """A consequence/profile pair no rule covered; awaits a human call."""

    risk_id: str
    consequence: ConsequenceRef


class DerivationResult(Frozen):
    impacts: tuple[RightsImpact, ...]
    leftovers: tuple[LeftoverPair, ...]


def derive_rights_impacts(
    risks: tuple[RiskItem, ...] | list[RiskItem],
    profiles: tuple[AffectedPersonProfile, ...] | list[AffectedPersonProfile],
    rules: Optional[ImpactRuleTable] = None,
    rights: Optional[RightsCatalog] = None,
    consequence_taxonomy: Optional[Taxonomy] = None,
) -> DerivationResult:
    """For every consequence of every risk, emit one impact per matching rule
    against the consequence's affected profile; uncovered pairs go to the
    leftover report. Deterministic: rule order, then risk order."""
    rules = rules or default_impact_rules()
    rights = rights or default_rights()
    consequence_taxonomy = consequence_taxonomy or default_taxonomy(TaxonomyKind.Consequence)
    by_subject = {p.subject_id: p for p in profiles}

    impacts: list[RightsImpact] = []
    leftovers: list[LeftoverPair] = []
    counter = 0
    for risk in risks:
        for consequence in risk.consequences:
            if consequence.taxonomy_id not in consequence_taxonomy.ids():
                raise DanglingRef("consequence", consequence.taxonomy_id)
            profile = by_subject.get(consequence.affected_profile)
            if profile is None:
                raise DanglingRef("affected profile", consequence.affected_profile)
            matched = False
            for rule in rules.rules:
                if rule.consequence_kind != consequence.taxonomy_id:
                    continue
                right = rights.by_article(rule.charter_article)
                if rule.right_condition and not rule.right_condition.matches(right):
                    continue
                if rule.person_condition and not rule.person_condition.matches(profile):
                    continue
                matched = True
                counter += 1
                impacts.append(RightsImpact(
                    id=f"impact-{counter:03d}",
                    right=right,
                    affected_profile=profile.subject_id,
                    via_consequence=consequence,
                    categories=rule.categories,
                    escalates_to=rule.escalates_to,
                    escalation_note=(
                        f"becomes {rule.escalates_to.value} if left unresolved"
                        if rule.escalates_to else None
                    ),
                ))
            if not matched:
                leftovers.append(LeftoverPair(risk_id=risk.id, consequence=consequence))
    return DerivationResult(impacts=tuple(impacts), leftovers=tuple(leftovers))


# ---------------------------------------------------------------------------
# Remedies
# ---------------------------------------------------------------------------

# Draft templates per impact category; every suggestion needs human adoption.
REMEDY_TEMPLATES: dict[ImpactCategory, tuple[str, ...]] = {
    ImpactCategory.Violated: (
        "cease the impacting operation or redesign it so the right is respected",
        "notify the affected persons and provide means of redress",
    ),
    ImpactCategory.Prevented: (
        "restore the ability to exercise the right before deployment continues",
    ),
    ImpactCategory.Limited: (
        "remove the limitation or provide an alternative mechanism where the limitation is not present",
        "establish manual oversight and intervention procedures so an alternative path is always available",
    ),
    ImpactCategory.Denied: (
        "acknowledge the applicability of the right and provide a channel to claim it",
    ),
    ImpactCategory.Unfulfilled: (
        "identify the unmet requirements and complete them",
    ),
    ImpactCategory.Obstructed: (
        "remove the interference with the exercise of the right",
        "establish monitoring controls that detect recurring interference",
    ),
}


def suggest_remedies(
    impact: RightsImpact, mitigation_taxonomy: Optional[Taxonomy] = None
) -> tuple[RemedialMeasure, ...]:
    """Template remedies aligned to each category of the impact, flagged as
    drafts (adopted=False) for the deployer to take on or replace."""
    mitigation_taxonomy = mitigation_taxonomy or default_taxonomy(TaxonomyKind.Mitigation)
    drafts: list[RemedialMeasure] = []
    for category in sorted(impact.categories, key=lambda c: c.value):
        for template in REMEDY_TEMPLATES[category]:
            drafts.append(RemedialMeasure(
                description=template,
                addresses_category=category,
                adopted=False,
            ))
    if impact.escalates_to == ImpactCategory.Violated:
        first = sorted(impact.categories, key=lambda c: c.value)[0]
        drafts.append(RemedialMeasure(
            description=(
                "resolve before deployment: if this impact stays unresolved it "
                "escalates to a violation (cease or redesign)"
            ),
            addresses_category=first,
            adopted=False,
        ))
    return tuple(drafts)
