"""Stage 3 information gathering: branching questionnaire, purpose
compatibility, affected-person classification.

The questionnaire lives in a localizable resource file; each required
description leaf path is collected by exactly one question, and conditional
questions appear when earlier answers make them applicable. Visibility
predicates reference earlier questions only, so one pass in declaration
order settles visibility.
"""

from __future__ import annotations

import json
from enum import Enum
from functools import lru_cache
from typing import Any, Literal, Mapping, Optional, Union

import pydantic
from pydantic import Field, model_validator

from .errors import (
    EmptyIntended,
    NotVisible,
    ParseError,
    SchemaError,
    StageOrderError,
    TypeMismatch,
)
from .errors import ValidationError as FatalValidationError
from .model import (
    FRIA_LEAF_PATHS,
    REQUIRED_FRIA_PATHS,
    Assessment,
    ControlSet,
    DatasheetRef,
    DeployerRelationship,
    EntityRef,
    Frozen,
    InteractionContext,
    LifecycleChange,
    MetricValue,
    PersonalDataItem,
    Purpose,
    Role,
    StageState,
    SubjectControl,
    VulnerabilityBasis,
    assemble_fria,
    validate_fria_description,
)
from .model import FriaDescription


# ---------------------------------------------------------------------------
# Questions and the questionnaire
# ---------------------------------------------------------------------------

class AnswerType(str, Enum):
    Boolean = "Boolean"
    Ordinal1to5 = "Ordinal1to5"
    Text = "Text"
    EnumChoice = "EnumChoice"
    MultiChoice = "MultiChoice"
    EntityList = "EntityList"
    DataItemList = "DataItemList"


class VisibilityRule(Frozen):
    """Predicate over earlier answers; the shapes the questionnaire needs."""

    op: Literal["non-empty", "any-item-flag", "equals", "and", "or", "not"]
    question: Optional[str] = None
    flag: Optional[str] = None
    value: Any = None
    args: tuple["VisibilityRule", ...] = ()
    arg: Optional["VisibilityRule"] = None

    @model_validator(mode="after")
    def _shape(self) -> "VisibilityRule":
        if self.op in ("non-empty", "any-item-flag", "equals") and not self.question:
            raise ValueError(f"{self.op} needs a question id")
        if self.op == "any-item-flag" and not self.flag:
            raise ValueError("any-item-flag needs a flag name")
        if self.op in ("and", "or") and len(self.args) < 2:
            raise ValueError(f"{self.op} needs at least two operands")
        if self.op == "not" and self.arg is None:
            raise ValueError("not needs an operand")
        return self

    def referenced_questions(self) -> set[str]:
        refs: set[str] = set()
        if self.question:
            refs.add(self.question)
        for child in self.args:
            refs |= child.referenced_questions()
        if self.arg:
            refs |= self.arg.referenced_questions()
        return refs

    def evaluate(self, answers: Mapping[str, Any]) -> bool:
        if self.op == "and":
            return all(child.evaluate(answers) for child in self.args)
        if self.op == "or":
            return any(child.evaluate(answers) for child in self.args)
        if self.op == "not":
            assert self.arg is not None
            return not self.arg.evaluate(answers)
        answer = answers.get(self.question)
        if self.op == "non-empty":
            return bool(answer)
        if self.op == "equals":
            return answer == self.value
        # any-item-flag: does any record in a list answer set the flag?
        if not isinstance(answer, list):
            return False
        return any(isinstance(item, dict) and item.get(self.flag) for item in answer)


class Question(Frozen):
    id: str = Field(min_length=1)
    prompt: str = Field(min_length=1)
    answer_type: AnswerType
    target_path: str
    visible_if: Optional[VisibilityRule] = None
    choices: tuple[str, ...] = ()
    help: str = ""


class Questionnaire(Frozen):
    version: str
    questions: tuple[Question, ...]

    def question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise KeyError(question_id)

    def by_path(self, path: str) -> Question:
        for q in self.questions:
            if q.target_path == path:
                return q
        raise KeyError(path)


def load_questionnaire(document: Union[bytes, str]) -> Questionnaire:
    """Parse the questionnaire and validate target paths, coverage, and the
    no-forward-reference rule that keeps visibility computation one-pass."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"questionnaire is not valid JSON: {exc}") from exc
    try:
        questionnaire = Questionnaire(
            version=tree.get("version", ""),
            questions=tree.get("questions", []),
        )
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc

    seen_ids: set[str] = set()
    targeted: dict[str, str] = {}
    for q in questionnaire.questions:
        if q.id in seen_ids:
            raise SchemaError(f"duplicate question id {q.id!r}")
        seen_ids.add(q.id)
        if q.target_path not in FRIA_LEAF_PATHS:
            raise SchemaError(f"question {q.id!r} targets unknown path {q.target_path!r}")
        if q.target_path in targeted:
            raise SchemaError(
                f"path {q.target_path!r} is targeted by both {targeted[q.target_path]!r} and {q.id!r}"
            )
        targeted[q.target_path] = q.id
        if q.visible_if:
            forward = q.visible_if.referenced_questions() - seen_ids
            if forward:
                raise SchemaError(
                    f"question {q.id!r} references later or unknown questions: {sorted(forward)}"
                )
    missing = REQUIRED_FRIA_PATHS - set(targeted)
    if missing:
        raise SchemaError(f"required paths without a question: {sorted(missing)}")
    return questionnaire


@lru_cache(maxsize=None)
def default_questionnaire() -> Questionnaire:
    from .catalog import seed_bytes
    return load_questionnaire(seed_bytes("questions.json"))


# ---------------------------------------------------------------------------
# Answer validation and materialization
# ---------------------------------------------------------------------------

def _validate_records(value: Any, model: type, label: str) -> list[dict]:
    if not isinstance(value, list):
        raise TypeMismatch(f"expected a list of {label} records")
    validated = []
    for item in value:
        try:
            validated.append(model.model_validate(item).model_dump(mode="json"))
        except pydantic.ValidationError as exc:
            raise FatalValidationError(
                [label], f"invalid {label} record: {exc}"
            ) from exc
    return validated


def _validate_context_records(value: Any) -> list[dict]:
    if not isinstance(value, list):
        raise TypeMismatch("expected a list of interaction-context records")
    validated = []
    for item in value:
        if not isinstance(item, dict) or "subject_id" not in item:
            raise TypeMismatch("interaction-context records need a subject_id")
        body = {k: v for k, v in item.items() if k != "subject_id"}
        try:
            context = InteractionContext.model_validate(body)
        except pydantic.ValidationError as exc:
            raise FatalValidationError(
                ["involved_entities.interaction_context"], str(exc)
            ) from exc
        validated.append({"subject_id": item["subject_id"], **context.model_dump(mode="json")})
    return validated


def _validate_metric_records(value: Any) -> list[dict]:
    if not isinstance(value, list):
        raise TypeMismatch("expected a list of metric records")
    validated = []
    for item in value:
        if not isinstance(item, dict) or "metric" not in item:
            raise TypeMismatch("metric records need a metric name")
        try:
            metric = MetricValue.model_validate({k: v for k, v in item.items() if k != "metric"})
        except pydantic.ValidationError as exc:
            raise FatalValidationError(["operational.performance_metrics"], str(exc)) from exc
        validated.append({"metric": item["metric"], **metric.model_dump(mode="json")})
    return validated


# Record schemas for structured answers, by target path.
_RECORD_MODELS: dict[str, type] = {
    "intended_purposes.developed": Purpose,
    "intended_purposes.marketed": Purpose,
    "intended_purposes.data_collection": Purpose,
    "involved_data.inputs": PersonalDataItem,
    "involved_data.outputs": PersonalDataItem,
    "provenance.datasheets": DatasheetRef,
    "provenance.lifecycle_changes": LifecycleChange,
}


def validate_answer(question: Question, value: Any) -> Any:
    """Type-check and normalise an answer; raises TypeMismatch or a fatal
    ValidationError when the value breaks a core-model invariant."""
    kind = question.answer_type
    if kind == AnswerType.Boolean:
        if not isinstance(value, bool):
            raise TypeMismatch(f"{question.id} expects a boolean")
        return value
    if kind == AnswerType.Ordinal1to5:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeMismatch(f"{question.id} expects an integer")
        if not 1 <= value <= 5:
            raise FatalValidationError([question.target_path], "ordinal must be within 1-5")
        return value
    if kind == AnswerType.Text:
        if not isinstance(value, (str, int, float)):
            raise TypeMismatch(f"{question.id} expects text")
        if question.target_path in ("deployment.duration_days", "deployment.frequency_per_day"):
            try:
                return float(value)
            except (TypeError, ValueError) as exc:
                raise TypeMismatch(f"{question.id} expects a number") from exc
        return str(value)
    if kind == AnswerType.EnumChoice:
        if not isinstance(value, str):
            raise TypeMismatch(f"{question.id} expects one choice")
        if question.choices and value not in question.choices:
            raise FatalValidationError([question.target_path], f"{value!r} is not an offered choice")
        return value
    if kind == AnswerType.MultiChoice:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise TypeMismatch(f"{question.id} expects a list of strings")
        if question.choices:
            bad = [v for v in value if v not in question.choices]
            if bad:
                raise FatalValidationError([question.target_path], f"not offered choices: {bad}")
        return value
    if kind == AnswerType.EntityList:
        records = _validate_records(value, EntityRef, "entity")
        if question.target_path in ("involved_entities.deployer", "involved_entities.provider"):
            if len(records) != 1:
                raise FatalValidationError([question.target_path], "exactly one entity expected")
        return records
    # DataItemList: structured records; the schema depends on the target.
    if question.target_path == "involved_entities.interaction_context":
        return _validate_context_records(value)
    if question.target_path == "operational.performance_metrics":
        return _validate_metric_records(value)
    model = _RECORD_MODELS.get(question.target_path)
    if model is None:
        raise TypeMismatch(f"{question.id} has no record schema for {question.target_path}")
    return _validate_records(value, model, question.target_path)


def answer_to_path_value(question: Question, answer: Any) -> Any:
    """Turn a stored answer into the value the description path expects."""
    path = question.target_path
    if path in ("involved_entities.deployer", "involved_entities.provider"):
        return answer[0]
    if path == "involved_entities.interaction_context":
        return {
            record["subject_id"]: {k: v for k, v in record.items() if k != "subject_id"}
            for record in answer
        }
    if path == "operational.performance_metrics":
        return {
            record["metric"]: {k: v for k, v in record.items() if k != "metric"}
            for record in answer
        }
    return answer


# ---------------------------------------------------------------------------
# Questionnaire flow over an assessment
# ---------------------------------------------------------------------------

def _visible_questions(
    questionnaire: Questionnaire, answers: Mapping[str, Any]
) -> tuple[Question, ...]:
    return tuple(
        q for q in questionnaire.questions
        if q.visible_if is None or q.visible_if.evaluate(answers)
    )


def effective_answers(
    assessment: Assessment, questionnaire: Questionnaire
) -> dict[str, Any]:
    """Stored answers plus synthesized ones for paths a reused DPIA already
    filled completely, so visibility predicates see prefilled data too."""
    complete_paths = {
        path for path, prov in assessment.prefill_provenance.items()
        if prov.relation.value == "Equivalent"
    }
    effective: dict[str, Any] = {}
    for q in questionnaire.questions:
        if q.target_path in complete_paths:
            effective[q.id] = assessment.prefill_values[q.target_path]
    effective.update(assessment.fria_answers)
    return effective


def next_questions(
    assessment: Assessment,
    questionnaire: Optional[Questionnaire] = None,
) -> tuple[Question, ...]:
    """All currently visible, unanswered questions whose paths still need
    capture. Empty means stage 3 can be marked complete."""
    if assessment.stage(1) != StageState.Complete:
        raise StageOrderError(3, [1])
    questionnaire = questionnaire or default_questionnaire()
    answered = effective_answers(assessment, questionnaire)
    return tuple(
        q for q in _visible_questions(questionnaire, answered)
        if q.id not in answered
    )


def submit_answer(
    assessment: Assessment,
    question_id: str,
    value: Any,
    actor: str = "deployer",
    questionnaire: Optional[Questionnaire] = None,
) -> Assessment:
    """Validate and store one answer; recompute visibility in one pass and
    drop answers to questions that just became invisible."""
    if assessment.stage(1) != StageState.Complete:
        raise StageOrderError(3, [1])
    questionnaire = questionnaire or default_questionnaire()
    question = questionnaire.question(question_id)
    visible_for = effective_answers(assessment, questionnaire)
    if question.visible_if and not question.visible_if.evaluate(visible_for):
        raise NotVisible(f"question {question_id!r} is not visible for the current answers")
    validated = validate_answer(question, value)

    answers = dict(assessment.fria_answers)
    answers[question_id] = validated
    effective = dict(visible_for)
    effective[question_id] = validated
    # One pass in declaration (topological) order: visibility only depends
    # on earlier questions, so a single sweep settles it.
    for q in questionnaire.questions:
        if q.visible_if and q.id in answers and not q.visible_if.evaluate(effective):
            del answers[q.id]
            del effective[q.id]

    updates: dict[str, Any] = {"fria_answers": answers}
    states = dict(assessment.stage_states)
    if states[3] == StageState.NotStarted:
        states[3] = StageState.InProgress
        updates["stage_states"] = states
    return assessment.record(
        f"stage3.answer.{question_id}", actor, payload=validated, **updates
    )


def materialize_fria(
    assessment: Assessment,
    questionnaire: Optional[Questionnaire] = None,
) -> FriaDescription:
    """Assemble the description from prefill values and answers, validate it,
    and raise listing the offending paths if invariants are broken."""
    questionnaire = questionnaire or default_questionnaire()
    values: dict[str, Any] = {}
    for path, prov in assessment.prefill_provenance.items():
        if prov.relation.value == "Equivalent":
            values[path] = assessment.prefill_values[path]
    for question_id, answer in assessment.fria_answers.items():
        question = questionnaire.question(question_id)
        values[question.target_path] = answer_to_path_value(question, answer)
    try:
        description = assemble_fria(values)
    except pydantic.ValidationError as exc:
        paths = [".".join(str(p) for p in err["loc"]) for err in exc.errors()]
        raise FatalValidationError(paths, f"description is malformed: {exc}") from exc
    report = validate_fria_description(description)
    if report.errors():
        raise FatalValidationError([i.path for i in report.errors()])
    return description


# ---------------------------------------------------------------------------
# Purpose compatibility
# ---------------------------------------------------------------------------

class CompatibilityResult(Frozen):
    compatible: bool
    assessed_at: str = ""
    assessed_by: str = ""
    system_changed_since: bool = False
    documentation_refs: tuple[str, ...] = ()
    rationale: str = ""
    missing_domain_tags: tuple[str, ...] = ()
    missing_capability_tags: tuple[str, ...] = ()


def assess_purpose_compatibility(
    deployed: Purpose, intended: tuple[Purpose, ...] | list[Purpose]
) -> CompatibilityResult:
    """Tag-subset heuristic: compatible iff the deployed purpose introduces
    no domain or capability tag beyond the intended ones. Errs toward
    flagging; an incompatible result routes to human review, never auto-pass.
    Metadata fields are left for the assessor to fill in."""
    if not intended:
        raise EmptyIntended("no intended purposes to compare against")
    intended_domains = set().union(*(p.domain_tags for p in intended))
    intended_capabilities = set().union(*(p.capability_tags for p in intended))
    missing_domains = sorted(set(deployed.domain_tags) - intended_domains)
    missing_capabilities = sorted(set(deployed.capability_tags) - intended_capabilities)
    compatible = not missing_domains and not missing_capabilities
    if compatible:
        rationale = "deployed domain and capability tags are covered by the intended purposes"
    else:
        rationale = (
            f"deployed purpose adds tags outside the intended purposes: "
            f"domains {missing_domains}, capabilities {missing_capabilities}"
        )
    return CompatibilityResult(
        compatible=compatible,
        rationale=rationale,
        missing_domain_tags=tuple(missing_domains),
        missing_capability_tags=tuple(missing_capabilities),
    )


# ---------------------------------------------------------------------------
# Affected persons
# ---------------------------------------------------------------------------

class Posture(Frozen):
    active: bool
    intended: bool
    informed: bool


class AffectedPersonProfile(Frozen):
    subject_id: str
    category: str
    relation: DeployerRelationship = DeployerRelationship.NoRelationship
    posture: Posture
    vulnerable: bool = False
    vulnerability_basis: Optional[VulnerabilityBasis] = None
    controls: ControlSet = frozenset()
    potentially_excluded: bool = False

    @model_validator(mode="after")
    def _basis_when_vulnerable(self) -> "AffectedPersonProfile":
        if self.vulnerable and self.vulnerability_basis is None:
            raise ValueError("vulnerable profiles must state a vulnerability basis")
        return self

    def to_fields(self) -> dict[str, Any]:
        return {
            "category": self.category,
            "relation": self.relation.value,
            "active": self.posture.active,
            "intended": self.posture.intended,
            "informed": self.posture.informed,
            "vulnerable": self.vulnerable,
            "vulnerability_basis": (
                self.vulnerability_basis.value if self.vulnerability_basis else ""
            ),
            "controls": {c.value for c in self.controls},
            "potentially_excluded": self.potentially_excluded,
        }


_OPERATOR_POSTURE = Posture(active=True, intended=True, informed=True)


def classify_affected_persons(f: FriaDescription) -> tuple[AffectedPersonProfile, ...]:
    """One profile per AI subject and user. Posture comes from the captured
    interaction context, controls from the declared subject controls;
    unintended subjects default to potentially excluded (conservative)."""
    profiles: list[AffectedPersonProfile] = []
    entities = f.involved_entities
    for subject in entities.ai_subjects:
        context = entities.interaction_context.get(subject.id)
        posture = (
            Posture(active=context.active, intended=context.intended, informed=context.informed)
            if context else Posture(active=False, intended=False, informed=False)
        )
        profiles.append(AffectedPersonProfile(
            subject_id=subject.id,
            category=subject.name or subject.id,
            relation=subject.relationship_to_deployer or DeployerRelationship.NoRelationship,
            posture=posture,
            vulnerable=context.vulnerable if context else False,
            vulnerability_basis=context.vulnerability_basis if context else None,
            controls=entities.subject_controls,
            potentially_excluded=not posture.intended,
        ))
    for user in entities.users:
        profiles.append(AffectedPersonProfile(
            subject_id=user.id,
            category=user.name or user.id,
            relation=user.relationship_to_deployer or DeployerRelationship.NoRelationship,
            posture=_OPERATOR_POSTURE,
            controls=frozenset({SubjectControl.ViewOutput}),
            potentially_excluded=False,
        ))
    return tuple(profiles)
