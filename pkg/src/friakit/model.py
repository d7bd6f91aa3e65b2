"""Core domain types shared by every assessment stage.

Pure value types with validation and no I/O. Everything here is immutable
after construction (frozen models, tuples instead of lists); mutation happens
only by producing a new ``Assessment`` revision via :meth:`Assessment.record`.

Two validation layers:

* structural rules (enum membership, ordinal ranges, per-item consistency)
  are enforced at construction and raise;
* business invariants over whole descriptions are *reported* by
  ``validate_dpia_description`` / ``validate_fria_description`` so that a
  half-filled description can exist while the questionnaire is in flight.
"""

from __future__ import annotations

from datetime import datetime, timezone
from enum import Enum
from typing import Annotated, Any, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

from .canonical import checksum_of
from .errors import StageOrderError

SCHEMA_VERSION = "1.0"

# The 30 EU/EEA jurisdictions whose authorities maintain DPIA trigger lists.
EU_EEA_COUNTRIES: dict[str, str] = {
    "AT": "Austria", "BE": "Belgium", "BG": "Bulgaria", "HR": "Croatia",
    "CY": "Cyprus", "CZ": "Czechia", "DK": "Denmark", "EE": "Estonia",
    "FI": "Finland", "FR": "France", "DE": "Germany", "GR": "Greece",
    "HU": "Hungary", "IE": "Ireland", "IT": "Italy", "LV": "Latvia",
    "LT": "Lithuania", "LU": "Luxembourg", "MT": "Malta", "NL": "Netherlands",
    "PL": "Poland", "PT": "Portugal", "RO": "Romania", "SK": "Slovakia",
    "SI": "Slovenia", "ES": "Spain", "SE": "Sweden", "IS": "Iceland",
    "LI": "Liechtenstein", "NO": "Norway",
}

Ordinal = Annotated[int, Field(ge=1, le=5)]

# Sets serialize as sorted lists so canonical encodings are byte-stable.
SortedStrSet = Annotated[
    frozenset[str],
    PlainSerializer(lambda v: sorted(v), return_type=list, when_used="json"),
]


def _sorted_enum_set(v: frozenset) -> list[str]:
    return sorted(e.value for e in v)


class Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------

class Role(str, Enum):
    Controller = "Controller"
    Processor = "Processor"
    Recipient = "Recipient"
    DataSubject = "DataSubject"
    Deployer = "Deployer"
    Provider = "Provider"
    AiUser = "AiUser"
    AiSubject = "AiSubject"


class DeployerRelationship(str, Enum):
    Contractual = "Contractual"
    Employment = "Employment"
    ServiceRecipient = "ServiceRecipient"
    NoRelationship = "None"


class PurposeKind(str, Enum):
    Development = "Development"
    MarketPlacement = "MarketPlacement"
    DataCollection = "DataCollection"
    Deployment = "Deployment"


class DataRole(str, Enum):
    Input = "Input"
    Output = "Output"
    Training = "Training"
    Validation = "Validation"
    NotApplicable = "NotApplicable"


class LegalBasis(str, Enum):
    Consent = "Consent"
    Contract = "Contract"
    LegalObligation = "LegalObligation"
    VitalInterest = "VitalInterest"
    PublicTask = "PublicTask"
    LegitimateInterest = "LegitimateInterest"


class Locality(str, Enum):
    PublicArea = "PublicArea"
    Workplace = "Workplace"
    PrivateSpace = "PrivateSpace"
    Online = "Online"
    Mixed = "Mixed"


class SubjectControl(str, Enum):
    ViewOutput = "ViewOutput"
    CorrectOutput = "CorrectOutput"
    OptIn = "OptIn"
    OptOut = "OptOut"
    NoControl = "None"


class VulnerabilityBasis(str, Enum):
    Nature = "Nature"
    SocialVulnerability = "SocialVulnerability"


class StageState(str, Enum):
    NotStarted = "NotStarted"
    InProgress = "InProgress"
    Complete = "Complete"
    Skipped = "Skipped"


class NecessitySubject(str, Enum):
    Dpia = "Dpia"
    Fria = "Fria"


class NecessityOutcome(str, Enum):
    Required = "Required"
    Conditional = "Conditional"
    NotRequired = "NotRequired"
    Exempt = "Exempt"


class MappingRelation(str, Enum):
    Equivalent = "Equivalent"
    Partial = "Partial"
    DpiaOnly = "DpiaOnly"
    FriaOnly = "FriaOnly"


class RiskLevel(str, Enum):
    Low = "Low"
    Medium = "Medium"
    High = "High"
    VeryHigh = "VeryHigh"


RISK_LEVEL_ORDER: dict[RiskLevel, int] = {
    RiskLevel.Low: 0,
    RiskLevel.Medium: 1,
    RiskLevel.High: 2,
    RiskLevel.VeryHigh: 3,
}


class MitigationStrategy(str, Enum):
    Eliminate = "Eliminate"
    Reduce = "Reduce"
    Mitigate = "Mitigate"
    Monitor = "Monitor"


class Lasting(str, Enum):
    Temporary = "Temporary"
    Lasting = "Lasting"


class RightExercise(str, Enum):
    Active = "Active"
    Passive = "Passive"


class RightLimitability(str, Enum):
    Absolute = "Absolute"
    Limited = "Limited"


class ImpactCategory(str, Enum):
    Violated = "Violated"
    Prevented = "Prevented"
    Limited = "Limited"
    Denied = "Denied"
    Unfulfilled = "Unfulfilled"
    Obstructed = "Obstructed"


RoleSet = Annotated[
    frozenset[Role],
    PlainSerializer(_sorted_enum_set, return_type=list, when_used="json"),
]
ControlSet = Annotated[
    frozenset[SubjectControl],
    PlainSerializer(_sorted_enum_set, return_type=list, when_used="json"),
]
CategorySet = Annotated[
    frozenset[ImpactCategory],
    PlainSerializer(_sorted_enum_set, return_type=list, when_used="json"),
]


# ---------------------------------------------------------------------------
# Shared building blocks
# ---------------------------------------------------------------------------

class Jurisdiction(Frozen):
    """One of the 30 EU/EEA members; unknown codes are rejected at construction."""

    code: str
    name: str = ""

    @field_validator("code")
    @classmethod
    def _admissible(cls, v: str) -> str:
        code = v.upper()
        if code not in EU_EEA_COUNTRIES:
            raise ValueError(f"unknown jurisdiction code {v!r}; must be one of the 30 EU/EEA members")
        return code

    @model_validator(mode="after")
    def _default_name(self) -> "Jurisdiction":
        if not self.name:
            object.__setattr__(self, "name", EU_EEA_COUNTRIES[self.code])
        return self


class EntityRef(Frozen):
    id: str = Field(min_length=1)
    name: str
    roles: RoleSet
    relationship_to_deployer: Optional[DeployerRelationship] = None

    @field_validator("roles")
    @classmethod
    def _non_empty(cls, v: frozenset[Role]) -> frozenset[Role]:
        if not v:
            raise ValueError("entity must carry at least one role")
        return v


class Purpose(Frozen):
    id: str = Field(min_length=1)
    description: str = Field(min_length=1)
    kind: PurposeKind
    domain_tags: SortedStrSet = frozenset()
    capability_tags: SortedStrSet = frozenset()


class DataQuality(Frozen):
    accuracy: Ordinal
    completeness: Ordinal


class PersonalDataItem(Frozen):
    name: str = Field(min_length=1)
    special_category: bool = False
    is_inference: bool = False
    quality: DataQuality
    role_in_system: DataRole

    @model_validator(mode="after")
    def _inference_is_output(self) -> "PersonalDataItem":
        if self.is_inference and self.role_in_system not in (DataRole.Output, DataRole.NotApplicable):
            raise ValueError("inferred data can only play an output role")
        return self


class ProcessingOperation(Frozen):
    name: str = Field(min_length=1)
    automation: bool = False
    profiling: bool = False
    scoring: bool = False
    decision_making: bool = False


class SubjectCategory(Frozen):
    category: str = Field(min_length=1)
    vulnerable: bool = False


class CrossBorder(Frozen):
    enabled: bool = False
    destinations: tuple[str, ...] = ()


class ScaleProfile(Frozen):
    data: Ordinal = 1
    operations: Ordinal = 1
    subjects: Ordinal = 1


class DurationProfile(Frozen):
    processing_days: float = 0.0
    storage_days: float = 0.0
    deletion_policy: str = ""


# ---------------------------------------------------------------------------
# DPIA description (systematic description of personal-data processing)
# ---------------------------------------------------------------------------

class DpiaDescription(Frozen):
    purposes: tuple[Purpose, ...] = ()
    processing_operations: tuple[ProcessingOperation, ...] = ()
    personal_data: tuple[PersonalDataItem, ...] = ()
    data_subjects: tuple[SubjectCategory, ...] = ()
    entities: tuple[EntityRef, ...] = ()
    cross_border: CrossBorder = CrossBorder()
    scale: ScaleProfile = ScaleProfile()
    duration: DurationProfile = DurationProfile()
    legal_bases: tuple[LegalBasis, ...] = ()
    necessity_statement: str = ""
    proportionality_statement: str = ""
    inferences: tuple[str, ...] = ()
    technical_measures: tuple[str, ...] = ()
    organisational_measures: tuple[str, ...] = ()
    locality: Locality = Locality.Mixed


# ---------------------------------------------------------------------------
# FRIA description (systematic description of an AI system deployment)
# ---------------------------------------------------------------------------

class InteractionContext(Frozen):
    """How one AI subject meets the system, plus vulnerable-group capture."""

    active: bool
    intended: bool
    informed: bool
    vulnerable: bool = False
    vulnerability_basis: Optional[VulnerabilityBasis] = None

    @model_validator(mode="after")
    def _basis_when_vulnerable(self) -> "InteractionContext":
        if self.vulnerable and self.vulnerability_basis is None:
            raise ValueError("vulnerable subjects must state a vulnerability basis")
        return self


class IntendedPurposes(Frozen):
    developed: tuple[Purpose, ...] = ()
    marketed: tuple[Purpose, ...] = ()
    data_collection: tuple[Purpose, ...] = ()


class InvolvedEntities(Frozen):
    deployer: Optional[EntityRef] = None
    provider: Optional[EntityRef] = None
    can_update_system: bool = False
    users: tuple[EntityRef, ...] = ()
    ai_subjects: tuple[EntityRef, ...] = ()
    interaction_context: dict[str, InteractionContext] = Field(default_factory=dict)
    subject_controls: ControlSet = frozenset()


class InvolvedData(Frozen):
    inputs: tuple[PersonalDataItem, ...] = ()
    operations: tuple[str, ...] = ()
    outputs: tuple[PersonalDataItem, ...] = ()
    output_is_profiling: bool = False
    output_is_decision: bool = False


class DeploymentInfo(Frozen):
    integrations: tuple[str, ...] = ()
    modality: str = ""
    hardware_software: tuple[str, ...] = ()
    user_interface: str = ""
    duration_days: float = 0.0
    frequency_per_day: float = 0.0


class DatasheetRef(Frozen):
    title: str = Field(min_length=1)
    reference: str = ""
    notes: str = ""


class LifecycleChange(Frozen):
    description: str = Field(min_length=1)
    date: str = ""


class Provenance(Frozen):
    development_summary: str = ""
    datasheets: tuple[DatasheetRef, ...] = ()
    lifecycle_changes: tuple[LifecycleChange, ...] = ()


class MetricValue(Frozen):
    value: float
    appropriateness: str = ""


class OperationalInfo(Frozen):
    expected_outputs: str = ""
    logic_summary: str = ""
    predetermined_changes: tuple[str, ...] = ()
    performance_metrics: dict[str, MetricValue] = Field(default_factory=dict)


class FriaDescription(Frozen):
    intended_purposes: IntendedPurposes = IntendedPurposes()
    involved_entities: InvolvedEntities = InvolvedEntities()
    involved_data: InvolvedData = InvolvedData()
    deployment: DeploymentInfo = DeploymentInfo()
    provenance: Provenance = Provenance()
    operational: OperationalInfo = OperationalInfo()


# ---------------------------------------------------------------------------
# Leaf-path registry
#
# The mapping catalog, the questionnaire, and the prefill machinery all
# address description fields by these dotted paths. Totality checks compare
# against these tuples, so they are the single source of truth.
# ---------------------------------------------------------------------------

DPIA_LEAF_PATHS: tuple[str, ...] = (
    "purposes",
    "processing_operations",
    "personal_data",
    "data_subjects",
    "entities",
    "cross_border.enabled",
    "cross_border.destinations",
    "scale.data",
    "scale.operations",
    "scale.subjects",
    "duration.processing_days",
    "duration.storage_days",
    "duration.deletion_policy",
    "legal_bases",
    "necessity_statement",
    "proportionality_statement",
    "inferences",
    "technical_measures",
    "organisational_measures",
    "locality",
)

FRIA_LEAF_PATHS: tuple[str, ...] = (
    "intended_purposes.developed",
    "intended_purposes.marketed",
    "intended_purposes.data_collection",
    "involved_entities.deployer",
    "involved_entities.provider",
    "involved_entities.can_update_system",
    "involved_entities.users",
    "involved_entities.ai_subjects",
    "involved_entities.interaction_context",
    "involved_entities.subject_controls",
    "involved_data.inputs",
    "involved_data.operations",
    "involved_data.outputs",
    "involved_data.output_is_profiling",
    "involved_data.output_is_decision",
    "deployment.integrations",
    "deployment.modality",
    "deployment.hardware_software",
    "deployment.user_interface",
    "deployment.duration_days",
    "deployment.frequency_per_day",
    "provenance.development_summary",
    "provenance.datasheets",
    "provenance.lifecycle_changes",
    "operational.expected_outputs",
    "operational.logic_summary",
    "operational.predetermined_changes",
    "operational.performance_metrics",
)

# Paths only collected when an earlier answer makes them applicable
# (data-collection purposes need personal data, subject context needs
# subjects, output classification needs outputs).
CONDITIONAL_FRIA_PATHS: frozenset[str] = frozenset({
    "intended_purposes.data_collection",
    "involved_entities.interaction_context",
    "involved_entities.subject_controls",
    "involved_data.output_is_profiling",
    "involved_data.output_is_decision",
})

REQUIRED_FRIA_PATHS: frozenset[str] = frozenset(FRIA_LEAF_PATHS) - CONDITIONAL_FRIA_PATHS


def fria_section(path: str) -> str:
    """Top-level description category a leaf path belongs to."""
    return path.split(".", 1)[0]


def get_value_at(model: BaseModel, path: str) -> Any:
    node: Any = model
    for part in path.split("."):
        node = getattr(node, part)
    return node


def assemble_fria(values: dict[str, Any]) -> FriaDescription:
    """Build a description from ``{leaf path: JSON value}``; raises on bad shapes."""
    tree: dict[str, Any] = {}
    for path, value in values.items():
        parts = path.split(".")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return FriaDescription.model_validate(tree)


# ---------------------------------------------------------------------------
# Validation reports
# ---------------------------------------------------------------------------

class IssueSeverity(str, Enum):
    Error = "Error"
    Warning = "Warning"


class ValidationIssue(Frozen):
    path: str
    rule: str
    message: str
    severity: IssueSeverity = IssueSeverity.Error


class ValidationReport(Frozen):
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def errors(self) -> tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.severity == IssueSeverity.Error)

    def paths(self) -> list[str]:
        return [i.path for i in self.issues]


def validate_dpia_description(d: DpiaDescription) -> ValidationReport:
    """Report every violated invariant with a field path; never aborts."""
    issues: list[ValidationIssue] = []
    if not d.purposes:
        issues.append(ValidationIssue(
            path="purposes", rule="non-empty",
            message="at least one processing purpose must be stated",
        ))
    if LegalBasis.LegitimateInterest in d.legal_bases and not d.necessity_statement.strip():
        issues.append(ValidationIssue(
            path="necessity_statement", rule="required-with-legitimate-interest",
            message="legitimate-interest processing must document why it is necessary",
        ))
    seen: set[str] = set()
    for entity in d.entities:
        if entity.id in seen:
            issues.append(ValidationIssue(
                path="entities", rule="unique-ids",
                message=f"entity id {entity.id!r} appears more than once",
            ))
        seen.add(entity.id)
    if d.cross_border.enabled and not d.cross_border.destinations:
        issues.append(ValidationIssue(
            path="cross_border.destinations", rule="destinations-when-enabled",
            message="cross-border transfers must name destination countries",
            severity=IssueSeverity.Warning,
        ))
    if d.personal_data and not d.data_subjects:
        issues.append(ValidationIssue(
            path="data_subjects", rule="subjects-for-data",
            message="personal data is declared but no data-subject categories are",
            severity=IssueSeverity.Warning,
        ))
    return ValidationReport(issues=tuple(issues))


def validate_fria_description(f: FriaDescription) -> ValidationReport:
    issues: list[ValidationIssue] = []
    if not f.intended_purposes.developed:
        issues.append(ValidationIssue(
            path="intended_purposes.developed", rule="non-empty",
            message="the purpose the system was developed for must be stated",
        ))
    if f.involved_entities.deployer is None:
        issues.append(ValidationIssue(
            path="involved_entities.deployer", rule="required",
            message="the deploying entity must be identified",
        ))
    if f.deployment.duration_days <= 0:
        issues.append(ValidationIssue(
            path="deployment.duration_days", rule="positive",
            message="duration of use must be a positive number of days",
        ))
    for subject in f.involved_entities.ai_subjects:
        if subject.id not in f.involved_entities.interaction_context:
            issues.append(ValidationIssue(
                path="involved_entities.interaction_context", rule="covers-subjects",
                message=f"AI subject {subject.id!r} has no interaction context",
            ))
    ids: set[str] = set()
    all_entities = list(f.involved_entities.users) + list(f.involved_entities.ai_subjects)
    if f.involved_entities.deployer:
        all_entities.append(f.involved_entities.deployer)
    if f.involved_entities.provider:
        all_entities.append(f.involved_entities.provider)
    for entity in all_entities:
        if entity.id in ids:
            issues.append(ValidationIssue(
                path="involved_entities", rule="unique-ids",
                message=f"entity id {entity.id!r} appears more than once",
            ))
        ids.add(entity.id)
    if (f.involved_data.output_is_profiling or f.involved_data.output_is_decision) and not f.involved_data.outputs:
        issues.append(ValidationIssue(
            path="involved_data.outputs", rule="outputs-when-classified",
            message="outputs are classified as profiling/decisions but none are listed",
            severity=IssueSeverity.Warning,
        ))
    return ValidationReport(issues=tuple(issues))


# ---------------------------------------------------------------------------
# Stage-1 profile, necessity decision, risks, impacts
# ---------------------------------------------------------------------------

class SystemProfile(Frozen):
    """Pre-stage-1 feature snapshot that condition rules predicate on.

    Every field has a neutral default so an empty profile evaluates cleanly
    (nothing fires) rather than erroring on missing data.
    """

    roles: SortedStrSet = frozenset()
    annex3_tags: SortedStrSet = frozenset()
    annex1_tags: SortedStrSet = frozenset()
    exception_tags: SortedStrSet = frozenset()
    processes_personal_data: bool = False
    special_category: bool = False
    profiling: bool = False
    scoring: bool = False
    automated_decisions: bool = False
    legal_or_significant_effects: bool = False
    public_area_monitoring: bool = False
    vulnerable_subjects: bool = False
    new_technology: bool = False
    data_matching: bool = False
    scale_data: Ordinal = 1
    scale_operations: Ordinal = 1
    scale_subjects: Ordinal = 1

    def to_fields(self) -> dict[str, Any]:
        fields = self.model_dump()
        for key in ("roles", "annex3_tags", "annex1_tags", "exception_tags"):
            fields[key] = set(fields[key])
        return fields


class RuleFiring(Frozen):
    rule_id: str
    outcome: NecessityOutcome


class TraceEntry(Frozen):
    rule_id: str
    predicate_result: bool
    explanation: str


class NecessityDecision(Frozen):
    subject: NecessitySubject
    outcome: NecessityOutcome
    fired_rules: tuple[RuleFiring, ...] = ()
    trace: tuple[TraceEntry, ...] = ()
    jurisdiction: Jurisdiction
    catalog_version: str
    # Unresolved condition text for Conditional outcomes, so a follow-up
    # question can be asked instead of silently deciding.
    open_conditions: tuple[str, ...] = ()


class ConsequenceRef(Frozen):
    taxonomy_id: str
    affected_profile: str
    significant: bool = False
    lasting: Lasting = Lasting.Temporary


class MitigationRef(Frozen):
    taxonomy_id: str
    strategy: MitigationStrategy
    likelihood_delta: Annotated[int, Field(ge=0, le=4)] = 0
    severity_delta: Annotated[int, Field(ge=0, le=4)] = 0


class ResidualScore(Frozen):
    likelihood: Ordinal
    severity: Ordinal
    level: RiskLevel
    note: str = ""


class RiskItem(Frozen):
    id: str = Field(min_length=1)
    risk_kind: str
    sources: SortedStrSet = frozenset()
    threat_description: str = ""
    likelihood: Optional[Ordinal] = None
    severity: Optional[Ordinal] = None
    consequences: tuple[ConsequenceRef, ...] = ()
    mitigations: tuple[MitigationRef, ...] = ()
    residual: Optional[ResidualScore] = None

    @property
    def scored(self) -> bool:
        return self.likelihood is not None and self.severity is not None


class FundamentalRight(Frozen):
    charter_article: int = Field(ge=1)
    name: str = Field(min_length=1)
    exercise: RightExercise
    limitability: RightLimitability


class RemedialMeasure(Frozen):
    description: str = Field(min_length=1)
    addresses_category: ImpactCategory
    adopted: bool = False


class RightsImpact(Frozen):
    id: str = Field(min_length=1)
    right: FundamentalRight
    affected_profile: str
    via_consequence: ConsequenceRef
    categories: CategorySet
    escalates_to: Optional[ImpactCategory] = None
    escalation_note: Optional[str] = None
    unresolved: bool = False
    remedial_measures: tuple[RemedialMeasure, ...] = ()

    @model_validator(mode="after")
    def _consistent(self) -> "RightsImpact":
        if not self.categories:
            raise ValueError("an impact must carry at least one category")
        for measure in self.remedial_measures:
            if measure.addresses_category not in self.categories:
                raise ValueError(
                    f"remedy addresses {measure.addresses_category.value}, "
                    "which is not among the impact's categories"
                )
        return self


# ---------------------------------------------------------------------------
# Assessment: the five-stage container
# ---------------------------------------------------------------------------

STAGES = (1, 2, 3, 4, 5)


class AuditEvent(Frozen):
    seq: int = Field(ge=1)
    timestamp: datetime
    actor: str
    action: str
    payload_digest: str = ""


class PrefillProvenance(Frozen):
    source_dpia_path: str
    relation: MappingRelation


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class Assessment(Frozen):
    id: str = Field(min_length=1)
    jurisdiction: Jurisdiction
    created_at: datetime
    updated_at: datetime
    stage_states: dict[int, StageState]
    system_profile: SystemProfile = SystemProfile()
    dpia: Optional[DpiaDescription] = None
    fria: Optional[FriaDescription] = None
    necessity: Optional[NecessityDecision] = None
    risks: tuple[RiskItem, ...] = ()
    impacts: tuple[RightsImpact, ...] = ()
    # In-flight stage-3 state: answers by question id, plus values and
    # provenance copied from a reused DPIA, keyed by FRIA leaf path.
    fria_answers: dict[str, Any] = Field(default_factory=dict)
    prefill_values: dict[str, Any] = Field(default_factory=dict)
    prefill_provenance: dict[str, PrefillProvenance] = Field(default_factory=dict)
    audit_log: tuple[AuditEvent, ...] = ()
    schema_version: str = SCHEMA_VERSION

    @field_validator("stage_states")
    @classmethod
    def _all_stages(cls, v: dict[int, StageState]) -> dict[int, StageState]:
        if set(v) != set(STAGES):
            raise ValueError("stage_states must cover exactly stages 1-5")
        return v

    @model_validator(mode="after")
    def _invariants(self) -> "Assessment":
        for n, state in self.stage_states.items():
            if state == StageState.Skipped and n != 2:
                raise ValueError("only stage 2 (DPIA reuse) may be skipped")
            if state == StageState.Complete:
                for m in range(1, n):
                    if self.stage_states[m] not in (StageState.Complete, StageState.Skipped):
                        raise ValueError(
                            f"stage {n} cannot be complete while stage {m} is "
                            f"{self.stage_states[m].value}"
                        )
        prev = 0
        for event in self.audit_log:
            if event.seq <= prev:
                raise ValueError("audit log sequence numbers must strictly increase")
            prev = event.seq
        return self

    # -- revision producers -------------------------------------------------

    def record(
        self,
        action: str,
        actor: str = "engine",
        payload: Any = None,
        now: Optional[datetime] = None,
        **updates: Any,
    ) -> "Assessment":
        """Produce the next revision: apply ``updates``, append one audit event."""
        stamp = now or _utcnow()
        next_seq = self.audit_log[-1].seq + 1 if self.audit_log else 1
        event = AuditEvent(
            seq=next_seq,
            timestamp=stamp,
            actor=actor,
            action=action,
            payload_digest=checksum_of(payload) if payload is not None else "",
        )
        # model_copy skips validation, so rebuild instead: updates may carry
        # plain JSON values, and the stage/audit invariants must hold on
        # every revision.
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(updates)
        data["updated_at"] = stamp
        data["audit_log"] = self.audit_log + (event,)
        return Assessment.model_validate(data)

    def stage(self, n: int) -> StageState:
        return self.stage_states[n]

    def _gate(self, n: int) -> None:
        missing = [
            m for m in range(1, n)
            if self.stage_states[m] not in (StageState.Complete, StageState.Skipped)
        ]
        if missing:
            raise StageOrderError(n, missing)

    def begin_stage(self, n: int, actor: str = "engine", now: Optional[datetime] = None) -> "Assessment":
        self._gate(n)
        states = dict(self.stage_states)
        states[n] = StageState.InProgress
        return self.record(f"stage{n}.begin", actor, now=now, stage_states=states)

    def complete_stage(self, n: int, actor: str = "engine", now: Optional[datetime] = None) -> "Assessment":
        """Mark stage ``n`` complete; raises StageOrderError if an earlier
        non-skipped stage is not complete."""
        self._gate(n)
        states = dict(self.stage_states)
        states[n] = StageState.Complete
        return self.record(f"stage{n}.complete", actor, now=now, stage_states=states)

    def skip_stage2(self, actor: str = "engine", now: Optional[datetime] = None) -> "Assessment":
        self._gate(2)
        states = dict(self.stage_states)
        states[2] = StageState.Skipped
        return self.record("stage2.skip", actor, now=now, stage_states=states)


def new_assessment(
    assessment_id: str,
    jurisdiction: Jurisdiction,
    actor: str = "engine",
    now: Optional[datetime] = None,
) -> Assessment:
    stamp = now or _utcnow()
    base = Assessment(
        id=assessment_id,
        jurisdiction=jurisdiction,
        created_at=stamp,
        updated_at=stamp,
        stage_states={n: StageState.NotStarted for n in STAGES},
    )
    return base.record("assessment.created", actor, now=stamp)
