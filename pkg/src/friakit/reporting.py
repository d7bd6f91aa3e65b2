"""Stage 5: compile the assessment report, build the (dry-run) authority
notification, and own the canonical assessment-document format.

Documents are single JSON files with sorted keys and SHA-256 checksums, so
identical assessments compile to byte-identical artifacts. Notifications are
dry-run payloads only; no official endpoint or template exists yet, and the
payload is versioned to track the eventual one.
"""

from __future__ import annotations

import json
from enum import Enum
from typing import Any, Optional, Union

import pydantic
from pydantic import Field

from .canonical import canonical_bytes, checksum_of
from .errors import (
    ChecksumMismatch,
    ModeMismatch,
    ParseError,
    SchemaError,
    SchemaVersionError,
    StageIncomplete,
)
from .catalog import default_conditions, default_mapping, default_rights
from .impacts import default_impact_rules
from .model import (
    SCHEMA_VERSION,
    Assessment,
    EntityRef,
    Frozen,
    RiskLevel,
    StageState,
)
from .risk import (
    AcceptabilityPolicy,
    RiskMatrix,
    default_acceptability,
    default_matrix,
    residual_acceptability,
    score_risk,
)

SUPPORTED_SCHEMA_VERSIONS = (SCHEMA_VERSION,)


# ---------------------------------------------------------------------------
# Assessment document export / import
# ---------------------------------------------------------------------------

def export_assessment(assessment: Assessment) -> bytes:
    """Canonical single-file encoding: schema_version, assessment (without
    the audit log), audit_log, checksum over the first three."""
    dump = assessment.model_dump(mode="json")
    audit_log = dump.pop("audit_log")
    content: dict[str, Any] = {
        "schema_version": assessment.schema_version,
        "assessment": dump,
        "audit_log": audit_log,
    }
    content["checksum"] = checksum_of(content)
    return canonical_bytes(content)


def import_assessment(document: Union[bytes, str]) -> Assessment:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from exc
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(tree, dict):
        raise ParseError("document root must be an object")
    version = tree.get("schema_version")
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise SchemaVersionError(str(version), SUPPORTED_SCHEMA_VERSIONS)
    for key in ("assessment", "audit_log", "checksum"):
        if key not in tree:
            raise SchemaError(f"document is missing {key!r}")
    content = {k: v for k, v in tree.items() if k != "checksum"}
    actual = checksum_of(content)
    if actual != tree["checksum"]:
        raise ChecksumMismatch(tree["checksum"], actual)
    body = dict(tree["assessment"])
    body["audit_log"] = tree["audit_log"]
    try:
        return Assessment.model_validate(body)
    except pydantic.ValidationError as exc:
        raise SchemaError(f"assessment body is invalid: {exc}") from exc


# ---------------------------------------------------------------------------
# Report compilation
# ---------------------------------------------------------------------------

class ResidualSummaryRow(Frozen):
    risk_id: str
    risk_kind: str
    initial_likelihood: Optional[int] = None
    initial_severity: Optional[int] = None
    initial_level: Optional[RiskLevel] = None
    residual_likelihood: Optional[int] = None
    residual_severity: Optional[int] = None
    residual_level: Optional[RiskLevel] = None
    acceptability: str = ""


class ReportImpactEntry(Frozen):
    impact_id: str
    charter_article: int
    right_name: str
    right_exercise: str
    right_limitability: str
    affected_profile: str
    via_consequence: str
    categories: tuple[str, ...]
    escalated: bool = False
    escalation_note: str = ""
    unresolved: bool = False
    remedial_measures: tuple[dict, ...] = ()


class FriaReport(Frozen):
    assessment: dict
    catalog_versions: dict[str, str]
    residual_summary: tuple[ResidualSummaryRow, ...]
    impact_entries: tuple[ReportImpactEntry, ...]
    compiled_at: str
    compiled_by: str
    checksum: str = ""


def _require_stages(assessment: Assessment) -> None:
    missing = []
    for n in (1, 2, 3, 4):
        state = assessment.stage(n)
        if n == 2 and state in (StageState.Complete, StageState.Skipped):
            continue
        if n != 2 and state == StageState.Complete:
            continue
        missing.append(n)
    if missing:
        raise StageIncomplete(missing)


def compile_fria_report(
    assessment: Assessment,
    compiled_by: str = "engine",
    matrix: Optional[RiskMatrix] = None,
    acceptability: Optional[AcceptabilityPolicy] = None,
) -> FriaReport:
    """Deterministic report over a completed assessment: identical inputs
    (including catalog versions) compile to identical bytes. Impacts marked
    unresolved get their declared escalation materialized here."""
    _require_stages(assessment)
    acceptability = acceptability or default_acceptability()
    matrix = matrix or default_matrix()

    rows: list[ResidualSummaryRow] = []
    for risk in assessment.risks:
        initial_level = (
            score_risk(risk.likelihood, risk.severity, matrix) if risk.scored else None
        )
        rows.append(ResidualSummaryRow(
            risk_id=risk.id,
            risk_kind=risk.risk_kind,
            initial_likelihood=risk.likelihood,
            initial_severity=risk.severity,
            initial_level=initial_level,
            residual_likelihood=risk.residual.likelihood if risk.residual else None,
            residual_severity=risk.residual.severity if risk.residual else None,
            residual_level=risk.residual.level if risk.residual else None,
            acceptability=(
                residual_acceptability(risk, acceptability).value if risk.residual else ""
            ),
        ))

    entries: list[ReportImpactEntry] = []
    for impact in assessment.impacts:
        categories = {c.value for c in impact.categories}
        escalated = False
        if impact.unresolved and impact.escalates_to is not None:
            categories.add(impact.escalates_to.value)
            escalated = True
        entries.append(ReportImpactEntry(
            impact_id=impact.id,
            charter_article=impact.right.charter_article,
            right_name=impact.right.name,
            right_exercise=impact.right.exercise.value,
            right_limitability=impact.right.limitability.value,
            affected_profile=impact.affected_profile,
            via_consequence=impact.via_consequence.taxonomy_id,
            categories=tuple(sorted(categories)),
            escalated=escalated,
            escalation_note=impact.escalation_note or "",
            unresolved=impact.unresolved,
            remedial_measures=tuple(
                m.model_dump(mode="json") for m in impact.remedial_measures
            ),
        ))

    catalog_versions = {
        "conditions": (
            assessment.necessity.catalog_version
            if assessment.necessity else default_conditions().version
        ),
        "mapping": default_mapping().version,
        "rights": default_rights().version,
        "impact_rules": default_impact_rules().version,
        "matrix": matrix.version,
        "acceptability": acceptability.version,
    }

    dump = assessment.model_dump(mode="json")
    report = FriaReport(
        assessment=dump,
        catalog_versions=catalog_versions,
        residual_summary=tuple(rows),
        impact_entries=tuple(entries),
        # Derived from the assessment, not the wall clock, so compiling
        # twice yields identical bytes.
        compiled_at=dump["updated_at"],
        compiled_by=compiled_by,
    )
    body = report.model_dump(mode="json")
    body.pop("checksum")
    return report.model_copy(update={"checksum": checksum_of(body)})


def export_report(report: FriaReport) -> bytes:
    content = {
        "schema_version": SCHEMA_VERSION,
        "fria_report": report.model_dump(mode="json"),
    }
    content["checksum"] = checksum_of({k: v for k, v in content.items() if k != "checksum"})
    return canonical_bytes(content)


def verify_report(document: Union[bytes, str]) -> FriaReport:
    """Re-check a report document against its embedded checksums."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"report is not valid UTF-8: {exc}") from exc
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not valid JSON: {exc}") from exc
    if not isinstance(tree, dict) or "fria_report" not in tree:
        raise SchemaError("not a report document")
    version = tree.get("schema_version")
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise SchemaVersionError(str(version), SUPPORTED_SCHEMA_VERSIONS)
    content = {k: v for k, v in tree.items() if k != "checksum"}
    actual = checksum_of(content)
    if actual != tree.get("checksum"):
        raise ChecksumMismatch(str(tree.get("checksum")), actual)
    report = FriaReport.model_validate(tree["fria_report"])
    body = report.model_dump(mode="json")
    body.pop("checksum")
    inner = checksum_of(body)
    if inner != report.checksum:
        raise ChecksumMismatch(report.checksum, inner)
    return report


# ---------------------------------------------------------------------------
# Authority notification (dry run)
# ---------------------------------------------------------------------------

class NotificationMode(str, Enum):
    MarketSurveillanceNotification = "MarketSurveillanceNotification"
    SelfAssessmentRecord = "SelfAssessmentRecord"


class NotificationPayload(Frozen):
    payload_version: str = "notification/1"
    mode: NotificationMode
    authority: str = ""
    report_ref: str
    report_checksum: str
    submitter: EntityRef
    compiled_at: str
    dry_run: bool = True


def build_notification(
    report: FriaReport,
    submitter: EntityRef,
    mode: NotificationMode,
    authority: str = "",
) -> NotificationPayload:
    """Assemble the payload that would be sent; never transmits anything.

    Market-surveillance notifications need an authority and a residual
    summary; self-assessment records must not name an authority.
    """
    if mode == NotificationMode.MarketSurveillanceNotification:
        if not authority:
            raise ModeMismatch("a market surveillance notification needs an authority identifier")
        if not report.residual_summary:
            raise ModeMismatch("a market surveillance notification needs a residual-risk summary")
    else:
        if authority:
            raise ModeMismatch("a self-assessment record does not name an authority")
    return NotificationPayload(
        mode=mode,
        authority=authority,
        report_ref=f"assessment:{report.assessment['id']}",
        report_checksum=report.checksum,
        submitter=submitter,
        compiled_at=report.compiled_at,
    )


def export_notification(payload: NotificationPayload) -> bytes:
    content = {
        "schema_version": SCHEMA_VERSION,
        "notification": payload.model_dump(mode="json"),
    }
    content["checksum"] = checksum_of({k: v for k, v in content.items() if k != "checksum"})
    return canonical_bytes(content)
