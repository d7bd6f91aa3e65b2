"""Stage 2: reuse an existing DPIA inside the FRIA flow.

Two modes share this machinery: importing a completed DPIA up front, or
capturing both assessments concurrently from a shared field plan. Prefill
copies values along the mapping catalog; Equivalent copies are complete,
Partial copies are starting points that stay on the gap list as "needs
enrichment" so reuse never silently downgrades completeness. Conflicts with
values already captured on the FRIA side are surfaced, never auto-resolved.
"""

from __future__ import annotations

import json
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Union

import pydantic
from pydantic import Field

from .canonical import checksum_of
from .errors import ChecksumMismatch, ParseError, SchemaError, SchemaVersionError, ValidationError
from .model import (
    DPIA_LEAF_PATHS,
    FRIA_LEAF_PATHS,
    REQUIRED_FRIA_PATHS,
    SCHEMA_VERSION,
    DpiaDescription,
    Frozen,
    MappingRelation,
    Role,
    ValidationReport,
    fria_section,
    validate_dpia_description,
)
from .catalog import MappingCatalog, MappingEntry

SUPPORTED_SCHEMA_VERSIONS = (SCHEMA_VERSION,)


# ---------------------------------------------------------------------------
# DPIA import
# ---------------------------------------------------------------------------

class DpiaImportResult(Frozen):
    description: DpiaDescription
    report: ValidationReport
    completed_on: str = ""
    system_changed_since: bool = False


def import_dpia(document: Union[bytes, str]) -> DpiaImportResult:
    """Read a DPIA from the assessment-document format (section ``dpia``).

    Fatal invariant breaches raise; warnings ride along on the report.
    Staleness is recorded (completion date, change flag) but not enforced.
    """
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
    if "dpia" not in tree:
        raise SchemaError("document has no 'dpia' section")
    if "checksum" in tree:
        content = {k: v for k, v in tree.items() if k != "checksum"}
        actual = checksum_of(content)
        if actual != tree["checksum"]:
            raise ChecksumMismatch(tree["checksum"], actual)
    try:
        description = DpiaDescription.model_validate(tree["dpia"])
    except pydantic.ValidationError as exc:
        paths = [".".join(str(p) for p in err["loc"]) for err in exc.errors()]
        raise ValidationError(paths, f"dpia section is malformed: {exc}") from exc
    report = validate_dpia_description(description)
    if report.errors():
        raise ValidationError([i.path for i in report.errors()])
    return DpiaImportResult(
        description=description,
        report=report,
        completed_on=str(tree.get("completed_on", "")),
        system_changed_since=bool(tree.get("system_changed_since", False)),
    )


def export_dpia(d: DpiaDescription, completed_on: str = "") -> bytes:
    """Write a DPIA in the import profile, checksummed."""
    content: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "dpia": d.model_dump(mode="json"),
    }
    if completed_on:
        content["completed_on"] = completed_on
    content["checksum"] = checksum_of(content)
    return json.dumps(content, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------
# Prefill along the mapping catalog
# ---------------------------------------------------------------------------

class GapReason(str, Enum):
    Missing = "Missing"
    NeedsEnrichment = "NeedsEnrichment"


class GapEntry(Frozen):
    fria_path: str
    reason: GapReason
    transform_note: str = ""


class PrefilledField(Frozen):
    value: Any
    source_dpia_path: str
    relation: MappingRelation


class PrefillConflict(Frozen):
    fria_path: str
    dpia_value: Any
    existing_value: Any


class PrefillResult(Frozen):
    prefilled: dict[str, PrefilledField] = Field(default_factory=dict)
    gaps: tuple[GapEntry, ...] = ()
    conflicts: tuple[PrefillConflict, ...] = ()

    def complete_paths(self) -> frozenset[str]:
        """Paths whose prefill needs no further capture (Equivalent copies)."""
        return frozenset(
            path for path, field in self.prefilled.items()
            if field.relation == MappingRelation.Equivalent
        )

    def gap_paths(self) -> frozenset[str]:
        return frozenset(g.fria_path for g in self.gaps)


# Reshaping projections for mapped pairs whose two sides differ in shape.
# Every projection only selects or restructures source values; it never
# synthesises free text, so prefill cannot invent data. Pairs without an
# entry here copy the source value verbatim.
Transform = Callable[[DpiaDescription], Any]

TRANSFORMS: dict[tuple[str, str], Transform] = {
    ("processing_operations", "involved_data.operations"): lambda d: [
        op.name for op in d.processing_operations
    ],
    ("data_subjects", "involved_entities.ai_subjects"): lambda d: [
        {"id": s.category, "name": s.category, "roles": [Role.AiSubject.value]}
        for s in d.data_subjects
    ],
    ("entities", "involved_entities.users"): lambda d: [
        e.model_dump(mode="json") for e in d.entities if Role.AiUser in e.roles
    ],
    ("inferences", "involved_data.outputs"): lambda d: [
        {"name": name, "is_inference": True, "role_in_system": "Output"}
        for name in d.inferences
    ],
}


def _dpia_json_value(d: DpiaDescription, path: str) -> Any:
    node = d.model_dump(mode="json")
    for part in path.split("."):
        node = node[part]
    return node


def prefill_value(d: DpiaDescription, entry: MappingEntry) -> Any:
    assert entry.dpia_path and entry.fria_path
    transform = TRANSFORMS.get((entry.dpia_path, entry.fria_path))
    if transform is not None:
        return transform(d)
    return _dpia_json_value(d, entry.dpia_path)


def map_dpia_to_fria(
    d: DpiaDescription,
    mapping: MappingCatalog,
    existing: Optional[Mapping[str, Any]] = None,
) -> PrefillResult:
    """Copy reusable values, list what still needs capture, surface conflicts.

    ``existing`` carries FRIA values already captured (ex-post mode); a
    prefill that disagrees with one becomes a conflict for a human, the
    existing value stays untouched.
    """
    existing = existing or {}
    prefilled: dict[str, PrefilledField] = {}
    gaps: list[GapEntry] = []
    conflicts: list[PrefillConflict] = []
    for entry in mapping.entries:
        if entry.relation == MappingRelation.DpiaOnly:
            continue
        if entry.relation == MappingRelation.FriaOnly:
            assert entry.fria_path
            gaps.append(GapEntry(fria_path=entry.fria_path, reason=GapReason.Missing))
            continue
        assert entry.dpia_path and entry.fria_path
        value = prefill_value(d, entry)
        if entry.fria_path in existing and existing[entry.fria_path] != value:
            conflicts.append(PrefillConflict(
                fria_path=entry.fria_path,
                dpia_value=value,
                existing_value=existing[entry.fria_path],
            ))
        else:
            prefilled[entry.fria_path] = PrefilledField(
                value=value,
                source_dpia_path=entry.dpia_path,
                relation=entry.relation,
            )
        if entry.relation == MappingRelation.Partial:
            gaps.append(GapEntry(
                fria_path=entry.fria_path,
                reason=GapReason.NeedsEnrichment,
                transform_note=entry.transform_note,
            ))
    return PrefillResult(prefilled=prefilled, gaps=tuple(gaps), conflicts=tuple(conflicts))


def check_prefill_coverage(result: PrefillResult) -> None:
    """Complete copies and gaps must partition the required path set."""
    complete = result.complete_paths()
    gap_paths = result.gap_paths()
    overlap = complete & gap_paths
    if overlap:
        raise ValidationError(sorted(overlap), "paths both complete and gap")
    uncovered = REQUIRED_FRIA_PATHS - complete - gap_paths
    if uncovered:
        raise ValidationError(sorted(uncovered), "required paths not covered by prefill")


# ---------------------------------------------------------------------------
# Gap report
# ---------------------------------------------------------------------------

class GapReportLine(Frozen):
    fria_path: str
    reason: GapReason
    question_id: str = ""
    transform_note: str = ""


class GapReport(Frozen):
    # Grouped by description category, in declaration order.
    sections: dict[str, tuple[GapReportLine, ...]] = Field(default_factory=dict)
    conflicts: tuple[PrefillConflict, ...] = ()

    def render(self) -> str:
        lines: list[str] = []
        for section, entries in self.sections.items():
            lines.append(f"{section}:")
            for entry in entries:
                suffix = f" [{entry.question_id}]" if entry.question_id else ""
                note = f" ({entry.transform_note})" if entry.transform_note else ""
                lines.append(f"  - {entry.fria_path}: {entry.reason.value}{suffix}{note}")
        if self.conflicts:
            lines.append("conflicts:")
            for conflict in self.conflicts:
                lines.append(
                    f"  - {conflict.fria_path}: reused value {json.dumps(conflict.dpia_value, sort_keys=True)}"
                    f" disagrees with captured value {json.dumps(conflict.existing_value, sort_keys=True)}"
                )
        return "\n".join(lines)


def gap_report(result: PrefillResult, question_ids: Optional[Mapping[str, str]] = None) -> GapReport:
    """Human-readable gap listing grouped by description category, annotated
    with the questionnaire ids that collect each missing field."""
    if question_ids is None:
        from .intake import default_questionnaire
        question_ids = {
            q.target_path: q.id for q in default_questionnaire().questions
        }
    sections: dict[str, list[GapReportLine]] = {}
    for gap in sorted(result.gaps, key=lambda g: FRIA_LEAF_PATHS.index(g.fria_path)):
        sections.setdefault(fria_section(gap.fria_path), []).append(GapReportLine(
            fria_path=gap.fria_path,
            reason=gap.reason,
            question_id=question_ids.get(gap.fria_path, ""),
            transform_note=gap.transform_note,
        ))
    return GapReport(
        sections={k: tuple(v) for k, v in sections.items()},
        conflicts=result.conflicts,
    )


# ---------------------------------------------------------------------------
# Dual-track plan (concurrent DPIA + FRIA capture)
# ---------------------------------------------------------------------------

class DualTrackPlan(Frozen):
    shared_fields: tuple[tuple[str, str], ...]
    dpia_only: tuple[str, ...]
    fria_only: tuple[str, ...]


def plan_dual_track(mapping: MappingCatalog) -> DualTrackPlan:
    """Partition both field sets into capture-once pairs and per-track rests."""
    shared = tuple(
        (e.dpia_path, e.fria_path)
        for e in mapping.shared()
        if e.dpia_path and e.fria_path
    )
    plan = DualTrackPlan(
        shared_fields=shared,
        dpia_only=mapping.dpia_only_paths(),
        fria_only=mapping.fria_only_paths(),
    )
    shared_dpia = [pair[0] for pair in plan.shared_fields]
    shared_fria = [pair[1] for pair in plan.shared_fields]
    dpia_cover = sorted(shared_dpia + list(plan.dpia_only))
    fria_cover = sorted(shared_fria + list(plan.fria_only))
    if dpia_cover != sorted(DPIA_LEAF_PATHS) or fria_cover != sorted(FRIA_LEAF_PATHS):
        raise SchemaError("dual-track plan does not partition the declared field sets")
    return plan
