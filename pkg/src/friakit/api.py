"""Session-based HTTP API over the assessment engine.

Resources live under ``/api/v1``. Every mutation carries the client's
revision token; a stale token gets a 409 conflict and changes nothing.
Errors use one body shape: ``{code, message, details: []}``.
"""

from __future__ import annotations

import uuid
from pathlib import Path
from typing import Any, Optional

import pydantic
from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import bridge, impacts, intake, necessity, reporting, risk
from .catalog import (
    default_conditions,
    default_mapping,
    default_rights,
    default_taxonomies,
)
from .errors import (
    DanglingRef,
    FriakitError,
    MissingField,
    ModeMismatch,
    NotVisible,
    OutOfRange,
    ParseError,
    PredicateError,
    RevisionConflict,
    SchemaError,
    SchemaVersionError,
    StageIncomplete,
    StageOrderError,
    TypeMismatch,
    ValidationError,
)
from .errors import ChecksumMismatch, EmptyIntended
from .model import (
    Assessment,
    EntityRef,
    Jurisdiction,
    MitigationRef,
    RiskItem,
    StageState,
    SystemProfile,
    new_assessment,
)
from .store import DocumentStore

_ERROR_STATUS: list[tuple[type, int, str]] = [
    (RevisionConflict, 409, "revision_conflict"),
    (StageOrderError, 409, "stage_order"),
    (StageIncomplete, 409, "stage_incomplete"),
    (SchemaVersionError, 400, "schema_version"),
    (ChecksumMismatch, 400, "checksum_mismatch"),
    (ParseError, 400, "parse_error"),
    (SchemaError, 400, "schema_error"),
    (PredicateError, 400, "predicate_error"),
    (MissingField, 422, "missing_field"),
    (ValidationError, 422, "validation_error"),
    (TypeMismatch, 422, "type_mismatch"),
    (NotVisible, 422, "not_visible"),
    (OutOfRange, 422, "out_of_range"),
    (EmptyIntended, 422, "empty_intended"),
    (DanglingRef, 422, "dangling_ref"),
    (ModeMismatch, 422, "mode_mismatch"),
]


def _error_payload(exc: FriakitError) -> tuple[int, dict[str, Any]]:
    for kind, status, code in _ERROR_STATUS:
        if isinstance(exc, kind):
            details: list[Any] = []
            if isinstance(exc, StageOrderError):
                details = exc.missing
            elif isinstance(exc, StageIncomplete):
                details = exc.missing
            elif isinstance(exc, ValidationError):
                details = exc.paths
            elif isinstance(exc, MissingField):
                details = [exc.field, exc.rule_id]
            return status, {"code": code, "message": str(exc), "details": details}
    return 500, {"code": "internal", "message": str(exc), "details": []}


# -- request bodies ----------------------------------------------------------

class CreateAssessment(BaseModel):
    jurisdiction: str
    assessment_id: Optional[str] = None


class AnswerBody(BaseModel):
    question_id: str
    value: Any = None


class RiskPreviewBody(BaseModel):
    likelihood: int
    severity: int
    mitigations: list[MitigationRef] = Field(default_factory=list)


class ImpactUpdateBody(BaseModel):
    unresolved: Optional[bool] = None
    adopt_remedies: list[int] = Field(default_factory=list)


class NotificationBody(BaseModel):
    mode: reporting.NotificationMode
    authority: str = ""
    submitter: EntityRef


def create_app(store_dir: Path | str, api_token: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="friakit", version="0.1.0")
    store = DocumentStore(store_dir)

    def auth(x_api_token: Optional[str] = Header(default=None)) -> None:
        if api_token is not None and x_api_token != api_token:
            raise HTTPException(status_code=401, detail="invalid or missing API token")

    @app.exception_handler(FriakitError)
    async def _friakit_error(_request: Request, exc: FriakitError) -> JSONResponse:
        status, payload = _error_payload(exc)
        return JSONResponse(status_code=status, content=payload)

    @app.exception_handler(KeyError)
    async def _not_found(_request: Request, exc: KeyError) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"no such resource: {exc}", "details": []},
        )

    @app.exception_handler(pydantic.ValidationError)
    async def _pydantic_error(_request: Request, exc: pydantic.ValidationError) -> JSONResponse:
        paths = [".".join(str(p) for p in err["loc"]) for err in exc.errors()]
        return JSONResponse(
            status_code=422,
            content={"code": "validation_error", "message": str(exc), "details": paths},
        )

    def _envelope(assessment: Assessment, revision: int, **extra: Any) -> dict[str, Any]:
        payload = {
            "id": assessment.id,
            "revision": revision,
            "stage_states": {str(k): v.value for k, v in assessment.stage_states.items()},
            "assessment": assessment.model_dump(mode="json"),
        }
        payload.update(extra)
        return payload

    def _mutate(assessment_id: str, revision: int, mutate) -> tuple[Assessment, int, dict]:
        assessment, current = store.get(assessment_id)
        if current != revision:
            raise RevisionConflict(current, revision)
        updated, extra = mutate(assessment)
        new_revision = store.compare_and_set(assessment_id, revision, updated)
        return updated, new_revision, extra

    # -- assessments ---------------------------------------------------------

    @app.post("/api/v1/assessments", status_code=201, dependencies=[Depends(auth)])
    def create(body: CreateAssessment) -> dict:
        assessment = new_assessment(
            body.assessment_id or uuid.uuid4().hex,
            Jurisdiction(code=body.jurisdiction),
            actor="api",
        )
        revision = store.create(assessment)
        return _envelope(assessment, revision)

    @app.get("/api/v1/assessments", dependencies=[Depends(auth)])
    def list_assessments() -> dict:
        items = []
        for assessment_id in store.list_ids():
            assessment, revision = store.get(assessment_id)
            items.append({
                "id": assessment_id,
                "revision": revision,
                "stage_states": {str(k): v.value for k, v in assessment.stage_states.items()},
            })
        return {"assessments": items}

    @app.get("/api/v1/assessments/{assessment_id}", dependencies=[Depends(auth)])
    def get_assessment(assessment_id: str) -> dict:
        assessment, revision = store.get(assessment_id)
        return _envelope(assessment, revision)

    # -- stage 1: profile and necessity ---------------------------------------

    @app.put("/api/v1/assessments/{assessment_id}/profile", dependencies=[Depends(auth)])
    def submit_profile(assessment_id: str, revision: int, profile: SystemProfile) -> dict:
        catalog = default_conditions()

        def mutate(assessment: Assessment):
            fria_decision = necessity.evaluate_fria_necessity(
                profile, catalog, assessment.jurisdiction
            )
            dpia_decision = necessity.evaluate_dpia_necessity(
                profile, assessment.jurisdiction, catalog
            )
            classification = necessity.classify_high_risk(profile, catalog)
            updated = assessment.record(
                "stage1.profile", "api", payload=profile.model_dump(mode="json"),
                system_profile=profile, necessity=fria_decision,
            ).complete_stage(1, "api")
            return updated, {
                "necessity": fria_decision.model_dump(mode="json"),
                "dpia_necessity": dpia_decision.model_dump(mode="json"),
                "high_risk": classification.model_dump(mode="json"),
            }

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    # -- stage 2: DPIA reuse ---------------------------------------------------

    @app.post("/api/v1/assessments/{assessment_id}/dpia", dependencies=[Depends(auth)])
    async def upload_dpia(assessment_id: str, revision: int, request: Request) -> dict:
        raw = await request.body()
        imported = bridge.import_dpia(raw)
        questionnaire = intake.default_questionnaire()

        def mutate(assessment: Assessment):
            if assessment.stage(1) != StageState.Complete:
                raise StageOrderError(2, [1])
            existing = {}
            for question_id, answer in assessment.fria_answers.items():
                question = questionnaire.question(question_id)
                existing[question.target_path] = intake.answer_to_path_value(question, answer)
            result = bridge.map_dpia_to_fria(imported.description, default_mapping(), existing)
            bridge.check_prefill_coverage(result)
            report = bridge.gap_report(result)
            updated = assessment.record(
                "stage2.dpia_import", "api", payload=imported.description.model_dump(mode="json"),
                dpia=imported.description,
                prefill_values={p: f.value for p, f in result.prefilled.items()},
                prefill_provenance={
                    p: {"source_dpia_path": f.source_dpia_path, "relation": f.relation.value}
                    for p, f in result.prefilled.items()
                },
            ).complete_stage(2, "api")
            return updated, {
                "prefill": {
                    "prefilled": {p: f.model_dump(mode="json") for p, f in result.prefilled.items()},
                    "gaps": [g.model_dump(mode="json") for g in result.gaps],
                    "conflicts": [c.model_dump(mode="json") for c in result.conflicts],
                },
                "gap_report": report.model_dump(mode="json"),
                "import_warnings": [i.model_dump(mode="json") for i in imported.report.issues],
            }

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.post("/api/v1/assessments/{assessment_id}/stages/2/skip", dependencies=[Depends(auth)])
    def skip_stage2(assessment_id: str, revision: int) -> dict:
        def mutate(assessment: Assessment):
            return assessment.skip_stage2("api"), {}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.get("/api/v1/assessments/{assessment_id}/gaps", dependencies=[Depends(auth)])
    def gaps(assessment_id: str) -> dict:
        assessment, revision = store.get(assessment_id)
        if assessment.dpia is not None:
            result = bridge.map_dpia_to_fria(assessment.dpia, default_mapping())
        else:
            result = bridge.PrefillResult(
                prefilled={},
                gaps=tuple(
                    bridge.GapEntry(fria_path=path, reason=bridge.GapReason.Missing)
                    for path in intake.FRIA_LEAF_PATHS
                ),
            )
        report = bridge.gap_report(result)
        return {"revision": revision, "gap_report": report.model_dump(mode="json"),
                "rendered": report.render()}

    # -- stage 3: questionnaire and risks ---------------------------------------

    @app.get("/api/v1/assessments/{assessment_id}/questions", dependencies=[Depends(auth)])
    def questions(assessment_id: str) -> dict:
        assessment, revision = store.get(assessment_id)
        pending = intake.next_questions(assessment)
        return {
            "revision": revision,
            "pending": [q.model_dump(mode="json") for q in pending],
            "answered": sorted(assessment.fria_answers),
            "stage3_can_complete": not pending,
        }

    @app.post("/api/v1/assessments/{assessment_id}/answers", dependencies=[Depends(auth)])
    def submit_answer(assessment_id: str, revision: int, body: AnswerBody) -> dict:
        def mutate(assessment: Assessment):
            updated = intake.submit_answer(assessment, body.question_id, body.value, actor="api")
            pending = intake.next_questions(updated)
            return updated, {
                "pending": [q.model_dump(mode="json") for q in pending],
                "stage3_can_complete": not pending,
            }

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.post("/api/v1/assessments/{assessment_id}/stages/3/complete", dependencies=[Depends(auth)])
    def complete_stage3(assessment_id: str, revision: int) -> dict:
        def mutate(assessment: Assessment):
            pending = intake.next_questions(assessment)
            if pending:
                raise ValidationError(
                    [q.target_path for q in pending], "unanswered questions remain"
                )
            description = intake.materialize_fria(assessment)
            updated = assessment.record(
                "stage3.materialize", "api",
                payload=description.model_dump(mode="json"),
                fria=description,
            ).complete_stage(3, "api")
            return updated, {}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.get("/api/v1/assessments/{assessment_id}/risks", dependencies=[Depends(auth)])
    def list_risks(assessment_id: str) -> dict:
        assessment, revision = store.get(assessment_id)
        candidates: list[dict] = []
        if assessment.fria is not None:
            candidates = [
                r.model_dump(mode="json")
                for r in risk.enumerate_candidate_risks(assessment.fria)
            ]
        return {
            "revision": revision,
            "risks": [r.model_dump(mode="json") for r in assessment.risks],
            "candidates": candidates,
        }

    @app.post("/api/v1/assessments/{assessment_id}/risks", dependencies=[Depends(auth)])
    def add_risk(assessment_id: str, revision: int, item: RiskItem) -> dict:
        def mutate(assessment: Assessment):
            if any(r.id == item.id for r in assessment.risks):
                raise ValidationError([item.id], f"risk id {item.id!r} already exists")
            stored = item
            if stored.scored:
                stored = risk.apply_mitigations(stored, risk.default_matrix())
            updated = assessment.record(
                f"stage3.risk.{item.id}", "api", payload=stored.model_dump(mode="json"),
                risks=assessment.risks + (stored,),
            )
            return updated, {"risk": stored.model_dump(mode="json")}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.put("/api/v1/assessments/{assessment_id}/risks/{risk_id}", dependencies=[Depends(auth)])
    def update_risk(assessment_id: str, risk_id: str, revision: int, item: RiskItem) -> dict:
        def mutate(assessment: Assessment):
            if item.id != risk_id:
                raise ValidationError([risk_id], "risk id cannot change")
            if not any(r.id == risk_id for r in assessment.risks):
                raise KeyError(risk_id)
            stored = item
            if stored.scored:
                stored = risk.apply_mitigations(stored, risk.default_matrix())
            updated_risks = tuple(stored if r.id == risk_id else r for r in assessment.risks)
            updated = assessment.record(
                f"stage3.risk.{risk_id}", "api", payload=stored.model_dump(mode="json"),
                risks=updated_risks,
            )
            return updated, {"risk": stored.model_dump(mode="json")}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.post("/api/v1/risk-preview", dependencies=[Depends(auth)])
    def risk_preview(body: RiskPreviewBody) -> dict:
        matrix = risk.default_matrix()
        initial = risk.score_risk(body.likelihood, body.severity, matrix)
        draft = RiskItem(
            id="preview", risk_kind="preview",
            likelihood=body.likelihood, severity=body.severity,
            mitigations=tuple(body.mitigations),
        )
        with_residual = risk.apply_mitigations(draft, matrix)
        assert with_residual.residual is not None
        return {
            "initial_level": initial.value,
            "residual": with_residual.residual.model_dump(mode="json"),
        }

    # -- stage 4: rights impacts ----------------------------------------------

    @app.post("/api/v1/assessments/{assessment_id}/impacts/derive", dependencies=[Depends(auth)])
    def derive_impacts(assessment_id: str, revision: int) -> dict:
        def mutate(assessment: Assessment):
            if assessment.stage(3) != StageState.Complete or assessment.fria is None:
                raise StageOrderError(4, [3])
            profiles = intake.classify_affected_persons(assessment.fria)
            result = impacts.derive_rights_impacts(assessment.risks, profiles)
            enriched = tuple(
                impact.model_copy(update={"remedial_measures": impacts.suggest_remedies(impact)})
                for impact in result.impacts
            )
            states = dict(assessment.stage_states)
            if states[4] == StageState.NotStarted:
                states[4] = StageState.InProgress
            updated = assessment.record(
                "stage4.derive", "api",
                payload=[i.model_dump(mode="json") for i in enriched],
                impacts=enriched, stage_states=states,
            )
            return updated, {
                "impacts": [i.model_dump(mode="json") for i in enriched],
                "leftovers": [l.model_dump(mode="json") for l in result.leftovers],
                "profiles": [p.model_dump(mode="json") for p in profiles],
            }

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.put("/api/v1/assessments/{assessment_id}/impacts/{impact_id}", dependencies=[Depends(auth)])
    def update_impact(assessment_id: str, impact_id: str, revision: int, body: ImpactUpdateBody) -> dict:
        def mutate(assessment: Assessment):
            target = next((i for i in assessment.impacts if i.id == impact_id), None)
            if target is None:
                raise KeyError(impact_id)
            measures = list(target.remedial_measures)
            for index in body.adopt_remedies:
                if not 0 <= index < len(measures):
                    raise ValidationError([impact_id], f"no remedy at index {index}")
                measures[index] = measures[index].model_copy(update={"adopted": True})
            changed = target.model_copy(update={
                "remedial_measures": tuple(measures),
                **({"unresolved": body.unresolved} if body.unresolved is not None else {}),
            })
            updated = assessment.record(
                f"stage4.impact.{impact_id}", "api", payload=changed.model_dump(mode="json"),
                impacts=tuple(changed if i.id == impact_id else i for i in assessment.impacts),
            )
            return updated, {"impact": changed.model_dump(mode="json")}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    @app.post("/api/v1/assessments/{assessment_id}/stages/4/complete", dependencies=[Depends(auth)])
    def complete_stage4(assessment_id: str, revision: int) -> dict:
        def mutate(assessment: Assessment):
            derived = any(e.action == "stage4.derive" for e in assessment.audit_log)
            has_consequences = any(r.consequences for r in assessment.risks)
            if has_consequences and not derived:
                raise ValidationError(
                    ["impacts"], "derive rights impacts before completing stage 4"
                )
            return assessment.complete_stage(4, "api"), {}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    # -- stage 5: report and notification ---------------------------------------

    @app.post("/api/v1/assessments/{assessment_id}/report", dependencies=[Depends(auth)])
    def compile_report(assessment_id: str) -> Response:
        assessment, _revision = store.get(assessment_id)
        report = reporting.compile_fria_report(assessment)
        return Response(
            content=reporting.export_report(report), media_type="application/json"
        )

    @app.post("/api/v1/assessments/{assessment_id}/notification", dependencies=[Depends(auth)])
    def build_notification(assessment_id: str, revision: int, body: NotificationBody) -> dict:
        def mutate(assessment: Assessment):
            report = reporting.compile_fria_report(assessment)
            payload = reporting.build_notification(
                report, body.submitter, body.mode, body.authority
            )
            states = dict(assessment.stage_states)
            if states[5] == StageState.NotStarted:
                states[5] = StageState.InProgress
            updated = assessment.record(
                "stage5.notification", "api", payload=payload.model_dump(mode="json"),
                stage_states=states,
            ).complete_stage(5, "api")
            return updated, {"notification": payload.model_dump(mode="json")}

        updated, new_revision, extra = _mutate(assessment_id, revision, mutate)
        return _envelope(updated, new_revision, **extra)

    # -- catalogs ----------------------------------------------------------------

    @app.get("/api/v1/catalogs", dependencies=[Depends(auth)])
    def catalogs() -> dict:
        taxonomies = default_taxonomies()
        return {
            "conditions": {
                "version": default_conditions().version,
                "checksum": default_conditions().checksum,
                "rules": len(default_conditions().rules),
            },
            "mapping": {"version": default_mapping().version},
            "rights": {"version": default_rights().version},
            "taxonomies": {kind.value: len(tax.entries) for kind, tax in taxonomies.items()},
            "matrix": {"version": risk.default_matrix().version},
            "acceptability": {"version": risk.default_acceptability().version},
            "impact_rules": {"version": impacts.default_impact_rules().version},
            "questionnaire": {"version": intake.default_questionnaire().version},
        }

    @app.get("/api/v1/catalogs/matrix", dependencies=[Depends(auth)])
    def matrix_catalog() -> dict:
        matrix = risk.default_matrix()
        return {
            "version": matrix.version,
            "levels": [[level.value for level in row] for row in matrix.levels],
        }

    @app.get("/api/v1/catalogs/questionnaire", dependencies=[Depends(auth)])
    def questionnaire_catalog() -> dict:
        questionnaire = intake.default_questionnaire()
        return {
            "version": questionnaire.version,
            "questions": [q.model_dump(mode="json") for q in questionnaire.questions],
        }

    return app
