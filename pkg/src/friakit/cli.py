"""Batch command-line surface over the assessment engine.

Subcommands are document-to-document transforms: they read assessment or
profile files, apply one engine operation, and write the result. Exit codes:
0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Optional

import click
import pydantic

from . import bridge, impacts, intake, necessity, reporting, risk
from .catalog import (
    RuleSource,
    default_conditions,
    default_mapping,
    load_catalog,
    tally_catalog,
)
from .errors import FriakitError
from .model import (
    EntityRef,
    Jurisdiction,
    NecessitySubject,
    StageState,
    SystemProfile,
    new_assessment,
)

_SOURCE_ALIASES = {
    "annex3": RuleSource.AiActAnnexIII,
    "annex1": RuleSource.AiActAnnexI,
    "art35": RuleSource.GdprArt35,
    "art6": RuleSource.AiActArt6,
    "art27": RuleSource.AiActArt27,
    "edpb": RuleSource.EdpbGuideline,
    "dpa": RuleSource.DpaList,
}


def _fail(message: str, details: Any = None) -> None:
    click.echo(json.dumps({"error": message, "details": details}), err=True)
    sys.exit(1)


def _emit(payload: Any, fmt: str, out: Optional[str], text: str = "") -> None:
    if fmt == "text" and text:
        rendered = text
    else:
        rendered = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    if out:
        Path(out).write_text(rendered + "\n", encoding="utf-8")
    else:
        click.echo(rendered)


def _read_assessment(path: str):
    return reporting.import_assessment(Path(path).read_bytes())


def _write_assessment(assessment, out: str) -> None:
    Path(out).write_bytes(reporting.export_assessment(assessment))


def _load_catalog_arg(catalog_path: Optional[str]):
    if catalog_path:
        return load_catalog(Path(catalog_path).read_bytes())
    return default_conditions()


format_option = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text")
out_option = click.option("--out", default=None, help="Write output to a file instead of stdout.")
revision_free_note = "Assessment documents are plain files; no store revision is involved."


@click.group()
def main() -> None:
    """Five-stage fundamental-rights assessment engine."""


@main.command()
@click.argument("profile_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--jurisdiction", required=True, help="Two-letter EU/EEA country code.")
@click.option("--subject", type=click.Choice(["fria", "dpia"]), default="fria")
@click.option("--catalog", "catalog_path", default=None, type=click.Path(exists=True))
@format_option
@out_option
def check(profile_file: str, jurisdiction: str, subject: str, catalog_path: Optional[str],
          fmt: str, out: Optional[str]) -> None:
    """Stage 1: decide necessity from a profile file."""
    try:
        catalog = _load_catalog_arg(catalog_path)
        profile = SystemProfile.model_validate(json.loads(Path(profile_file).read_text()))
        where = Jurisdiction(code=jurisdiction)
        if subject == "fria":
            decision = necessity.evaluate_fria_necessity(profile, catalog, where)
        else:
            decision = necessity.evaluate_dpia_necessity(profile, where, catalog)
        fired = ", ".join(f.rule_id for f in decision.fired_rules) or "none"
        text = f"{decision.subject.value}: {decision.outcome.value} (fired: {fired})"
        _emit(decision.model_dump(mode="json"), fmt, out, text)
    except (FriakitError, pydantic.ValidationError, json.JSONDecodeError) as exc:
        _fail(str(exc))


@main.group()
def catalog() -> None:
    """Inspect and validate condition catalogs."""


@catalog.command("validate")
@click.argument("catalog_file", required=False, type=click.Path(exists=True, dir_okay=False))
def catalog_validate(catalog_file: Optional[str]) -> None:
    try:
        loaded = _load_catalog_arg(catalog_file)
    except FriakitError as exc:
        _fail(str(exc))
        return
    click.echo(f"ok: {len(loaded.rules)} rules, version {loaded.version}, checksum {loaded.checksum}")


@catalog.command("tally")
@click.option("--source", required=True, help="annex3, annex1, art35, art6, art27, edpb, dpa, or a full source name.")
@click.argument("catalog_file", required=False, type=click.Path(exists=True, dir_okay=False))
@format_option
@out_option
def catalog_tally(source: str, catalog_file: Optional[str], fmt: str, out: Optional[str]) -> None:
    try:
        loaded = _load_catalog_arg(catalog_file)
        resolved = _SOURCE_ALIASES.get(source.lower()) or RuleSource(source)
        report = tally_catalog(loaded, resolved)
    except (FriakitError, ValueError) as exc:
        _fail(str(exc))
        return
    nonzero = {k.value: v for k, v in report.counts.items() if v}
    text = f"{resolved.value}: total {report.total} " + " ".join(
        f"{k}={v}" for k, v in sorted(nonzero.items())
    )
    _emit(
        {"source": resolved.value, "total": report.total,
         "counts": {k.value: v for k, v in report.counts.items()}},
        fmt, out, text,
    )


@main.command()
@click.option("--jurisdiction", required=True)
@click.option("--id", "assessment_id", default="assessment-001")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def new(jurisdiction: str, assessment_id: str, out: str) -> None:
    """Create a fresh assessment document."""
    try:
        assessment = new_assessment(assessment_id, Jurisdiction(code=jurisdiction), actor="cli")
    except pydantic.ValidationError as exc:
        _fail(str(exc))
        return
    _write_assessment(assessment, out)
    click.echo(f"created {assessment_id} -> {out}")


@main.command()
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def profile(assessment_path: str, profile_path: str, out: str) -> None:
    """Stage 1: attach a profile, run necessity, mark the stage complete."""
    try:
        assessment = _read_assessment(assessment_path)
        parsed = SystemProfile.model_validate(json.loads(Path(profile_path).read_text()))
        decision = necessity.evaluate_fria_necessity(
            parsed, default_conditions(), assessment.jurisdiction
        )
        updated = assessment.record(
            "stage1.profile", "cli", payload=parsed.model_dump(mode="json"),
            system_profile=parsed, necessity=decision,
        ).complete_stage(1, "cli")
    except (FriakitError, pydantic.ValidationError, json.JSONDecodeError) as exc:
        _fail(str(exc))
        return
    _write_assessment(updated, out)
    click.echo(f"stage 1 complete: {decision.outcome.value}")


@main.command("import-dpia")
@click.argument("dpia_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def import_dpia(dpia_file: str, assessment_path: str, out: str) -> None:
    """Stage 2: import a DPIA document, prefill, mark the stage complete."""
    try:
        assessment = _read_assessment(assessment_path)
        imported = bridge.import_dpia(Path(dpia_file).read_bytes())
        result = bridge.map_dpia_to_fria(imported.description, default_mapping())
        bridge.check_prefill_coverage(result)
        updated = assessment.record(
            "stage2.dpia_import", "cli",
            payload=imported.description.model_dump(mode="json"),
            dpia=imported.description,
            prefill_values={p: f.value for p, f in result.prefilled.items()},
            prefill_provenance={
                p: {"source_dpia_path": f.source_dpia_path, "relation": f.relation.value}
                for p, f in result.prefilled.items()
            },
        ).complete_stage(2, "cli")
    except FriakitError as exc:
        _fail(str(exc), getattr(exc, "paths", None))
        return
    _write_assessment(updated, out)
    click.echo(f"imported; {len(result.prefilled)} fields prefilled, {len(result.gaps)} gaps")


@main.command("skip-dpia")
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def skip_dpia(assessment_path: str, out: str) -> None:
    """Stage 2: proceed without a DPIA."""
    try:
        updated = _read_assessment(assessment_path).skip_stage2("cli")
    except FriakitError as exc:
        _fail(str(exc))
        return
    _write_assessment(updated, out)
    click.echo("stage 2 skipped")


@main.command()
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@format_option
@out_option
def gaps(assessment_path: str, fmt: str, out: Optional[str]) -> None:
    """Stage 2: show what the FRIA still needs after DPIA reuse."""
    try:
        assessment = _read_assessment(assessment_path)
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
    except FriakitError as exc:
        _fail(str(exc))
        return
    _emit(report.model_dump(mode="json"), fmt, out, report.render())


@main.command()
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--answers", "answers_path", required=True, type=click.Path(exists=True),
              help="JSON file: list of {question_id, value}.")
@click.option("--out", required=True)
@click.option("--complete/--no-complete", default=True,
              help="Materialize the description and complete stage 3 when nothing is pending.")
def assess(assessment_path: str, answers_path: str, out: str, complete: bool) -> None:
    """Stage 3: apply an answers file against the questionnaire."""
    try:
        assessment = _read_assessment(assessment_path)
        entries = json.loads(Path(answers_path).read_text())
        for entry in entries:
            assessment = intake.submit_answer(
                assessment, entry["question_id"], entry["value"], actor="cli"
            )
        pending = intake.next_questions(assessment)
        if complete and not pending:
            description = intake.materialize_fria(assessment)
            assessment = assessment.record(
                "stage3.materialize", "cli",
                payload=description.model_dump(mode="json"), fria=description,
            ).complete_stage(3, "cli")
    except (FriakitError, json.JSONDecodeError, KeyError) as exc:
        _fail(str(exc), getattr(exc, "paths", None))
        return
    _write_assessment(assessment, out)
    state = assessment.stage(3).value
    click.echo(f"answers applied; {len(pending)} pending; stage 3 {state}")


@main.group()
def risks() -> None:
    """Stage 3 risk scoring."""


@risks.command("score")
@click.option("--assessment", "assessment_path", default=None, type=click.Path(exists=True))
@click.option("--out", default=None)
@click.option("--likelihood", "-l", type=int, default=None)
@click.option("--severity", "-s", type=int, default=None)
@click.option("--matrix", "matrix_path", default=None, type=click.Path(exists=True))
def risks_score(assessment_path: Optional[str], out: Optional[str],
                likelihood: Optional[int], severity: Optional[int],
                matrix_path: Optional[str]) -> None:
    """Score one cell (-l/-s) or recompute residuals over an assessment."""
    matrix = (
        risk.load_matrix(Path(matrix_path).read_bytes()) if matrix_path else risk.default_matrix()
    )
    if likelihood is not None or severity is not None:
        if likelihood is None or severity is None:
            raise click.UsageError("both --likelihood and --severity are needed")
        try:
            level = risk.score_risk(likelihood, severity, matrix)
        except FriakitError as exc:
            _fail(str(exc))
            return
        click.echo(level.value)
        return
    if not assessment_path or not out:
        raise click.UsageError("either -l/-s or --assessment and --out")
    try:
        assessment = _read_assessment(assessment_path)
        rescored = tuple(
            risk.apply_mitigations(r, matrix) if r.scored else r for r in assessment.risks
        )
        updated = assessment.record("stage3.rescore", "cli", risks=rescored)
    except FriakitError as exc:
        _fail(str(exc))
        return
    _write_assessment(updated, out)
    for r in rescored:
        if r.residual:
            click.echo(f"{r.id}: residual {r.residual.likelihood}x{r.residual.severity} -> {r.residual.level.value}")


@main.group("impacts")
def impacts_group() -> None:
    """Stage 4 rights-impact derivation."""


@impacts_group.command("derive")
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def impacts_derive(assessment_path: str, out: str) -> None:
    try:
        assessment = _read_assessment(assessment_path)
        if assessment.fria is None:
            _fail("stage 3 has not produced a description yet")
            return
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
            "stage4.derive", "cli",
            payload=[i.model_dump(mode="json") for i in enriched],
            impacts=enriched, stage_states=states,
        )
    except FriakitError as exc:
        _fail(str(exc))
        return
    _write_assessment(updated, out)
    click.echo(f"{len(enriched)} impacts derived, {len(result.leftovers)} leftovers for review")


@main.command("complete-stage")
@click.argument("stage_number", type=int)
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def complete_stage(stage_number: int, assessment_path: str, out: str) -> None:
    """Mark a stage complete (gating enforced)."""
    try:
        updated = _read_assessment(assessment_path).complete_stage(stage_number, "cli")
    except (FriakitError, KeyError) as exc:
        _fail(str(exc), getattr(exc, "missing", None))
        return
    _write_assessment(updated, out)
    click.echo(f"stage {stage_number} complete")


@main.group()
def report() -> None:
    """Stage 5 report compilation."""


@report.command("compile")
@click.option("--assessment", "assessment_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def report_compile(assessment_path: str, out: str) -> None:
    try:
        assessment = _read_assessment(assessment_path)
        compiled = reporting.compile_fria_report(assessment, compiled_by="cli")
    except FriakitError as exc:
        _fail(str(exc), getattr(exc, "missing", None))
        return
    Path(out).write_bytes(reporting.export_report(compiled))
    click.echo(f"report compiled; checksum {compiled.checksum}")


@main.command()
@click.option("--dry-run", is_flag=True, default=True)
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["market-surveillance", "self-assessment"]), required=True)
@click.option("--authority", default="")
@click.option("--submitter", "submitter_path", required=True, type=click.Path(exists=True),
              help="JSON file with the submitting entity.")
@out_option
def notify(dry_run: bool, report_path: str, mode: str, authority: str,
           submitter_path: str, out: Optional[str]) -> None:
    """Stage 5: build the (dry-run) authority notification payload."""
    try:
        compiled = reporting.verify_report(Path(report_path).read_bytes())
        submitter = EntityRef.model_validate(json.loads(Path(submitter_path).read_text()))
        resolved = (
            reporting.NotificationMode.MarketSurveillanceNotification
            if mode == "market-surveillance"
            else reporting.NotificationMode.SelfAssessmentRecord
        )
        payload = reporting.build_notification(compiled, submitter, resolved, authority)
    except (FriakitError, pydantic.ValidationError, json.JSONDecodeError) as exc:
        _fail(str(exc))
        return
    rendered = reporting.export_notification(payload).decode("utf-8")
    if out:
        Path(out).write_text(rendered + "\n", encoding="utf-8")
    else:
        click.echo(rendered)


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--token", default=None, help="Require this X-Api-Token header on every call.")
def serve(store_dir: str, host: str, port: int, token: Optional[str]) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(store_dir, api_token=token), host=host, port=port)


if __name__ == "__main__":
    main()
