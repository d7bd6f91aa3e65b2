"""Acceptance gate: one test per release criterion, timed where the
criterion sets a budget, printing one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import itertools
import json
import random
import threading
import time

import pytest

from friakit.bridge import check_prefill_coverage, map_dpia_to_fria
from friakit.catalog import (
    RuleSource,
    default_conditions,
    default_mapping,
    tally_catalog,
)
from friakit.errors import RevisionConflict, StageOrderError
from friakit.model import (
    DPIA_LEAF_PATHS,
    FRIA_LEAF_PATHS,
    REQUIRED_FRIA_PATHS,
    RISK_LEVEL_ORDER,
    ImpactCategory,
    Jurisdiction,
    MappingRelation,
    MitigationRef,
    NecessityOutcome,
    RiskItem,
    StageState,
    SystemProfile,
    new_assessment,
)
from friakit.necessity import evaluate_dpia_necessity
from friakit.reporting import compile_fria_report, export_assessment, export_report, import_assessment
from friakit.risk import apply_mitigations, default_matrix, score_risk
from friakit.store import DocumentStore

from conftest import build_passport_assessment
from generators import make_assessment, make_dpia
from test_bridge import TRANSFORM_CONSTANTS, _strings_in


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


class TestAcceptance:
    def test_annex3_tally(self):
        started = time.monotonic()
        tally = tally_catalog(default_conditions(), RuleSource.AiActAnnexIII)
        elapsed = time.monotonic() - started
        ok = (
            tally.total == 25
            and tally.counts[NecessityOutcome.Required] == 22
            and tally.counts[NecessityOutcome.Conditional] == 3
            and elapsed < 1.0
        )
        report(
            "annex-iii tally: 25 rules, 22 required + 3 conditional",
            ok, f"{elapsed:.3f}s",
        )

    def test_gdpr_art35_triggers(self):
        started = time.monotonic()
        catalog = default_conditions()
        jurisdiction = Jurisdiction(code="IE")
        minimal = {
            "gdpr-art35-3a": SystemProfile(
                automated_decisions=True, legal_or_significant_effects=True,
            ),
            "gdpr-art35-3b": SystemProfile(special_category=True, scale_data=4),
            "gdpr-art35-3c": SystemProfile(public_area_monitoring=True, scale_subjects=4),
        }
        ok = True
        for rule_id, profile in minimal.items():
            decision = evaluate_dpia_necessity(profile, jurisdiction, catalog)
            fired = [f.rule_id for f in decision.fired_rules]
            ok = ok and fired == [rule_id] and decision.outcome == NecessityOutcome.Required
        empty = evaluate_dpia_necessity(SystemProfile(), jurisdiction, catalog)
        ok = ok and empty.fired_rules == ()
        elapsed = time.monotonic() - started
        ok = ok and elapsed < 1.0
        report(
            "gdpr art.35-3 triggers fire on minimal profiles, none on empty",
            ok, f"{elapsed:.3f}s",
        )

    def test_mapping_totality(self):
        mapping = default_mapping()
        dpia_seen: list[str] = []
        fria_seen: list[str] = []
        for entry in mapping.entries:
            if entry.dpia_path:
                dpia_seen.append(entry.dpia_path)
            if entry.fria_path:
                fria_seen.append(entry.fria_path)
        exact = (
            sorted(dpia_seen) == sorted(DPIA_LEAF_PATHS)
            and sorted(fria_seen) == sorted(FRIA_LEAF_PATHS)
        )
        dpia_only = set(mapping.dpia_only_paths())
        fria_only = set(mapping.fria_only_paths())
        ok = (
            exact
            and "legal_bases" in dpia_only
            and {
                "provenance.development_summary",
                "provenance.datasheets",
                "provenance.lifecycle_changes",
            } <= fria_only
        )
        report("mapping totality: every leaf path in exactly one entry", ok)

    def test_prefill_property_suite(self):
        started = time.monotonic()
        rng = random.Random(20260810)
        mapping = default_mapping()
        violations = 0
        for _ in range(1000):
            dpia = make_dpia(rng)
            first = map_dpia_to_fria(dpia, mapping)
            second = map_dpia_to_fria(dpia, mapping)
            if first != second:
                violations += 1
                continue
            try:
                check_prefill_coverage(first)
            except Exception:
                violations += 1
                continue
            source_strings = _strings_in(dpia.model_dump(mode="json"))
            for field in first.prefilled.values():
                if _strings_in(field.value) - source_strings - TRANSFORM_CONSTANTS:
                    violations += 1
                    break
        elapsed = time.monotonic() - started
        ok = violations == 0 and elapsed < 30.0
        report(
            "prefill properties over 1000 random DPIAs (idempotent, no invention, coverage)",
            ok, f"{violations} violations, {elapsed:.1f}s",
        )

    def test_risk_matrix_suite(self):
        started = time.monotonic()
        matrix = default_matrix()
        violations = 0
        for l, s in itertools.product(range(1, 6), range(1, 6)):
            here = RISK_LEVEL_ORDER[score_risk(l, s, matrix)]
            if l < 5 and RISK_LEVEL_ORDER[score_risk(l + 1, s, matrix)] < here:
                violations += 1
            if s < 5 and RISK_LEVEL_ORDER[score_risk(l, s + 1, matrix)] < here:
                violations += 1
        rng = random.Random(42)
        strategies = ("Reduce", "Mitigate", "Monitor", "Eliminate")
        for index in range(1000):
            likelihood, severity = rng.randint(1, 5), rng.randint(1, 5)
            mitigations = [
                MitigationRef(
                    taxonomy_id="prevent_or_reduce",
                    strategy=rng.choice(strategies),
                    likelihood_delta=rng.randint(0, 4),
                    severity_delta=rng.randint(0, 4),
                )
                for _ in range(rng.randint(0, 4))
            ]
            base = RiskItem(
                id=f"r{index}", risk_kind="incorrect_output",
                likelihood=likelihood, severity=severity,
                mitigations=tuple(mitigations),
            )
            scored = apply_mitigations(base, matrix)
            initial = score_risk(likelihood, severity, matrix)
            if RISK_LEVEL_ORDER[scored.residual.level] > RISK_LEVEL_ORDER[initial]:
                violations += 1
            shuffled = list(mitigations)
            rng.shuffle(shuffled)
            reordered = apply_mitigations(
                base.model_copy(update={"mitigations": tuple(shuffled)}), matrix
            )
            if reordered.residual != scored.residual:
                violations += 1
        elapsed = time.monotonic() - started
        ok = violations == 0 and elapsed < 10.0
        report(
            "risk matrix monotone; 1000 random mitigations never worsen, order-independent",
            ok, f"{violations} violations, {elapsed:.1f}s",
        )

    def test_passport_end_to_end(self):
        started = time.monotonic()
        assessment = build_passport_assessment()
        decision = assessment.necessity
        stage1_ok = (
            decision is not None
            and decision.outcome == NecessityOutcome.Required
            and "annex3-7d" in [f.rule_id for f in decision.fired_rules]
        )
        exclusions = [
            c for r in assessment.risks for c in r.consequences
            if c.taxonomy_id == "exclusion_from_service" and c.affected_profile == "passenger"
        ]
        stage3_ok = len(exclusions) >= 1
        art21 = [i for i in assessment.impacts if i.right.charter_article == 21]
        stage4_ok = (
            len(art21) == 1
            and set(art21[0].categories) == {ImpactCategory.Limited}
            and art21[0].escalates_to == ImpactCategory.Violated
            and any(
                "manual oversight" in m.description for m in art21[0].remedial_measures
            )
        )
        first = export_report(compile_fria_report(assessment))
        second = export_report(compile_fria_report(assessment))
        stage5_ok = first == second
        elapsed = time.monotonic() - started
        ok = stage1_ok and stage3_ok and stage4_ok and stage5_ok and elapsed < 5.0
        report(
            "passport-control end-to-end: required via border rule, exclusion consequence, "
            "art.21 limited impact with escalation and oversight remedy, deterministic report",
            ok, f"{elapsed:.2f}s",
        )

    def test_stage_gating_exhaustive(self):
        jurisdiction = Jurisdiction(code="IE")
        violations = 0
        attempts = 0
        for permutation in itertools.permutations((1, 2, 3, 4, 5)):
            assessment = new_assessment("gate-test", jurisdiction)
            completed: set[int] = set()
            for stage in permutation:
                attempts += 1
                legal = all(m in completed for m in range(1, stage))
                try:
                    assessment = assessment.complete_stage(stage)
                    if not legal:
                        violations += 1
                    else:
                        completed.add(stage)
                except StageOrderError:
                    if legal:
                        violations += 1
        ok = violations == 0
        report(
            "stage gating exhaustive over all 120 orderings",
            ok, f"{attempts} attempts, {violations} violations",
        )

    def test_round_trip_random_assessments(self):
        started = time.monotonic()
        rng = random.Random(31337)
        violations = 0
        for index in range(1000):
            assessment = make_assessment(rng, index)
            restored = import_assessment(export_assessment(assessment))
            if restored != assessment or restored.audit_log != assessment.audit_log:
                violations += 1
        elapsed = time.monotonic() - started
        ok = violations == 0 and elapsed < 30.0
        report(
            "export/import round-trip over 1000 random assessments incl. audit logs",
            ok, f"{violations} violations, {elapsed:.1f}s",
        )

    def test_concurrent_mutation_single_winner(self, tmp_path):
        store = DocumentStore(tmp_path / "store")
        assessment = new_assessment("race", Jurisdiction(code="IE"))
        store.create(assessment)
        revision = 1
        violations = 0
        for trial in range(100):
            results: list[str] = []
            barrier = threading.Barrier(2)
            head, _ = store.get("race")

            def writer(tag, base=head, expected=revision):
                barrier.wait()
                try:
                    store.compare_and_set("race", expected, base.record(f"t.{tag}", "race"))
                    results.append("ok")
                except RevisionConflict:
                    results.append("conflict")

            threads = [threading.Thread(target=writer, args=(t,)) for t in ("a", "b")]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()
            if results.count("ok") != 1:
                violations += 1
            revision = store.latest_revision("race")
        ok = violations == 0
        report(
            "concurrency: two same-token writers, exactly one wins per trial",
            ok, f"100 trials, {violations} violations",
        )
