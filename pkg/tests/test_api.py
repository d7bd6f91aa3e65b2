"""HTTP surface: full staged flow, revision tokens, error bodies."""

import json

import pytest
from fastapi.testclient import TestClient

from friakit.api import create_app
from friakit.bridge import export_dpia

from conftest import PASSPORT_ANSWERS, make_passport_risk


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "store")
    return TestClient(app)


def create_assessment(client, jurisdiction="IE"):
    response = client.post("/api/v1/assessments", json={"jurisdiction": jurisdiction})
    assert response.status_code == 201, response.text
    return response.json()


PASSPORT_PROFILE = {
    "roles": ["deployer"],
    "annex3_tags": ["border-identification"],
    "processes_personal_data": True,
    "special_category": True,
    "automated_decisions": True,
    "legal_or_significant_effects": True,
    "public_area_monitoring": True,
    "scale_data": 4, "scale_operations": 4, "scale_subjects": 5,
}


def run_stage1(client, created):
    response = client.put(
        f"/api/v1/assessments/{created['id']}/profile",
        params={"revision": created["revision"]},
        json=PASSPORT_PROFILE,
    )
    assert response.status_code == 200, response.text
    return response.json()


def run_until_stage3_complete(client, body):
    aid = body["id"]
    response = client.post(
        f"/api/v1/assessments/{aid}/stages/2/skip", params={"revision": body["revision"]}
    )
    assert response.status_code == 200
    revision = response.json()["revision"]
    for entry in PASSPORT_ANSWERS:
        response = client.post(
            f"/api/v1/assessments/{aid}/answers",
            params={"revision": revision},
            json={"question_id": entry["question_id"], "value": entry["value"]},
        )
        assert response.status_code == 200, (entry["question_id"], response.text)
        revision = response.json()["revision"]
    response = client.post(
        f"/api/v1/assessments/{aid}/stages/3/complete", params={"revision": revision}
    )
    assert response.status_code == 200, response.text
    return response.json()


def run_stage4(client, body):
    aid = body["id"]
    risk_payload = make_passport_risk().model_dump(mode="json")
    response = client.post(
        f"/api/v1/assessments/{aid}/risks",
        params={"revision": body["revision"]}, json=risk_payload,
    )
    assert response.status_code == 200, response.text
    revision = response.json()["revision"]
    response = client.post(
        f"/api/v1/assessments/{aid}/impacts/derive", params={"revision": revision}
    )
    assert response.status_code == 200, response.text
    revision = response.json()["revision"]
    response = client.post(
        f"/api/v1/assessments/{aid}/stages/4/complete", params={"revision": revision}
    )
    assert response.status_code == 200, response.text
    return response.json()


class TestStage1:
    def test_create_get_profile_necessity(self, client):
        created = create_assessment(client)
        fetched = client.get(f"/api/v1/assessments/{created['id']}").json()
        assert fetched["stage_states"]["1"] == "NotStarted"
        result = run_stage1(client, created)
        assert result["necessity"]["outcome"] == "Required"
        assert result["stage_states"]["1"] == "Complete"
        fired = [f["rule_id"] for f in result["necessity"]["fired_rules"]]
        assert "annex3-7d" in fired
        assert result["high_risk"]["areas"] == ["migration-and-border-control"]
        assert result["dpia_necessity"]["outcome"] == "Required"

    def test_unknown_jurisdiction_rejected(self, client):
        response = client.post("/api/v1/assessments", json={"jurisdiction": "UK"})
        assert response.status_code in (400, 422)


class TestRevisionTokens:
    def test_stale_token_conflicts_and_changes_nothing(self, client):
        created = create_assessment(client)
        run_stage1(client, created)  # bumps revision to 2
        response = client.post(
            f"/api/v1/assessments/{created['id']}/stages/2/skip",
            params={"revision": created["revision"]},
        )
        assert response.status_code == 409
        body = response.json()
        assert body["code"] == "revision_conflict"
        current = client.get(f"/api/v1/assessments/{created['id']}").json()
        assert current["stage_states"]["2"] == "NotStarted"


class TestStageOrdering:
    def test_compile_before_stage4_is_stage_error(self, client):
        created = create_assessment(client)
        response = client.post(f"/api/v1/assessments/{created['id']}/report")
        assert response.status_code == 409
        body = response.json()
        assert body["code"] == "stage_incomplete"
        assert body["details"] == [1, 2, 3, 4]

    def test_questions_before_stage1(self, client):
        created = create_assessment(client)
        response = client.get(f"/api/v1/assessments/{created['id']}/questions")
        assert response.status_code == 409
        assert response.json()["code"] == "stage_order"


class TestQuestionnaireFlow:
    def test_branching_via_api(self, client):
        created = create_assessment(client)
        body = run_stage1(client, created)
        aid = created["id"]
        response = client.post(
            f"/api/v1/assessments/{aid}/stages/2/skip", params={"revision": body["revision"]}
        )
        revision = response.json()["revision"]
        pending = client.get(f"/api/v1/assessments/{aid}/questions").json()["pending"]
        assert "q-data-collection-purposes" not in [q["id"] for q in pending]
        special = [{"name": "health record", "special_category": True,
                    "quality": {"accuracy": 3, "completeness": 3}, "role_in_system": "Input"}]
        response = client.post(
            f"/api/v1/assessments/{aid}/answers",
            params={"revision": revision},
            json={"question_id": "q-data-inputs", "value": special},
        )
        assert response.status_code == 200
        pending = response.json()["pending"]
        assert "q-data-collection-purposes" in [q["id"] for q in pending]

    def test_invalid_answer_passes_through_validation_error(self, client):
        created = create_assessment(client)
        body = run_stage1(client, created)
        response = client.post(
            f"/api/v1/assessments/{created['id']}/answers",
            params={"revision": body["revision"]},
            json={"question_id": "q-can-update", "value": "yes"},
        )
        assert response.status_code == 422
        assert response.json()["code"] == "type_mismatch"


class TestDpiaUpload:
    def test_upload_prefills_and_reports_gaps(self, client, passport_dpia):
        created = create_assessment(client)
        body = run_stage1(client, created)
        aid = created["id"]
        response = client.post(
            f"/api/v1/assessments/{aid}/dpia",
            params={"revision": body["revision"]},
            content=export_dpia(passport_dpia),
        )
        assert response.status_code == 200, response.text
        payload = response.json()
        assert payload["stage_states"]["2"] == "Complete"
        assert "involved_data.inputs" in payload["prefill"]["prefilled"]
        sections = payload["gap_report"]["sections"]
        assert "provenance" in sections
        # Equivalent-prefilled path no longer asked
        pending = client.get(f"/api/v1/assessments/{aid}/questions").json()["pending"]
        assert "q-data-inputs" not in [q["id"] for q in pending]

    def test_malformed_dpia_rejected(self, client):
        created = create_assessment(client)
        body = run_stage1(client, created)
        response = client.post(
            f"/api/v1/assessments/{created['id']}/dpia",
            params={"revision": body["revision"]},
            content=b"{broken",
        )
        assert response.status_code == 400
        assert response.json()["code"] == "parse_error"


class TestRisksAndPreview:
    def test_risk_scored_on_add(self, client):
        created = create_assessment(client)
        body = run_until_stage3_complete(client, run_stage1(client, created))
        result = run_stage4(client, body)
        risks = client.get(f"/api/v1/assessments/{created['id']}/risks").json()
        assert risks["risks"][0]["residual"]["level"] == "High"
        assert result["stage_states"]["4"] == "Complete"

    def test_candidates_listed_after_stage3(self, client):
        created = create_assessment(client)
        body = run_until_stage3_complete(client, run_stage1(client, created))
        risks = client.get(f"/api/v1/assessments/{created['id']}/risks").json()
        kinds = {c["risk_kind"] for c in risks["candidates"]}
        assert "component_failure" in kinds

    def test_what_if_preview_matches_matrix(self, client):
        matrix = client.get("/api/v1/catalogs/matrix").json()["levels"]
        response = client.post("/api/v1/risk-preview", json={
            "likelihood": 4, "severity": 4,
            "mitigations": [{"taxonomy_id": "prevent_or_reduce", "strategy": "Reduce",
                             "likelihood_delta": 2}],
        })
        assert response.status_code == 200
        body = response.json()
        assert body["initial_level"] == matrix[3][3]
        assert body["residual"]["level"] == matrix[1][3]


class TestFullPipeline:
    def test_create_to_notification(self, client):
        created = create_assessment(client)
        body = run_stage4(client, run_until_stage3_complete(client, run_stage1(client, created)))
        aid = created["id"]
        report_response = client.post(f"/api/v1/assessments/{aid}/report")
        assert report_response.status_code == 200
        report_tree = json.loads(report_response.content)
        assert report_tree["fria_report"]["impact_entries"]
        twice = client.post(f"/api/v1/assessments/{aid}/report")
        assert twice.content == report_response.content
        notify = client.post(
            f"/api/v1/assessments/{aid}/notification",
            params={"revision": body["revision"]},
            json={"mode": "MarketSurveillanceNotification", "authority": "IE-MSA",
                  "submitter": {"id": "border-agency", "name": "Border agency",
                                 "roles": ["Deployer"]}},
        )
        assert notify.status_code == 200, notify.text
        payload = notify.json()
        assert payload["stage_states"]["5"] == "Complete"
        assert payload["notification"]["dry_run"] is True
        assert payload["notification"]["report_checksum"] == report_tree["fria_report"]["checksum"]


class TestCatalogEndpoints:
    def test_catalog_versions(self, client):
        body = client.get("/api/v1/catalogs").json()
        assert body["conditions"]["rules"] == 36
        assert body["taxonomies"]["Consequence"] == 9

    def test_questionnaire_export(self, client):
        body = client.get("/api/v1/catalogs/questionnaire").json()
        assert len(body["questions"]) == 28
        withvis = [q for q in body["questions"] if q.get("visible_if")]
        assert withvis, "conditional questions must ship with their predicates"


class TestAuthToken:
    def test_token_required_when_configured(self, tmp_path):
        app = create_app(tmp_path / "secured", api_token="sesame")
        client = TestClient(app)
        denied = client.get("/api/v1/assessments")
        assert denied.status_code == 401
        allowed = client.get("/api/v1/assessments", headers={"X-Api-Token": "sesame"})
        assert allowed.status_code == 200
