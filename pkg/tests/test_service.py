import json

import pytest
from fastapi.testclient import TestClient

from conftest import FIXTURES
from mof_forge.errors import NoPendingClarification, NotAwaiting
from mof_forge.service import make_service
from mof_forge.webapp import create_app


@pytest.fixture()
def client(service):
    return TestClient(create_app(service))


def test_clarification_round_trip_over_http(client):
    response = client.post("/queries", json={
        "session_id": "web-1", "text": "What is the surface area of a MOF?"})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "clarification"
    assert body["missing"] == ["material_identifier"]

    response = client.post("/sessions/web-1/clarify", json={
        "text": "I want to calculate the surface area of UiO-66"})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "run"
    assert body["status"] == "completed"
    assert "1946.02" in body["report"]["narrative"]


def test_confirmation_round_trip_over_http(client):
    response = client.post("/queries", json={
        "session_id": "web-2",
        "text": "Calculate the diffusion coefficient of CO2 in UiO-66",
        "attachments": {"ref.txt": "pair_style lj/cut 12.0"}})
    body = response.json()
    assert body["status"] == "awaiting_confirmation"
    run_id = body["run_id"]
    pending = body["snapshot"]["awaiting_confirmation"]
    rule_ids = sorted({r for rules in pending.values() for r in rules})
    assert rule_ids == ["md-electrostatics"]

    response = client.post(f"/runs/{run_id}/confirmations", json={
        "rule_ids": rule_ids, "accept": True})
    body = response.json()
    assert body["status"] == "completed"
    assert any(c["rule_id"] == "md-electrostatics"
               for c in body["report"]["corrections"])


def test_reject_aborts_with_recorded_reason(client):
    response = client.post("/queries", json={
        "session_id": "web-3",
        "text": "Calculate the diffusion coefficient of CO2 in UiO-66",
        "attachments": {"ref.txt": "pair_style lj/cut 12.0"}})
    run_id = response.json()["run_id"]
    response = client.post(f"/runs/{run_id}/confirmations", json={
        "rule_ids": ["md-electrostatics"], "accept": False})
    body = response.json()
    assert body["status"] == "aborted"
    assert body["snapshot"]["statuses"]["u01.md"] == "Failed"


def test_events_stream_with_resume_cursor(client):
    response = client.post("/queries", json={
        "session_id": "web-4", "text": "surface area of UiO-66"})
    run_id = response.json()["run_id"]
    full = client.get(f"/runs/{run_id}/events").json()["events"]
    assert [e["seq"] for e in full] == list(range(1, len(full) + 1))
    middle = full[len(full) // 2]["seq"]
    tail = client.get(f"/runs/{run_id}/events",
                      params={"since": middle}).json()["events"]
    assert [e["seq"] for e in tail] == \
        [e["seq"] for e in full if e["seq"] > middle]
    # two consumers observe identical sequences
    again = client.get(f"/runs/{run_id}/events").json()["events"]
    assert again == full


def test_funnel_endpoint_serves_packaged_fixture(client):
    response = client.get("/screenings/packaged-ch4/funnel")
    assert response.status_code == 200
    body = response.json()
    counts = [(s["input_count"], s["output_count"]) for s in body["stages"]]
    assert counts == [(3786, 3776), (3776, 3771), (3771, 1878), (1878, 1000)]


def test_error_codes_over_http(client):
    assert client.post("/sessions/ghost/clarify",
                       json={"text": "x"}).status_code == 409
    assert client.get("/runs/no-such-run").status_code == 404
    assert client.post("/runs/no-such-run/confirmations",
                       json={"rule_ids": ["x"], "accept": True}).status_code == 404
    # malformed body -> 400-class protocol error
    assert client.post("/queries", json={"nope": 1}).status_code == 422


def test_screening_query_registers_funnel(client, service):
    response = client.post("/queries", json={
        "session_id": "web-5",
        "text": "Screen the fixture-db database for the top candidates "
                "by CH4 uptake"})
    body = response.json()
    assert body["status"] == "completed"
    run_id = body["run_id"]
    funnel = client.get(f"/screenings/{run_id}/funnel").json()
    assert funnel["shortlist_size"] == 1000
    ranked = [a for a in body["report"]["answer"] if a["metric"] == "uptake"]
    assert len(ranked) == 10
    values = [a["value"] for a in ranked]
    assert values == sorted(values, reverse=True)


def test_crash_restart_reproduces_reports(tmp_path):
    runs_root = tmp_path / "runs"
    first = make_service(fixtures_root=FIXTURES, runs_root=runs_root,
                         mode="replay")
    payload = first.submit_query("cr-1", "What is the band gap of GIFKEL?")
    run_id = payload["run_id"]
    original = payload["report"]

    reloaded_service = make_service(fixtures_root=FIXTURES,
                                    runs_root=runs_root, mode="replay")
    assert run_id in reloaded_service.store.run_ids()
    reloaded = reloaded_service.run_payload(run_id)["report"]
    assert reloaded["answer"] == original["answer"]
    assert reloaded["corrections"] == original["corrections"]
    assert reloaded["applied_defaults"] == original["applied_defaults"]


def test_session_pending_is_singular(service):
    service.submit_query("s-x", "What is the surface area of a MOF?")
    # a new query supersedes the open clarification
    payload = service.submit_query("s-x", "What is the band gap of a MOF?")
    assert payload["kind"] == "clarification"
    answer = service.respond_clarification("s-x", "GIFKEL")
    assert answer["kind"] == "run"
    record = service.executor.runs[answer["run_id"]]
    assert any(j.task == "band_gap" for j in record.plan.all_jobs())


def test_no_pending_clarification_error(service):
    with pytest.raises(NoPendingClarification):
        service.respond_clarification("fresh-session", "UiO-66")


def test_not_awaiting_error(service):
    payload = service.submit_query("s-y", "surface area of UiO-66")
    with pytest.raises(NotAwaiting):
        service.confirm_correction(payload["run_id"], ["md-electrostatics"],
                                   True)


def test_fixtures_env_var_overrides_root(monkeypatch, tmp_path):
    from mof_forge.service import default_fixtures_root
    override = tmp_path / "elsewhere"
    (override / "structures").mkdir(parents=True)
    monkeypatch.setenv("MOF_FORGE_FIXTURES", str(override))
    assert default_fixtures_root() == override
