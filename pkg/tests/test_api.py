import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.modules.runs.routes.runs import get_ledger
from app.modules.runs.services.runs import RunLedgerService

FAST = {"noise": {"shots": "exact"}, "pipeline": {"eigensolve": {"restarts": 0, "n_jobs": 1}}}


@pytest.fixture
def client():
    return TestClient(app)


@pytest.fixture
def ledger(session_factory):
    service = RunLedgerService(session_factory)
    app.dependency_overrides[get_ledger] = lambda: service
    yield service
    app.dependency_overrides.clear()


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "running" in response.json()["message"]


def test_simulate_endpoint(client):
    response = client.post("/api/simulate", json=FAST)
    assert response.status_code == 200
    payload = response.json()
    assert payload["format_version"] == 1
    assert payload["kind"] == "time-series"
    assert payload["n"] == 5
    assert {"dt", "L", "n", "shots", "data"} <= set(payload)
    assert payload["L"] == 201
    assert len(payload["data"][0][0]) == 201


def test_simulate_random_spam_maps(client):
    exact = client.post("/api/simulate", json={**FAST, "spam": {"mode": "random"}})
    assert exact.status_code == 200
    assert exact.json()["shots"] == "exact"

    sampled = client.post("/api/simulate", json={**FAST, "noise": {"shots": 100}, "spam": {"mode": "random"}})
    assert sampled.status_code == 200
    assert np.max(np.abs(np.asarray(sampled.json()["data"]))) <= 0.5

    strict = {**FAST, "noise": {"shots": 100, "clip": False}, "spam": {"mode": "random"}}
    assert client.post("/api/simulate", json=strict).status_code == 422


def test_simulate_rejects_unknown_keys(client):
    assert client.post("/api/simulate", json={"colour": "blue"}).status_code == 422


def test_identify_endpoint(client):
    data = client.post("/api/simulate", json={**FAST, "spam": {"mode": "random"}}).json()
    response = client.post("/api/identify", json={"data": data, "config": FAST})
    assert response.status_code == 200
    result = response.json()
    assert result["status"] == "ok"
    assert result["comparison"]["analog_accuracy"] < 1e-3


def test_identify_malformed_data(client):
    response = client.post("/api/identify", json={"data": {"dt": 1.0}, "config": FAST})
    assert response.status_code == 422


def test_identify_reports_failing_stage(client):
    data = client.post("/api/simulate", json={**FAST, "grid": {"num_samples": 4}}).json()
    response = client.post("/api/identify", json={"data": data, "config": FAST})
    assert response.status_code == 500
    assert response.json()["detail"]["stage"] == "spectral"


def test_runs_endpoints(client, ledger):
    first = ledger.record("simulate", "a" * 64, 1, "ok", "out/data.json")
    ledger.record("identify", "b" * 64, 1, "failed", "out/result.json")

    listed = client.get("/api/runs").json()
    assert [r["command"] for r in listed] == ["simulate", "identify"]
    assert len(client.get("/api/runs", params={"command": "identify"}).json()) == 1

    one = client.get(f"/api/runs/{first}")
    assert one.status_code == 200
    assert one.json()["output_path"] == "out/data.json"
    assert client.get("/api/runs/999").status_code == 404
