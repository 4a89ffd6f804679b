"""
Tests pour l'API HTTP du solveur.
"""

import threading
from unittest.mock import MagicMock, patch

import pytest
from fastapi.testclient import TestClient

import main
from src.pipeline.config_loader import config_digest, config_from_text
from src.pipeline.orchestrator import CommandResult

MINIMAL = "grid.n1 = 8\ngrid.n2 = 8\ngrid.n3 = 9\nbasis.m = 2\n"


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path))
    main.COMPLETED_RUNS_CACHE.clear()
    main.RUNNING_CACHE.clear()
    yield TestClient(main.app)
    main.COMPLETED_RUNS_CACHE.clear()
    main.RUNNING_CACHE.clear()


@pytest.fixture
def orchestrator():
    mock = MagicMock()
    mock.run.return_value = CommandResult(
        success=True, exit_code=0, message="point fixe atteint en 3 itération(s)", files=["energy.csv"], data={"M0": 2.0}
    )
    mock.verify.return_value = CommandResult(success=True, exit_code=0, message="ok", data={"checks": []})
    with patch("main.get_orchestrator", return_value=mock):
        yield mock


class TestHealth:
    """Endpoints de disponibilité."""

    def test_root(self, client):
        response = client.get("/")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_health(self, client):
        assert client.get("/health").json() == {"status": "healthy", "service": "vacuum-ns-solver"}

    def test_cache_status(self, client):
        body = client.get("/cache/status").json()
        assert body["completed_runs_count"] == 0
        assert body["running"] == []


class TestVerifyEndpoint:
    """POST /verify."""

    def test_text_config(self, client, orchestrator):
        response = client.post("/verify", content=MINIMAL, headers={"content-type": "text/plain"})
        assert response.status_code == 200
        assert response.json()["exit_code"] == 0
        cfg = orchestrator.verify.call_args.args[0]
        assert cfg.grid.n3 == 9

    def test_json_config(self, client, orchestrator):
        response = client.post("/verify", json={"grid.n1": 8, "grid.n2": 8, "grid.n3": 9})
        assert response.status_code == 200
        assert orchestrator.verify.call_args.args[0].grid.n1 == 8

    @pytest.mark.parametrize("body", ["physics.gamma = 0.5\n", "grid.n3 = 4\n", "pas de signe égal\n"])
    def test_invalid_config(self, client, orchestrator, body):
        response = client.post("/verify", content=body, headers={"content-type": "text/plain"})
        assert response.status_code == 422
        orchestrator.verify.assert_not_called()

    def test_json_array_rejected(self, client, orchestrator):
        assert client.post("/verify", json=[1, 2]).status_code == 422


class TestRunEndpoints:
    """POST /runs et GET /runs/{id}."""

    def test_submit_then_poll(self, client, orchestrator):
        run_id = config_digest(config_from_text(MINIMAL))
        response = client.post("/runs", content=MINIMAL, headers={"content-type": "text/plain"})
        assert response.status_code == 200
        assert response.json()["run_id"] == run_id

        orchestrator.run.assert_called_once()
        status = client.get(f"/runs/{run_id}").json()
        assert status["exit_code"] == 0
        assert status["data"]["files"] == ["energy.csv"]
        assert status["data"]["M0"] == 2.0

    def test_cached_result(self, client, orchestrator):
        client.post("/runs", content=MINIMAL, headers={"content-type": "text/plain"})
        again = client.post("/runs", content=MINIMAL, headers={"content-type": "text/plain"})
        assert again.json()["exit_code"] == 0
        assert orchestrator.run.call_count == 1

    def test_running_run(self, client, orchestrator):
        run_id = config_digest(config_from_text(MINIMAL))
        main.mark_run_as_running(run_id)
        response = client.post("/runs", content=MINIMAL, headers={"content-type": "text/plain"})
        assert response.json()["message"] == "Calcul déjà en cours"
        assert client.get(f"/runs/{run_id}").json()["message"] == "Calcul en cours"
        orchestrator.run.assert_not_called()

    def test_unknown_run(self, client):
        assert client.get("/runs/inconnu").status_code == 404

    def test_background_runs_are_serialized(self, client, orchestrator):
        """Un calcul de fond attend que le calcul en cours libère le verrou."""
        cfg = config_from_text(MINIMAL)
        run_id = config_digest(cfg)
        main.mark_run_as_running(run_id)
        with main.RUN_LOCK:
            worker = threading.Thread(target=main.run_background, args=(run_id, cfg))
            worker.start()
            worker.join(timeout=0.2)
            assert worker.is_alive()
            orchestrator.run.assert_not_called()
        worker.join(timeout=5)
        assert not worker.is_alive()
        orchestrator.run.assert_called_once()
        assert run_id in main.COMPLETED_RUNS_CACHE
        assert run_id not in main.RUNNING_CACHE
