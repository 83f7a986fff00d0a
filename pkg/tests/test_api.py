"""Integration tests for API endpoints using FastAPI TestClient."""

from unittest.mock import patch

import pytest
from fastapi.testclient import TestClient

from germkit import __version__
from germkit.exceptions import InvariantViolated
from germkit.main import app
from germkit.services.analysis import AnalysisService


@pytest.fixture()
def client():
    with TestClient(app) as c:
        yield c


class TestHealth:
    def test_health_returns_200(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "healthy"
        assert body["version"] == __version__
        assert body["truncation"] >= 4


class TestAnalysisEndpoint:
    def test_classify(self, client):
        resp = client.post("/analysis/classify", json={"germ": "(2z, z*w + z^3)", "order": 8})
        assert resp.status_code == 200
        body = resp.json()
        assert body["type"] == "semi-superattracting"
        assert body["lambda"] == "2"
        assert body["rigid_class"] == 2

    def test_rates(self, client):
        resp = client.post("/analysis/rates", json={"germ": "(w^2, z^3)", "order": 40, "n_max": 4})
        assert resp.status_code == 200
        body = resp.json()
        assert body["rates"] == [2, 6, 12, 36]
        assert body["c_infinity"] == "sqrt(6)"

    def test_walk(self, client):
        resp = client.post(
            "/analysis/walk",
            json={"germ": "(w^2, z^3)", "order": 20, "steps": "z:0,w:0,w:0"},
        )
        assert resp.status_code == 200
        assert resp.json()["lift"] == "(w^6, z)"

    def test_exceptional_action(self, client):
        resp = client.post("/analysis/exc-action", json={"germ": "(2z, z*w)", "order": 8})
        assert resp.status_code == 200
        assert resp.json()["point"] == "[1:0]"

    def test_unknown_command(self, client):
        resp = client.post("/analysis/solve", json={"germ": "(2z, z*w)"})
        assert resp.status_code == 422

    def test_order_below_minimum(self, client):
        resp = client.post("/analysis/classify", json={"germ": "(2z, z*w)", "order": 2})
        assert resp.status_code == 422


class TestErrors:
    def test_parse_error_carries_kind(self, client):
        resp = client.post("/analysis/classify", json={"germ": "(2z, z*w", "order": 8})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "parse"

    def test_precondition_error(self, client):
        resp = client.post("/analysis/prepare", json={"germ": "(z^2, w^2)", "order": 8})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "precondition"

    def test_unexpected_error_is_a_500(self):
        with patch.object(AnalysisService, "run", side_effect=RuntimeError("boom")):
            with TestClient(app, raise_server_exceptions=False) as c:
                resp = c.post("/analysis/classify", json={"germ": "(2z, z*w)"})
        assert resp.status_code == 500
        assert "internal error" in resp.json()["detail"]

    def test_failed_internal_check_is_a_domain_error(self):
        with patch.object(AnalysisService, "run", side_effect=InvariantViolated("lift lost its linear part")):
            with TestClient(app) as c:
                resp = c.post("/analysis/classify", json={"germ": "(2z, z*w)"})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "invariant_violated"
