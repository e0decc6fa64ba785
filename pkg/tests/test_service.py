import numpy as np
import pytest
from fastapi.testclient import TestClient

from depthscreen.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def ensemble_payload(n=12, seed=0):
    rng = np.random.default_rng(seed)
    t = 24
    base_load = 100.0 + 20.0 * np.sin(np.linspace(0, 2 * np.pi, t))
    entities = {
        "grid": {
            "load": (base_load + rng.normal(0, 5, (n, t))).clip(0).tolist(),
            "solar": rng.uniform(0, 10, (n, t)).tolist(),
            "wind": rng.uniform(0, 10, (n, t)).tolist(),
        }
    }
    return {"day": "2018-08-08", "entities": entities}


class TestMeta:
    def test_healthz(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_presets_listed(self, client):
        r = client.get("/v1/presets")
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"cost", "rs", "ls", "ls-zonal", "vc", "vc-seasonal"}
        assert body["rs"]["n1"] == 150

    def test_metrics_listed(self, client):
        assert client.get("/v1/metrics").json()["metrics"] == [
            "ID", "MBD", "EXD", "ERLD", "LID", "HMD", "DQ", "RTD"]


class TestDepthEndpoint:
    def test_golden_case(self, client):
        payload = {
            "ensemble": {
                "day": "2018-01-02",
                "entities": {"grid": {"load": [[0.0] * 4, [1.0] * 4, [2.0] * 4]}},
            },
            "entity": "grid",
            "facet": "load",
            "metric": "MBD",
        }
        r = client.post("/v1/depth", json=payload)
        assert r.status_code == 200
        body = r.json()
        assert body["orientation"] == "depth"
        assert body["scores"] == pytest.approx([0.0, 1 / 3, 0.0])
        assert body["outlying_order"][0] in (0, 2)

    def test_missing_facet_is_409(self, client):
        payload = {
            "ensemble": {"day": "2018-01-02",
                         "entities": {"grid": {"load": [[1.0], [2.0]]}}},
            "facet": "net_load",
            "metric": "ID",
        }
        assert client.post("/v1/depth", json=payload).status_code == 409

    def test_bad_matrix_is_400(self, client):
        payload = {
            "ensemble": {"day": "2018-01-02",
                         "entities": {"grid": {"load": [[1.0], [2.0, 3.0]]}}},
            "facet": "load",
            "metric": "ID",
        }
        assert client.post("/v1/depth", json=payload).status_code == 400

    def test_shape_error_is_422(self, client):
        r = client.post("/v1/depth", json={"metric": "ID"})
        assert r.status_code == 422


class TestScreenEndpoint:
    def test_preset_with_overrides(self, client):
        req = {
            "ensemble": ensemble_payload(),
            "config": {"preset": "rs", "n1": 8, "n2": {"kind": "fixed", "n2": 4}},
        }
        r = client.post("/v1/screen", json=req)
        assert r.status_code == 200
        body = r.json()
        assert len(body["indices"]) == 4
        assert body["stage_log"]["n1"] == 8
        assert body["config"]["preset"] == "rs"

    def test_infeasible_is_409(self, client):
        req = {"ensemble": ensemble_payload(), "config": {"preset": "rs"}}
        assert client.post("/v1/screen", json=req).status_code == 409


class TestEvaluateEndpoint:
    def test_scores_selection(self, client):
        ens = ensemble_payload()
        n = 12
        outcomes = {
            "day": ens["day"],
            "metrics": {"cost": np.tile(np.arange(n, dtype=float)[:, None], (1, 24)).tolist()},
        }
        req = {
            "ensemble": ens,
            "outcomes": outcomes,
            "config": {"preset": "cost", "n2": {"kind": "fixed", "n2": 6}},
            "label_rule": {"kind": "top_m", "m": 4},
        }
        r = client.post("/v1/evaluate", json=req)
        assert r.status_code == 200
        body = r.json()
        assert body["n_extreme"] == 4
        assert body["n_selected"] == 6
        assert 0.0 <= body["count_accuracy"] <= 1.0


class TestSynthesizeEndpoint:
    def test_deterministic(self, client):
        req = {
            "spec": {
                "n_scenarios": 6,
                "n_hours": 24,
                "entities": {"grid": {
                    "load": {"profile": {"base": 100, "amplitude": 10}, "sigma": 3},
                    "solar": {"profile": {"solar_peak": 20}, "sigma": 1},
                    "wind": {"profile": {"base": 10, "amplitude": 2}, "sigma": 2},
                }},
                "link": {"metric": "cost", "kind": "affine"},
            },
            "seed": 42,
            "include_outcomes": True,
        }
        a = client.post("/v1/synthesize", json=req)
        b = client.post("/v1/synthesize", json=req)
        assert a.status_code == 200
        assert a.json() == b.json()
        body = a.json()
        assert len(body["ensemble"]["entities"]["grid"]["load"]) == 6
        assert body["outcomes"] is not None

    def test_bad_spec_is_400(self, client):
        req = {"spec": {"n_scenarios": 0, "entities": {}}}
        assert client.post("/v1/synthesize", json=req).status_code == 400
