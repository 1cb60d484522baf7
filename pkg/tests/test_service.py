import numpy as np
import pytest
from fastapi.testclient import TestClient

from waveinvis.service import app


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    return TestClient(app, raise_server_exceptions=False)


@pytest.fixture()
def tiny_config(tmp_path):
    return {
        "k": "0.8*pi",
        "ell": 3.0,
        "obstacle": [{"shape": "rectangle", "x0": -1.0, "x1": 1.0,
                      "y0": 0.25, "y1": 0.75}],
        "discretization": {"nx": 120, "ny": 16},
        "output_dir": str(tmp_path),
    }


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_modes_endpoint(client):
    r = client.post("/modes", json={"k": 4.0})
    assert r.status_code == 200
    body = r.json()
    assert body["n_propagating"] == 2
    assert body["beta"][0]["re"] == pytest.approx(4.0)
    assert body["beta"][2]["propagating"] is False


def test_modes_cutoff_maps_to_422(client):
    r = client.post("/modes", json={"k": float(np.pi)})
    assert r.status_code == 422
    assert r.json()["error"] == "CutoffError"


def test_scatter_endpoint(client, tiny_config, tmp_path):
    tiny_config["rho0"] = [{"shape": "rectangle", "x0": -1.0, "x1": 1.0,
                            "y0": 0.25, "y1": 0.75, "value": 0.2}]
    r = client.post("/scatter", json={"config": tiny_config})
    assert r.status_code == 200
    body = r.json()
    assert body["n_modes"] == 1
    assert body["s"]["unitarity_residual"] < 1e-10
    assert body["structure"]["extraction_gap"] < 1e-3
    assert len(body["artifacts"]) == 4
    for path in body["artifacts"]:
        assert path.startswith(str(tmp_path))


def test_differential_endpoint_requires_mu(client, tiny_config):
    r = client.post("/differential", json={"config": tiny_config})
    assert r.status_code == 422
    assert r.json()["error"] == "ConfigError"


def test_differential_endpoint(client, tiny_config):
    tiny_config["mu"] = [{"shape": "rectangle", "x0": -0.5, "x1": 0.5,
                          "y0": 0.25, "y1": 0.75, "value": 1.0}]
    r = client.post("/differential", json={"config": tiny_config,
                                           "fd_step": 1e-3})
    assert r.status_code == 200
    body = r.json()
    assert body["fd_relative_error"] < 1e-3
    ds = np.array(body["ds"]["re"]) + 1j * np.array(body["ds"]["im"])
    assert ds.shape == (2, 2)
    assert np.abs(ds).max() > 1e-3


def test_cloak_endpoint(client, tiny_config):
    tiny_config["continuation"] = {"functional": "reflection_only", "aleph": 1,
                                   "seed": 0}
    r = client.post("/cloak", json={"config": tiny_config})
    assert r.status_code == 200
    body = r.json()
    assert body["completed"] is True
    assert body["final_check"]["max_reflection"] < 1e-6
    assert len(body["steps"]) == 1
    assert any(p.endswith("run_log.json") for p in body["artifacts"])


def test_verify_endpoint(client, tiny_config):
    r = client.post("/verify", json={"config": tiny_config})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    assert body["checks"]["transparency"]["passed"] is True
    assert body["checks"]["slab_gap"]["passed"] is True


def test_oracle_endpoint(client):
    r = client.post("/oracle", json={"k": "0.8*pi", "rho": 0.1,
                                     "a": -1.0, "b": 1.0})
    assert r.status_code == 200
    body = r.json()
    assert body["flux_defect"] < 1e-12


def test_oracle_evanescent_maps_to_422(client):
    r = client.post("/oracle", json={"k": 2.0, "rho": -2.0})
    assert r.status_code == 422
    assert r.json()["error"] == "EvanescentSlabError"


def test_bad_obstacle_maps_to_config_error(client, tiny_config):
    tiny_config["obstacle"] = [{"shape": "rectangle", "x0": -5.0, "x1": 1.0,
                                "y0": 0.2, "y1": 0.8}]
    r = client.post("/scatter", json={"config": tiny_config})
    assert r.status_code == 422
    assert r.json()["error"] == "ConfigError"
