import json
import random

import pytest
from fastapi.testclient import TestClient

from tablewright.model_spec import model_to_dict
from tablewright.service import create_app
from tablewright.synth import random_dt, random_kmeans, random_pca


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def dt_model():
    return model_to_dict(random_dt(random.Random(1), [4, 4], depth=3, n_classes=2))


def test_health(client):
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"


def test_meta_lists_families_and_axes(client):
    body = client.get("/v1/meta").json()
    assert body["families"]["dt"] == ["eb", "dm"]
    assert body["families"]["kmeans"] == ["eb", "lb"]
    assert "S" in body["presets"]
    assert "n_bits" in body["axes"]


def test_validate_reports_shape(client, dt_model):
    body = client.post("/v1/validate", json={"model": dt_model}).json()
    assert body == {"family": "dt", "n_features": 2, "n_classes": 2,
                    "out_dim": 0, "variants": ["eb", "dm"]}


def test_validate_rejects_bad_model(client):
    resp = client.post("/v1/validate", json={"model": {"schema_version": 7}})
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "validation"


def test_predict_oracle(client, dt_model):
    resp = client.post("/v1/predict", json={"model": dt_model,
                                            "inputs": [[0, 0], [15, 15]]})
    body = resp.json()
    assert body["kind"] == "label"
    assert len(body["labels"]) == 2


def test_predict_vector_model(client):
    model = model_to_dict(random_pca(random.Random(2), [4, 4], out_dim=1))
    body = client.post("/v1/predict", json={"model": model,
                                            "inputs": [[1, 2]]}).json()
    assert body["kind"] == "vector"
    assert len(body["vectors"][0]) == 1


def test_convert_simulate_round_trip(client, dt_model):
    conv = client.post("/v1/convert", json={"model": dt_model,
                                            "config": {"variant": "eb"}})
    assert conv.status_code == 200
    body = conv.json()
    assert body["report"]["totals"]["stages"] == 2
    assert "V1Switch" in body["p4"]
    inputs = [[a, b] for a in range(16) for b in range(16)]
    sim = client.post("/v1/simulate", json={"program": body["program"],
                                            "inputs": inputs}).json()
    oracle = client.post("/v1/predict", json={"model": dt_model,
                                              "inputs": inputs}).json()
    assert sim["labels"] == oracle["labels"]


def test_convert_with_entries_override(client, dt_model):
    conv = client.post("/v1/convert", json={"model": dt_model,
                                            "config": {"variant": "eb"}}).json()
    sim = client.post("/v1/simulate", json={
        "program": conv["program"], "entries": conv["entries"],
        "inputs": [[3, 3]]})
    assert sim.status_code == 200


def test_convert_variant_error_is_422(client):
    model = model_to_dict(random_kmeans(random.Random(3), [4, 4], k=2))
    resp = client.post("/v1/convert", json={"model": model,
                                            "config": {"variant": "dm"}})
    assert resp.status_code == 422


def test_budget_error_is_409(client):
    rng = random.Random(4)
    from tablewright.synth import random_rf
    model = model_to_dict(random_rf(rng, [4, 4], depth=2, n_trees=13, n_classes=3))
    resp = client.post("/v1/convert", json={"model": model,
                                            "config": {"variant": "eb"}})
    assert resp.status_code == 409
    assert resp.json()["detail"]["kind"] == "budget"


def test_compare_exact_mapping_scores_one(client, dt_model):
    conv = client.post("/v1/convert", json={"model": dt_model,
                                            "config": {"variant": "eb"}}).json()
    inputs = [[a, b] for a in range(16) for b in range(16)]
    resp = client.post("/v1/compare", json={
        "model": dt_model, "program": conv["program"], "inputs": inputs}).json()
    assert resp["relative_accuracy"] == 1.0
    assert resp["samples"] == 256


def test_compare_vector_model_reports_pearson(client):
    model = model_to_dict(random_pca(random.Random(5), [6, 6], out_dim=2))
    conv = client.post("/v1/convert", json={"model": model,
                                            "config": {"bits": 16}}).json()
    inputs = [[a, b] for a in range(0, 64, 3) for b in range(0, 64, 3)]
    resp = client.post("/v1/compare", json={
        "model": model, "program": conv["program"], "inputs": inputs}).json()
    assert resp["kind"] == "vector"
    assert resp["pearson_mean"] >= 0.999


def test_compare_surfaces_default_fallbacks_in_unique_mode(client):
    model = model_to_dict(random_kmeans(random.Random(6), [8], k=2))
    model["observed_values"] = [[10, 20, 30]]
    conv = client.post("/v1/convert", json={
        "model": model, "config": {"mode": "unique", "bits": 12}}).json()
    inputs = [[10], [20], [99], [250]]
    resp = client.post("/v1/compare", json={
        "model": model, "program": conv["program"], "inputs": inputs}).json()
    assert resp["default_hit_rate"]["feat_f0"] == 0.5  # 2 of 4 inputs unlisted


def test_sweep_endpoint(client):
    resp = client.post("/v1/sweep", json={
        "family": "rf", "axis": "n_trees", "values": [1, 2, 3],
        "samples": 100})
    body = resp.json()
    assert [r["value"] for r in body["rows"]] == [1, 2, 3]
    assert body["csv"].startswith("axis,value,entries,stages,relative_accuracy")


def test_sweep_invalid_axis_rejected(client):
    resp = client.post("/v1/sweep", json={
        "family": "dt", "axis": "n_bits", "values": [4]})
    assert resp.status_code == 422
