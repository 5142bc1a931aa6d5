"""HTTP what-if interface: payload shapes, consistency, error codes."""

import hashlib
import math

import numpy as np
import numpy.testing as npt
import pytest
from fastapi.testclient import TestClient

from clpc.conformal import calibrate, predict_set
from clpc.data import save_model
from clpc.model import PrototypeModel, predict
from clpc.service import create_app
from clpc.train import LogisticModel, lr_posterior

PROTOS = [[1, 1, 0, 0], [0, 0, 1, 1]]


@pytest.fixture(scope="module")
def calibrated_clpc(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "m.json"
    model = PrototypeModel.from_prototypes(PROTOS, ["ash", "birch"])
    cal = calibrate([0.5, 1.0, 1.5, 2.0], alpha=0.5)
    save_model(model, path, calibrator=cal)
    return path, model, cal


@pytest.fixture(scope="module")
def plain_lr(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "lr.json"
    rng = np.random.default_rng(12)
    model = LogisticModel(class_names=["ash", "birch", "cedar"],
                          weights=rng.normal(size=(3, 4)),
                          bias=rng.normal(size=3))
    save_model(model, path)
    return path, model


@pytest.fixture(scope="module")
def client(calibrated_clpc):
    path, _, _ = calibrated_clpc
    return TestClient(create_app(path))


@pytest.fixture(scope="module")
def lr_client(plain_lr):
    path, _ = plain_lr
    return TestClient(create_app(path))


# ---------------------------------------------------------------------------
# Metadata and health


def test_model_metadata_clpc(client):
    info = client.get("/v1/model").json()
    assert info["kind"] == "clpc"
    assert info["K"] == 4 and info["L"] == 2
    assert info["class_names"] == ["ash", "birch"]
    assert info["prototypes"] == PROTOS
    assert info["calibrated"] is True
    assert info["calibration"]["alpha"] == 0.5
    assert info["calibration"]["quantile"] == 1.5


def test_model_metadata_lr(lr_client):
    info = lr_client.get("/v1/model").json()
    assert info["kind"] == "lr"
    assert "prototypes" not in info
    assert info["weights_shape"] == [3, 4]
    assert info["calibrated"] is False


def test_metadata_stable_across_requests(client):
    assert client.get("/v1/model").json() == client.get("/v1/model").json()


def test_health_reports_artifact_digest(client, calibrated_clpc):
    path, _, _ = calibrated_clpc
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert body["artifact_digest"] == hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# What-if


def test_whatif_matches_core_predict_bit_for_bit(client, calibrated_clpc):
    _, model, _ = calibrated_clpc
    scores = [0.7, 0.2, 0.9, 0.4]
    edits = [{"concept_index": 1, "value": 0.95}]
    body = client.post("/v1/whatif", json={"scores": scores, "edits": edits}).json()
    edited = np.array(scores)
    edited[1] = 0.95
    expected = predict(edited, model)
    assert body["prediction"]["label_index"] == expected.label_index
    npt.assert_array_equal(body["prediction"]["distances"], expected.distances)
    assert body["prediction"]["margin"] == expected.margin
    npt.assert_array_equal(body["applied_scores"], edited)


def test_whatif_decomposition_total_equals_distance(client):
    scores = [0.7, 0.2, 0.9, 0.4]
    body = client.post("/v1/whatif", json={"scores": scores, "target": 1}).json()
    pred = body["prediction"]
    for section in ("predicted", "target"):
        dec = body["decomposition"][section]
        assert dec["total"] == pred["distances"][dec["class_index"]]
        assert sum(pc["contribution"] for pc in dec["per_concept"]) == pytest.approx(
            dec["total"], abs=1e-12)
    assert body["decomposition"]["target"]["class_index"] == 1


def test_whatif_gains_sorted_descending_with_index_ties(client):
    scores = [0.5, 0.5, 0.5, 0.5]   # all gains equal 0.5 toward either class
    body = client.post("/v1/whatif", json={"scores": scores, "target": 0}).json()
    ranked = body["gains"]["ranked"]
    assert body["gains"]["strategy"] == "clpc-gain"
    assert [g["concept_index"] for g in ranked] == [0, 1, 2, 3]
    assert all(g["gain"] == 0.5 for g in ranked)


def test_whatif_gains_use_edited_vector(client):
    scores = [0.5, 0.5, 0.5, 0.5]
    edits = [{"concept_index": 2, "value": 1.0}]  # prototype bit of ash is 0
    body = client.post("/v1/whatif",
                       json={"scores": scores, "edits": edits, "target": 0}).json()
    top = body["gains"]["ranked"][0]
    assert top == {"concept_index": 2, "gain": 1.0}


def test_whatif_conformal_block(client, calibrated_clpc):
    _, model, cal = calibrated_clpc
    scores = [0.9, 0.8, 0.1, 0.2]
    body = client.post("/v1/whatif", json={"scores": scores}).json()
    conf = body["conformal"]
    assert conf["alpha"] == 0.5
    assert conf["quantile"] == 1.5
    assert conf["set"] == predict_set(scores, model, cal)
    assert conf["rejected"] is False
    assert conf["set_names"] == ["ash"]


def test_whatif_without_target_has_no_gains(client):
    body = client.post("/v1/whatif", json={"scores": [0.5] * 4}).json()
    assert body["gains"] is None
    assert body["decomposition"]["target"] is None


def test_whatif_stateless_repeat(client):
    req = {"scores": [0.3, 0.6, 0.1, 0.9], "target": 1,
           "edits": [{"concept_index": 0, "value": 1.0}]}
    assert (client.post("/v1/whatif", json=req).json()
            == client.post("/v1/whatif", json=req).json())


def test_whatif_lr_reports_posterior(lr_client, plain_lr):
    _, model = plain_lr
    scores = [0.2, 0.8, 0.5, 0.1]
    body = lr_client.post("/v1/whatif", json={"scores": scores, "target": 2}).json()
    post = lr_posterior(np.array(scores), model)
    assert body["prediction"]["label_index"] == int(np.argmax(post))
    npt.assert_array_equal(body["prediction"]["posterior"], post)
    assert body["decomposition"] is None
    assert body["gains"]["strategy"] == "lr-gain"
    assert body["conformal"] is None


# ---------------------------------------------------------------------------
# Conformal endpoint


def test_conformal_endpoint_rejection_flag(client):
    body = client.post("/v1/conformal", json={"scores": [0.5, 0.5, 0.5, 0.5]}).json()
    # distances are 2.0 to both prototypes, above the 1.5 quantile
    assert body["set"] == []
    assert body["rejected"] is True


def test_conformal_alpha_override_nests(client):
    scores = [0.8, 0.7, 0.3, 0.2]
    loose = client.post("/v1/conformal",
                        json={"scores": scores, "alpha_override": 0.2}).json()
    tight = client.post("/v1/conformal",
                        json={"scores": scores, "alpha_override": 0.8}).json()
    assert set(tight["set"]) <= set(loose["set"])


def test_conformal_infinite_quantile_serialized_as_string(client):
    body = client.post("/v1/conformal",
                       json={"scores": [0.5] * 4, "alpha_override": 0.05}).json()
    assert body["quantile"] == "inf"
    assert body["set"] == [0, 1]
    assert body["rejected"] is False


# ---------------------------------------------------------------------------
# Error codes


def test_wrong_k_is_400(client):
    r = client.post("/v1/whatif", json={"scores": [0.5] * 3})
    assert r.status_code == 400
    assert "expected 4" in r.json()["detail"]


def test_out_of_range_score_is_400(client):
    r = client.post("/v1/whatif", json={"scores": [0.5, 0.5, 0.5, 1.5]})
    assert r.status_code == 400


def test_bad_edit_index_is_400(client):
    r = client.post("/v1/whatif", json={"scores": [0.5] * 4,
                                        "edits": [{"concept_index": 9, "value": 0.5}]})
    assert r.status_code == 400


def test_duplicate_edit_is_400(client):
    r = client.post("/v1/whatif", json={
        "scores": [0.5] * 4,
        "edits": [{"concept_index": 1, "value": 0.2},
                  {"concept_index": 1, "value": 0.8}]})
    assert r.status_code == 400
    assert "duplicate" in r.json()["detail"]


def test_edit_value_out_of_range_is_400(client):
    r = client.post("/v1/whatif", json={"scores": [0.5] * 4,
                                        "edits": [{"concept_index": 0, "value": 2.0}]})
    assert r.status_code == 400


def test_unknown_target_is_404(client):
    r = client.post("/v1/whatif", json={"scores": [0.5] * 4, "target": 7})
    assert r.status_code == 404


def test_alpha_override_without_calibrator_is_409(lr_client):
    r = lr_client.post("/v1/whatif", json={"scores": [0.5] * 4,
                                           "alpha_override": 0.1})
    assert r.status_code == 409


def test_conformal_without_calibrator_is_409(lr_client):
    r = lr_client.post("/v1/conformal", json={"scores": [0.5] * 4})
    assert r.status_code == 409


def test_invalid_alpha_is_400(client):
    r = client.post("/v1/conformal", json={"scores": [0.5] * 4,
                                           "alpha_override": 1.0})
    assert r.status_code == 400
