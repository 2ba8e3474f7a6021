import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from voicefem.calibration import fit_isotonic
from voicefem.classifier import MlpSpec, build_model, save_model
from voicefem.service import ServiceConfig, create_app
from voicefem.synth import encode_wav_pcm16, synth_read_speech
from voicefem.training import MelStatsProvider, TrainConfig, split_train_dev, train


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory, synthetic_corpus):
    """A small trained model + calibration + service config on disk."""
    root = tmp_path_factory.mktemp("svc")
    idx, provider, _ = synthetic_corpus
    train_idx, dev_idx = split_train_dev(idx, seed=0)
    cfg = TrainConfig(n_seeds=1, base_seed=0, max_epochs=80, patience=50)
    result = train(MlpSpec(layer_sizes=(32,), input_dim=48), train_idx, dev_idx, provider, cfg)
    model_path = root / "model.vfem"
    save_model(result.bundle, model_path)

    cal = fit_isotonic([(0.0, 0.0), (0.25, 20.0), (0.75, 80.0), (1.0, 100.0)])
    calib_path = root / "calib.json"
    calib_path.write_text(cal.to_json())
    return ServiceConfig(model_path=str(model_path), calibration_path=str(calib_path))


@pytest.fixture(scope="module")
def client(artifacts):
    app = create_app(artifacts)
    with TestClient(app) as c:
        yield c


WAV_8S = encode_wav_pcm16(synth_read_speech(180.0, 8.0, formant_scale=1.15, seed=31))


class TestAnalyze:
    def test_full_contract(self, client):
        resp = client.post("/v1/analyze", content=WAV_8S)
        assert resp.status_code == 200
        doc = resp.json()
        assert set(doc) == {"vfp", "raw_score", "n_windows", "window_scores",
                            "speech_ratio", "f0_median_st", "f0_median_hz",
                            "vtl_cm", "warnings"}
        assert 0.0 <= doc["vfp"] <= 100.0
        assert doc["n_windows"] >= 1
        assert doc["n_windows"] == len(doc["window_scores"])
        assert doc["vfp"] == round(doc["vfp"], 3)
        for score in doc["window_scores"]:
            assert 0.0 < score["p_female"] < 1.0
        assert "X-model-version" in resp.headers or "x-model-version" in resp.headers

    def test_idempotent(self, client):
        a = client.post("/v1/analyze", content=WAV_8S)
        b = client.post("/v1/analyze", content=WAV_8S)
        assert a.content == b.content

    def test_short_file_422(self, client):
        wav = encode_wav_pcm16(synth_read_speech(180.0, 1.0, seed=5))
        resp = client.post("/v1/analyze", content=wav)
        assert resp.status_code == 422
        assert resp.json()["error"] == "insufficient_speech"

    def test_empty_body_400(self, client):
        resp = client.post("/v1/analyze", content=b"")
        assert resp.status_code == 400
        assert resp.json()["error"] == "malformed_container"

    def test_garbage_400(self, client):
        resp = client.post("/v1/analyze", content=b"not a wav at all")
        assert resp.status_code == 400

    def test_unsupported_encoding_400(self, client):
        import struct
        body = np.zeros(100, dtype="<i2").tobytes()
        wav = (b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVEfmt "
               + struct.pack("<IHHIIHH", 16, 2, 1, 16000, 32000, 2, 16)
               + b"data" + struct.pack("<I", len(body)) + body)
        resp = client.post("/v1/analyze", content=wav)
        assert resp.status_code == 400
        assert resp.json()["error"] == "unsupported_encoding"

    def test_oversized_413(self, artifacts):
        from dataclasses import replace
        small = replace(artifacts, max_upload_bytes=1024 * 1024)
        with TestClient(create_app(small)) as c:
            resp = c.post("/v1/analyze", content=b"\x00" * (1024 * 1024 + 1))
        assert resp.status_code == 413
        assert resp.json()["error"] == "too_large"


class TestHealth:
    def test_ok_after_startup(self, client):
        resp = client.get("/v1/health")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["status"] == "ok"
        assert len(doc["model_version"]) == 12
        assert len(doc["calibration_version"]) == 12

    def test_503_before_startup(self, artifacts):
        app = create_app(artifacts)
        client = TestClient(app)  # no context manager: startup not run
        resp = client.get("/v1/health")
        assert resp.status_code == 503


class TestCors:
    def test_localhost_origin_allowed(self, client):
        resp = client.get("/v1/health", headers={"Origin": "http://localhost:5173"})
        assert resp.headers.get("access-control-allow-origin") == "http://localhost:5173"

    def test_foreign_origin_not_allowed(self, client):
        resp = client.get("/v1/health", headers={"Origin": "https://example.com"})
        assert "access-control-allow-origin" not in resp.headers


class TestConfig:
    def test_json_file(self, tmp_path):
        path = tmp_path / "svc.json"
        path.write_text(json.dumps({
            "model_path": "m.vfem", "calibration_path": "c.json",
            "port": 9000, "vad": {"percentile": 25.0},
        }))
        cfg = ServiceConfig.from_file(path)
        assert cfg.port == 9000
        assert cfg.vad.percentile == 25.0
        assert cfg.model_path == "m.vfem"

    def test_toml_file(self, tmp_path):
        path = tmp_path / "svc.toml"
        path.write_text(
            'model_path = "m.vfem"\ncalibration_path = "c.json"\nport = 9100\n'
            "[vad]\nmargin_db = 8.0\n"
        )
        cfg = ServiceConfig.from_file(path)
        assert cfg.port == 9100
        assert cfg.vad.margin_db == 8.0

    def test_env_overrides(self):
        cfg = ServiceConfig(model_path="a", calibration_path="b")
        out = cfg.with_env_overrides({"VFP_PORT": "7777", "VFP_MODEL": "other.vfem",
                                      "VFP_CALIB": "other.json"})
        assert out.port == 7777
        assert out.model_path == "other.vfem"
        assert out.calibration_path == "other.json"

    def test_upload_floor(self):
        with pytest.raises(ValueError):
            ServiceConfig(model_path="a", calibration_path="b", max_upload_bytes=1000)
