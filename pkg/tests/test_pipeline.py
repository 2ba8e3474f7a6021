import numpy as np
import pytest

from voicefem.audio import AudioBuffer
from voicefem.calibration import CalibrationMap, fit_isotonic
from voicefem.classifier import MlpSpec, build_model, forward
from voicefem.errors import (
    DimensionMismatch,
    InsufficientSpeech,
    NoVoicedFrames,
    SingleClass,
    UnfittedMap,
)
from voicefem.pipeline import (
    F0Baseline,
    F0VtlBaseline,
    PipelineConfig,
    VtlBaseline,
    estimate_vfp,
    estimate_vfp_baseline,
    fit_f0_baseline,
    fit_vtl_baseline,
)
from voicefem.svm import LinearSvm, LinearSvmModel, fit_linear_svm
from voicefem.synth import synth_read_speech

IDENTITY_MAP = CalibrationMap(np.array([0.0, 1.0]), np.array([0.0, 100.0]))


@pytest.fixture(scope="module")
def mlp_bundle():
    # untrained but deterministic; enough to exercise the pipeline contract
    return build_model(MlpSpec(layer_sizes=(32,), input_dim=48), seed=42)


@pytest.fixture(scope="module")
def voice_10s():
    return synth_read_speech(150.0, 10.0, seed=21)


class TestEstimateVfp:
    def test_result_contract(self, mlp_bundle, voice_10s):
        res = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP)
        assert res.n_windows >= 1
        probs = [s.p_female for s in res.window_scores]
        assert res.raw_score == pytest.approx(np.mean(probs))
        assert min(probs) - 1e-12 <= res.raw_score <= max(probs) + 1e-12
        assert 0.0 <= res.vfp <= 100.0
        assert res.vfp == pytest.approx(res.raw_score * 100.0)
        assert 0.0 < res.speech_ratio <= 1.0
        assert res.f0_median_hz == pytest.approx(150.0, rel=0.05)
        assert res.vtl_cm is not None

    def test_deterministic(self, mlp_bundle, voice_10s):
        a = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP)
        b = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP)
        assert a.to_dict() == b.to_dict()

    def test_one_second_insufficient(self, mlp_bundle):
        buf = synth_read_speech(150.0, 1.0, seed=3)
        with pytest.raises(InsufficientSpeech):
            estimate_vfp(buf, mlp_bundle, IDENTITY_MAP)

    def test_silence_insufficient(self, mlp_bundle):
        with pytest.raises(InsufficientSpeech):
            estimate_vfp(AudioBuffer(np.zeros(16000 * 4), 16000), mlp_bundle, IDENTITY_MAP)

    def test_unfitted_map(self, mlp_bundle, voice_10s):
        with pytest.raises(UnfittedMap):
            estimate_vfp(voice_10s, mlp_bundle, None)

    def test_mean_then_map(self, mlp_bundle, voice_10s):
        cal = fit_isotonic([(0.0, 0.0), (0.25, 10.0), (0.75, 90.0), (1.0, 100.0)])
        res = estimate_vfp(voice_10s, mlp_bundle, cal)
        expected = np.interp(res.raw_score, cal.x, cal.y)
        assert res.vfp == pytest.approx(expected)

    def test_appended_silence_barely_moves_vfp(self, mlp_bundle, voice_10s):
        base = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP)
        padded = AudioBuffer(
            np.concatenate([voice_10s.samples, np.zeros(16000 * 2)]), 16000)
        res = estimate_vfp(padded, mlp_bundle, IDENTITY_MAP)
        assert abs(res.vfp - base.vfp) < 0.5

    def test_external_embedding_model_rejects_audio(self, voice_10s):
        bundle = build_model(MlpSpec(layer_sizes=(32,), input_dim=256), seed=0)
        with pytest.raises(DimensionMismatch):
            estimate_vfp(voice_10s, bundle, IDENTITY_MAP)

    def test_diagnostics_can_be_skipped(self, mlp_bundle, voice_10s):
        cfg = PipelineConfig(compute_diagnostics=False)
        res = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP, cfg)
        assert res.f0_median_st is None
        assert res.vtl_cm is None

    def test_to_dict_rounding(self, mlp_bundle, voice_10s):
        doc = estimate_vfp(voice_10s, mlp_bundle, IDENTITY_MAP).to_dict(ndigits=3)
        assert doc["vfp"] == round(doc["vfp"], 3)
        assert {"vfp", "raw_score", "n_windows", "window_scores", "speech_ratio",
                "f0_median_st", "f0_median_hz", "vtl_cm", "warnings"} == set(doc)


class TestLinearSvm:
    TOY_X = [[90.0, 14.0], [100.0, 13.0], [80.0, 18.0], [85.0, 17.0]]
    TOY_Y = ["F", "F", "M", "M"]

    def test_separable_toy_set(self):
        model = fit_linear_svm(self.TOY_X, self.TOY_Y)
        preds = ["F" if model.decision_value([p]) > 0 else "M" for p in self.TOY_X]
        assert preds == self.TOY_Y

    def test_label_flip_negates_decisions(self):
        model = fit_linear_svm(self.TOY_X, self.TOY_Y)
        flipped = fit_linear_svm(self.TOY_X, ["M", "M", "F", "F"])
        for p in self.TOY_X + [[95.0, 15.0]]:
            assert flipped.decision_value([p]) == pytest.approx(-model.decision_value([p]), abs=1e-12)

    def test_duplicated_dataset_same_boundary(self):
        model = fit_linear_svm(self.TOY_X, self.TOY_Y)
        doubled = fit_linear_svm(self.TOY_X * 2, self.TOY_Y * 2)
        np.testing.assert_allclose(doubled.weights, model.weights, atol=1e-6)
        assert doubled.bias == pytest.approx(model.bias, abs=1e-6)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            fit_linear_svm(self.TOY_X, ["F", "F", "F", "F"])

    def test_estimator_facade(self):
        est = LinearSvm().fit(self.TOY_X, self.TOY_Y)
        assert list(est.predict(self.TOY_X)) == self.TOY_Y
        assert est.get_params() == {"lam": 0.01, "epochs": 200}


class TestBaselines:
    def test_f0_orders_high_above_low(self):
        high = synth_read_speech(220.0, 6.0, formant_scale=1.2, seed=11)
        low = synth_read_speech(110.0, 6.0, formant_scale=1.0, seed=12)
        baseline = F0Baseline(st_min=75.0, st_max=100.0)
        r_high = estimate_vfp_baseline(high, baseline, IDENTITY_MAP)
        r_low = estimate_vfp_baseline(low, baseline, IDENTITY_MAP)
        assert r_high.raw_score > r_low.raw_score
        assert r_high.vfp > r_low.vfp

    def test_vtl_shorter_tube_higher_score(self):
        baseline = VtlBaseline(vtl_min=8.0, vtl_max=20.0)
        assert baseline.raw_score(0.0, 8.75) > baseline.raw_score(0.0, 17.5)

    def test_vtl_pipeline_orders_tubes(self):
        short = synth_read_speech(160.0, 6.0, formant_scale=1.25, seed=13)
        long_ = synth_read_speech(150.0, 6.0, formant_scale=1.0, seed=14)
        baseline = VtlBaseline(vtl_min=10.0, vtl_max=20.0)
        r_short = estimate_vfp_baseline(short, baseline, IDENTITY_MAP)
        r_long = estimate_vfp_baseline(long_, baseline, IDENTITY_MAP)
        assert r_short.raw_score > r_long.raw_score

    def test_f0vtl_zero_weights_give_half(self):
        svm = LinearSvmModel(weights=np.zeros(2), bias=0.0,
                             feat_mean=np.zeros(2), feat_std=np.ones(2))
        baseline = F0VtlBaseline(svm=svm)
        buf = synth_read_speech(150.0, 6.0, seed=15)
        res = estimate_vfp_baseline(buf, baseline, IDENTITY_MAP)
        assert res.raw_score == pytest.approx(0.5)
        assert res.vfp == pytest.approx(50.0)

    def test_silence_raises_no_voiced(self):
        baseline = F0Baseline(st_min=75.0, st_max=100.0)
        with pytest.raises(NoVoicedFrames):
            estimate_vfp_baseline(AudioBuffer(np.zeros(32000), 16000), baseline, IDENTITY_MAP)

    def test_fit_helpers(self):
        f0b = fit_f0_baseline([80.0, 90.0, 100.0])
        assert f0b.raw_score(80.0) == 0.0
        assert f0b.raw_score(100.0) == 1.0
        assert f0b.raw_score(90.0) == pytest.approx(0.5)
        vtlb = fit_vtl_baseline([12.0, 14.0, 16.0])
        assert vtlb.raw_score(0.0, 12.0) == 1.0
        assert vtlb.raw_score(0.0, 16.0) == 0.0
