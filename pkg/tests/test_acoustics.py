import numpy as np
import pytest
from scipy.signal import lfilter

from voicefem.acoustics import (
    FormantEstimate,
    PitchTrack,
    VtlConfig,
    burg_coefficients,
    estimate_f0_track,
    estimate_formants,
    estimate_vtl,
    hz_from_semitones,
    median_f0_st,
    semitones_from_hz,
)
from voicefem.audio import AudioBuffer
from voicefem.errors import NoVoicedFrames
from voicefem.synth import sawtooth, synth_vowel

VOWEL_TARGETS = np.array([500.0, 1500.0, 2500.0, 3500.0])


class TestPitchTrack:
    def test_sawtooth_220(self):
        track = estimate_f0_track(sawtooth(220.0, 2.0))
        assert track.voiced.mean() >= 0.9
        assert np.median(track.voiced_f0()) == pytest.approx(220.0, abs=1.0)

    def test_silence_all_unvoiced(self):
        track = estimate_f0_track(AudioBuffer(np.zeros(32000), 16000))
        assert track.n_voiced == 0

    def test_amplitude_invariance(self):
        buf = sawtooth(220.0, 2.0)
        half = AudioBuffer(buf.samples * 0.5, 16000)
        a = estimate_f0_track(buf)
        b = estimate_f0_track(half)
        np.testing.assert_array_equal(a.voiced, b.voiced)
        assert abs(np.median(a.voiced_f0()) - np.median(b.voiced_f0())) <= 0.1

    def test_harmonic_sweep_within_03_st(self):
        for f0 in [100.0, 200.0, 300.0]:
            track = estimate_f0_track(synth_vowel(f0, 1.5))
            err = abs(semitones_from_hz(np.median(track.voiced_f0())) - semitones_from_hz(f0))
            assert err <= 0.3, f"f0={f0}: {err} ST"

    def test_voiced_range_clipped(self):
        track = estimate_f0_track(sawtooth(220.0, 1.0))
        voiced = track.voiced_f0()
        assert np.all((voiced >= 50.0) & (voiced <= 600.0))


class TestMedianF0St:
    def _track(self, hz):
        return PitchTrack(np.full(20, float(hz)))

    def test_one_hz_is_zero(self):
        assert median_f0_st(self._track(1.0)) == pytest.approx(0.0)

    def test_octave_is_twelve(self):
        assert median_f0_st(self._track(2.0)) == pytest.approx(12.0)

    def test_220_hz(self):
        # 12*log2(220) evaluated independently
        assert median_f0_st(self._track(220.0)) == pytest.approx(93.376, abs=1e-3)

    def test_unvoiced_raises(self):
        with pytest.raises(NoVoicedFrames):
            median_f0_st(PitchTrack(np.full(10, np.nan)))

    def test_semitone_doubling_law(self):
        rng = np.random.default_rng(2)
        f = rng.uniform(50, 600, 1000)
        np.testing.assert_allclose(
            semitones_from_hz(2 * f), semitones_from_hz(f) + 12.0, atol=1e-9
        )

    def test_hz_semitone_round_trip(self):
        f = np.array([55.0, 110.0, 220.0, 440.0])
        np.testing.assert_allclose(hz_from_semitones(semitones_from_hz(f)), f)


class TestBurg:
    def test_recovers_ar_coefficients(self):
        # AR(4) driven by white noise; Burg should recover the polynomial
        rng = np.random.default_rng(0)
        a_true = np.array([1.0, -1.2, 0.8, -0.3, 0.1])
        x = lfilter([1.0], a_true, rng.normal(size=8000))
        a_est = burg_coefficients(x[None, 200:], 4)[0]
        np.testing.assert_allclose(a_est, a_true, atol=0.05)


class TestFormants:
    def test_synthetic_vowel_within_5_percent(self):
        buf = synth_vowel(120.0, 2.0)
        fmt = estimate_formants(buf, estimate_f0_track(buf))
        rel = np.abs(fmt.as_array() - VOWEL_TARGETS) / VOWEL_TARGETS
        assert np.all(rel <= 0.05), fmt.as_array()

    def test_scaled_vowel_scales_estimates(self):
        base = synth_vowel(120.0, 2.0)
        scaled = synth_vowel(120.0, 2.0, formants=tuple(VOWEL_TARGETS * 1.1))
        f_base = estimate_formants(base, estimate_f0_track(base)).as_array()
        f_scaled = estimate_formants(scaled, estimate_f0_track(scaled)).as_array()
        np.testing.assert_allclose(f_scaled / f_base, 1.1, rtol=0.05)

    def test_silence_raises(self):
        buf = AudioBuffer(np.zeros(32000), 16000)
        with pytest.raises(NoVoicedFrames):
            estimate_formants(buf, estimate_f0_track(buf))

    def test_medians_strictly_increasing(self):
        buf = synth_vowel(120.0, 2.0)
        fmt = estimate_formants(buf, estimate_f0_track(buf))
        arr = fmt.as_array()
        assert np.all(np.diff(arr) > 0)


class TestVtl:
    def test_uniform_tube_17_5(self):
        fmt = FormantEstimate(500.0, 1500.0, 2500.0, 3500.0)
        assert estimate_vtl(fmt, VtlConfig(350.0)) == pytest.approx(17.5, abs=1e-12)

    def test_doubled_formants_halve_length(self):
        fmt = FormantEstimate(1000.0, 3000.0, 5000.0, 7000.0)
        assert estimate_vtl(fmt, VtlConfig(350.0)) == pytest.approx(8.75, abs=1e-12)

    def test_linear_in_speed_of_sound(self):
        fmt = FormantEstimate(500.0, 1500.0, 2500.0, 3500.0)
        assert estimate_vtl(fmt, VtlConfig(340.0)) == pytest.approx(17.0, abs=1e-12)

    def test_inverse_scaling_property(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            f = np.sort(rng.uniform(300, 5000, 4))
            if len(np.unique(f)) < 4:
                continue
            alpha = rng.uniform(0.5, 2.0)
            base = estimate_vtl(FormantEstimate(*f))
            scaled = estimate_vtl(FormantEstimate(*(alpha * f)))
            assert scaled == pytest.approx(base / alpha, rel=1e-12)
