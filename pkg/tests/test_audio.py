import struct

import numpy as np
import pytest

from voicefem.audio import AudioBuffer, load_wav, resample
from voicefem.errors import MalformedContainer, UnsupportedEncoding


def make_wav(samples, sr, encoding="pcm16", channels=1, fmt_tag=None, bits=None):
    """Assemble WAV bytes directly (independent of the package encoder)."""
    samples = np.asarray(samples)
    if encoding == "pcm16":
        body = (np.clip(samples, -1, 1) * 32767).astype("<i2").tobytes()
        tag, width = 1, 16
    elif encoding == "f32":
        body = samples.astype("<f4").tobytes()
        tag, width = 3, 32
    elif encoding == "f64":
        body = samples.astype("<f8").tobytes()
        tag, width = 3, 64
    else:
        raise ValueError(encoding)
    tag = fmt_tag if fmt_tag is not None else tag
    width = bits if bits is not None else width
    block = channels * width // 8
    header = (
        b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVEfmt "
        + struct.pack("<IHHIIHH", 16, tag, channels, sr, sr * block, block, width)
        + b"data" + struct.pack("<I", len(body))
    )
    return header + body


def fft_peak_hz(samples, sr):
    spectrum = np.abs(np.fft.rfft(samples))
    return np.argmax(spectrum) * sr / len(samples)


class TestLoadWav:
    def test_silence_identity(self):
        buf = load_wav(make_wav(np.zeros(16000), 16000))
        assert buf.sample_rate == 16000
        assert len(buf.samples) == 16000
        np.testing.assert_array_equal(buf.samples, 0.0)

    def test_stereo_identical_channels_equals_mono(self):
        mono = np.sin(2 * np.pi * 300 * np.arange(16000) / 16000) * 0.4
        stereo = np.repeat(mono, 2)
        got = load_wav(make_wav(stereo, 16000, channels=2))
        want = load_wav(make_wav(mono, 16000))
        np.testing.assert_allclose(got.samples, want.samples, atol=1e-12)

    def test_8k_resampled_to_16k_length(self):
        tone = 0.5 * np.sin(2 * np.pi * 500 * np.arange(8000) / 8000)
        buf = load_wav(make_wav(tone, 8000))
        assert abs(len(buf.samples) - 16000) <= 1
        # sinc-interpolation oracle: the tone must stay at 500 Hz
        peak = fft_peak_hz(buf.samples, 16000)
        assert abs(peak - 500.0) <= 16000 / len(buf.samples)

    def test_float32_decoding(self):
        tone = 0.25 * np.sin(2 * np.pi * 440 * np.arange(16000) / 16000)
        buf = load_wav(make_wav(tone, 16000, encoding="f32"))
        np.testing.assert_allclose(buf.samples, tone, atol=1e-7)

    def test_float64_decoding(self):
        tone = 0.25 * np.sin(2 * np.pi * 440 * np.arange(16000) / 16000)
        buf = load_wav(make_wav(tone, 16000, encoding="f64"))
        np.testing.assert_allclose(buf.samples, tone, atol=1e-15)

    def test_overdriven_float_clamped(self):
        buf = load_wav(make_wav(np.full(1000, 1.5), 16000, encoding="f32"))
        assert buf.samples.max() <= 1.0
        assert buf.samples.min() >= -1.0

    def test_garbage_bytes(self):
        with pytest.raises(MalformedContainer):
            load_wav(b"definitely not audio")
        with pytest.raises(MalformedContainer):
            load_wav(b"")

    def test_truncated_data_chunk(self):
        wav = make_wav(np.zeros(4000), 16000)
        with pytest.raises(MalformedContainer):
            load_wav(wav[: len(wav) - 100])

    def test_missing_fmt_chunk(self):
        body = np.zeros(100, dtype="<i2").tobytes()
        wav = b"RIFF" + struct.pack("<I", 4 + 8 + len(body)) + b"WAVE" \
            + b"data" + struct.pack("<I", len(body)) + body
        with pytest.raises(MalformedContainer):
            load_wav(wav)

    def test_unsupported_bit_depth(self):
        with pytest.raises(UnsupportedEncoding):
            load_wav(make_wav(np.zeros(100), 16000, bits=24))

    def test_unsupported_codec(self):
        with pytest.raises(UnsupportedEncoding):
            load_wav(make_wav(np.zeros(100), 16000, fmt_tag=2))  # ADPCM

    def test_too_many_channels(self):
        with pytest.raises(UnsupportedEncoding):
            load_wav(make_wav(np.zeros(300), 16000, channels=3))

    def test_extensible_format(self):
        mono = 0.3 * np.sin(2 * np.pi * 200 * np.arange(8000) / 16000)
        body = (mono * 32767).astype("<i2").tobytes()
        ext = struct.pack("<HHIIHH", 0xFFFE, 1, 16000, 32000, 2, 16)
        ext += struct.pack("<HHI", 22, 16, 1) + struct.pack("<H", 1) + b"\x00" * 14
        wav = b"RIFF" + struct.pack("<I", 4 + 8 + len(ext) + 8 + len(body)) + b"WAVE" \
            + b"fmt " + struct.pack("<I", len(ext)) + ext \
            + b"data" + struct.pack("<I", len(body)) + body
        buf = load_wav(wav)
        np.testing.assert_allclose(buf.samples, np.clip(mono, -1, 1), atol=1e-4)


class TestResample:
    def test_identity_bit_identical(self):
        buf = AudioBuffer(np.random.default_rng(0).uniform(-1, 1, 5000), 16000)
        out = resample(buf, 16000)
        assert out is buf

    def test_440hz_48k_to_16k_peak(self):
        sr = 48000
        tone = 0.5 * np.sin(2 * np.pi * 440 * np.arange(sr) / sr)
        out = resample(AudioBuffer(tone, sr), 16000)
        bin_hz = 16000 / len(out.samples)
        assert abs(fft_peak_hz(out.samples, 16000) - 440.0) <= bin_hz

    def test_16k_to_11k_duration(self):
        buf = AudioBuffer(np.zeros(16000), 16000)
        out = resample(buf, 11000)
        assert abs(out.duration - buf.duration) <= 1.0 / 11000

    def test_frequency_preserved_within_point1_percent(self):
        sr = 44100
        n = sr * 2
        tone = 0.5 * np.sin(2 * np.pi * 1000 * np.arange(n) / sr)
        out = resample(AudioBuffer(tone, sr), 16000)
        # zero-padded FFT for fine frequency resolution
        spec = np.abs(np.fft.rfft(out.samples, n=1 << 20))
        peak = np.argmax(spec) * 16000 / (1 << 20)
        assert abs(peak - 1000.0) / 1000.0 < 0.001

    def test_round_trip_rms_within_1_percent(self):
        tone = 0.5 * np.sin(2 * np.pi * 1000 * np.arange(16000) / 16000)
        buf = AudioBuffer(tone, 16000)
        back = resample(resample(buf, 8000), 16000)
        rms = lambda x: np.sqrt(np.mean(x ** 2))
        assert abs(rms(back.samples) / rms(buf.samples) - 1.0) < 0.01

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            resample(AudioBuffer(np.zeros(10), 16000), 0)


class TestAudioBuffer:
    def test_duration(self):
        assert AudioBuffer(np.zeros(8000), 16000).duration == 0.5

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            AudioBuffer(np.array([0.0, np.nan]), 16000)

    def test_immutable(self):
        buf = AudioBuffer(np.zeros(10), 16000)
        with pytest.raises(ValueError):
            buf.samples[0] = 1.0
