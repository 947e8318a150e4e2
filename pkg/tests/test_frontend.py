import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from synthslu.errors import AudioLoadError, ConfigError, InputError
from synthslu.frontend import (
    LOG_FLOOR,
    FeatureCache,
    FeatureConfig,
    Waveform,
    compute_features,
    hz_to_mel,
    load_audio,
    mel_filterbank,
    mel_to_hz,
    n_frames,
    read_wav,
    resample,
    write_wav,
)

SR = 16000
RAW = FeatureConfig(normalize=False)


def tone(freq, seconds=1.0, amp=0.5, sr=SR):
    t = np.arange(int(seconds * sr)) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def test_one_second_gives_98_frames():
    f = compute_features(Waveform(tone(440), SR))
    assert f.frames.shape == (98, 40)
    assert f.frame_shift == pytest.approx(0.01)
    assert n_frames(SR, 400, 160) == 98


def test_raw_mode_dim():
    cfg = FeatureConfig(mode="raw")
    f = compute_features(Waveform(tone(300, 0.1), SR), cfg)
    assert f.frames.shape[1] == cfg.dim == 400


def test_silence_hits_the_floor():
    f = compute_features(Waveform(np.zeros(SR), SR), RAW)
    assert np.allclose(f.frames, np.log(LOG_FLOOR))
    g = compute_features(Waveform(np.zeros(SR), SR))
    assert np.all(np.isfinite(g.frames))


@pytest.mark.parametrize(
    "signal",
    [
        np.zeros(4000),
        np.eye(1, 4000, 2000).ravel(),
        np.sign(np.sin(2 * np.pi * 100 * np.arange(4000) / SR)),
        np.ones(4000),
        np.full(4000, -1.0),
    ],
    ids=["zeros", "impulse", "square", "dc", "neg-dc"],
)
@pytest.mark.parametrize("cfg", [FeatureConfig(), RAW, FeatureConfig(mode="raw")], ids=["cmvn", "plain", "raw"])
def test_adversarial_inputs_are_finite(signal, cfg):
    assert np.all(np.isfinite(compute_features(Waveform(signal, SR), cfg).frames))


@given(arrays(np.float64, st.integers(400, 2000), elements=st.floats(-1, 1)))
@settings(max_examples=40)
def test_features_finite_and_pure(x):
    before = x.copy()
    a = compute_features(Waveform(x, SR))
    b = compute_features(Waveform(x, SR))
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(x, before)
    assert np.all(np.isfinite(a.frames))


def test_non_finite_and_short_rejected():
    with pytest.raises(InputError):
        Waveform(np.array([0.0, np.nan]), SR)
    with pytest.raises(InputError):
        compute_features(Waveform(np.zeros(399), SR))
    with pytest.raises(ConfigError):
        FeatureConfig(n_fft=256)


def test_log_energy_shifts_with_gain():
    x = tone(700) + 0.01 * np.random.default_rng(0).standard_normal(SR)
    a = compute_features(Waveform(x, SR), RAW).frames
    b = compute_features(Waveform(0.25 * x, SR), RAW).frames
    assert np.allclose(a - b, 2 * np.log(4), atol=1e-3)


def test_cmvn_is_gain_invariant():
    x = tone(700) + 0.01 * np.random.default_rng(0).standard_normal(SR)
    a = compute_features(Waveform(x, SR)).frames
    b = compute_features(Waveform(0.25 * x, SR)).frames
    assert np.allclose(a, b, atol=1e-3)


def test_tone_peaks_in_matching_mel_bin():
    f = compute_features(Waveform(tone(1000), SR), RAW).frames
    edges = mel_to_hz(np.linspace(hz_to_mel(0), hz_to_mel(SR / 2), 42))
    expected = int(np.argmin(np.abs(edges[1:-1] - 1000)))
    assert abs(int(np.argmax(f.mean(0))) - expected) <= 1


def test_mel_filterbank_shape():
    fb = mel_filterbank(40, 512, SR)
    assert fb.shape == (40, 257)
    assert np.all(fb >= 0) and np.all(fb.max(axis=1) > 0)
    assert np.all(fb.max(axis=1) <= 1.0 + 1e-12)


@given(st.floats(0, 8000))
def test_mel_inverse(f):
    assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, abs=1e-6)


@given(arrays(np.float64, st.integers(1, 500), elements=st.floats(-1, 1)))
def test_wav_round_trip_within_one_lsb(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("wav") / "x.wav"
    write_wav(path, x, SR)
    back, sr = read_wav(path)
    assert sr == SR
    assert back.shape == x.shape
    assert np.max(np.abs(back - x)) <= 1.0 / 32767


def _write_raw(path, data: bytes, width, channels=1, sr=SR):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(sr)
        w.writeframes(data)


def test_stereo_is_mixed_to_mono(tmp_path):
    left = (tone(200, 0.1) * 32767).astype("<i2")
    right = np.zeros_like(left)
    _write_raw(tmp_path / "s.wav", np.stack([left, right], 1).tobytes(), 2, channels=2)
    data, _ = read_wav(tmp_path / "s.wav")
    assert data.shape == (len(left), 2)
    w = load_audio(tmp_path / "s.wav")
    assert np.allclose(w.samples, data[:, 0] / 2)


def test_other_sample_widths(tmp_path):
    _write_raw(tmp_path / "u8.wav", bytes([128, 255, 0]), 1)
    assert np.allclose(read_wav(tmp_path / "u8.wav")[0], [0, 127 / 128, -1])
    _write_raw(tmp_path / "i32.wav", np.array([0, 2**30], "<i4").tobytes(), 4)
    assert np.allclose(read_wav(tmp_path / "i32.wav")[0], [0, 0.5])


def test_resampling_on_load(tmp_path):
    write_wav(tmp_path / "a.wav", tone(200, 0.5, sr=8000), 8000)
    w = load_audio(tmp_path / "a.wav", SR)
    assert w.sample_rate == SR and len(w) == 8000
    assert len(resample(np.zeros(441), 44100, SR)) == 160


def test_unreadable_audio(tmp_path):
    (tmp_path / "junk.wav").write_bytes(b"not a wav at all")
    with pytest.raises(AudioLoadError):
        read_wav(tmp_path / "junk.wav")
    with pytest.raises(AudioLoadError):
        read_wav(tmp_path / "missing.wav")


def test_feature_cache(tmp_path):
    write_wav(tmp_path / "a.wav", tone(300, 0.2), SR)
    cache = FeatureCache(FeatureConfig())
    a = cache.get(tmp_path / "a.wav")
    assert cache.get(tmp_path / "a.wav") is a
    assert len(cache) == 1
    assert a.dtype == np.float32


def test_fingerprint_tracks_config():
    assert FeatureConfig().fingerprint() == FeatureConfig().fingerprint()
    assert FeatureConfig().fingerprint() != FeatureConfig(n_mels=24).fingerprint()
