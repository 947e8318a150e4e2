"""Audio I/O and feature extraction."""
from __future__ import annotations

import hashlib
import json
import os
import wave
from dataclasses import asdict, dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioLoadError, ConfigError, InputError

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InputError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise InputError("waveform contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FeatureConfig:
    """``mode`` is ``"logmel"`` or ``"raw"`` (framed samples).

    ``normalize`` applies per-utterance mean/variance normalization per bin.
    """

    mode: str = "logmel"
    sample_rate: int = 16000
    frame_len: int = 400
    hop: int = 160
    n_fft: int = 512
    n_mels: int = 40
    fmin: float = 0.0
    fmax: float | None = None
    normalize: bool = True

    def __post_init__(self):
        if self.mode not in ("logmel", "raw"):
            raise ConfigError(f"unknown feature mode {self.mode!r}")
        if self.frame_len <= 0 or self.hop <= 0:
            raise ConfigError("frame_len and hop must be positive")
        if self.mode == "logmel" and self.n_fft < self.frame_len:
            raise ConfigError("n_fft must be >= frame_len")

    @property
    def dim(self) -> int:
        return self.n_mels if self.mode == "logmel" else self.frame_len

    @property
    def frame_shift(self) -> float:
        return self.hop / self.sample_rate

    def to_dict(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        return hashlib.sha1(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class FeatureSequence:
    frames: np.ndarray  # (T, d)
    frame_shift: float
    fingerprint: str

    def __len__(self):
        return self.frames.shape[0]


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV into float samples in [-1, 1], shape (n,) or (n, ch)."""
    try:
        with wave.open(os.fspath(path), "rb") as w:
            n_ch, width, sr, n = w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()
            raw = w.readframes(n)
    except (OSError, EOFError, wave.Error) as exc:
        raise AudioLoadError(f"cannot read {path}: {exc}") from exc
    if width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width == 4:
        data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
    else:
        raise AudioLoadError(f"{path}: unsupported sample width {width}")
    if data.size != n * n_ch:
        raise AudioLoadError(f"{path}: truncated data")
    if n_ch > 1:
        data = data.reshape(-1, n_ch)
    return data, sr


def write_wav(path, samples: np.ndarray, sample_rate: int) -> Path:
    """Write 16-bit mono PCM. Writes to a temp file and renames."""
    path = Path(path)
    samples = np.asarray(samples, dtype=np.float64)
    if not np.all(np.isfinite(samples)):
        raise InputError(f"{path}: refusing to write non-finite samples")
    # same scale as read_wav, so a round trip is exact to within one step
    pcm = np.clip(np.round(np.asarray(samples, dtype=np.float64) * 32768.0), -32768, 32767).astype("<i2")
    tmp = path.with_name(path.name + ".tmp")
    with wave.open(os.fspath(tmp), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())
    os.replace(tmp, path)
    return path


def resample(x: np.ndarray, sr_in: int, sr_out: int) -> np.ndarray:
    if sr_in == sr_out:
        return x
    g = gcd(int(sr_in), int(sr_out))
    return resample_poly(x, sr_out // g, sr_in // g)


def load_audio(path, sample_rate: int = 16000) -> Waveform:
    data, sr = read_wav(path)
    if data.ndim == 2:
        data = data.mean(axis=1)
    data = resample(data, sr, sample_rate)
    peak = np.abs(data).max() if data.size else 0.0
    if peak > 1.0:
        data = data / peak
    return Waveform(data, sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


_MEL_CACHE: dict = {}


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int, fmin: float = 0.0, fmax: float | None = None):
    """Triangular HTK-style filters, shape (n_mels, n_fft // 2 + 1)."""
    key = (n_mels, n_fft, sample_rate, fmin, fmax)
    if key in _MEL_CACHE:
        return _MEL_CACHE[key]
    fmax = sample_rate / 2 if fmax is None else fmax
    bins = np.linspace(0, sample_rate / 2, n_fft // 2 + 1)
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, bins.size))
    for m in range(n_mels):
        lo, mid, hi = edges[m : m + 3]
        up = (bins - lo) / (mid - lo)
        down = (hi - bins) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    _MEL_CACHE[key] = fb
    return fb


def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n = (len(x) - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def compute_features(w: Waveform, cfg: FeatureConfig = FeatureConfig()) -> FeatureSequence:
    x = np.asarray(w.samples, dtype=np.float64)
    if w.sample_rate != cfg.sample_rate:
        x = resample(x, w.sample_rate, cfg.sample_rate)
    if len(x) < cfg.frame_len:
        raise InputError(f"waveform of {len(x)} samples is shorter than one frame ({cfg.frame_len})")
    frames = frame_signal(x, cfg.frame_len, cfg.hop)
    if cfg.mode == "logmel":
        spec = np.fft.rfft(frames * np.hanning(cfg.frame_len), n=cfg.n_fft, axis=1)
        power = spec.real**2 + spec.imag**2
        fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, cfg.fmax)
        feats = np.log(np.maximum(power @ fb.T, LOG_FLOOR))
    else:
        feats = frames.copy()
    if cfg.normalize:
        feats = feats - feats.mean(axis=0, keepdims=True)
        feats = feats / np.maximum(feats.std(axis=0, keepdims=True), 1e-5)
    return FeatureSequence(feats.astype(np.float32), cfg.frame_shift, cfg.fingerprint())


def n_frames(n_samples: int, frame_len: int, hop: int) -> int:
    return (n_samples - frame_len) // hop + 1


class FeatureCache:
    """Memoizes features per (audio path, config)."""

    def __init__(self, cfg: FeatureConfig):
        self.cfg = cfg
        self._store: dict[str, np.ndarray] = {}

    def __len__(self):
        return len(self._store)

    def get(self, path) -> np.ndarray:
        key = os.fspath(path)
        feats = self._store.get(key)
        if feats is None:
            feats = compute_features(load_audio(key, self.cfg.sample_rate), self.cfg).frames
            self._store[key] = feats
        return feats
