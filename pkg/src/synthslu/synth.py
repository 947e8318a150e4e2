"""Multi-speaker TTS corpus generation.

Every transcript of a labeled text dataset is read out by every selected voice;
the synthetic record inherits the transcript's label. Backends plug in through
a small adapter contract: given ``(text, voice)`` return a mono waveform at
the adapter's sample rate.

The bundled :class:`MockTts` is a deterministic source-filter toy: each
character owns a triad of formant frequencies, the voice supplies a harmonic
source at its fundamental frequency plus its own formant scaling, accent and
timbre, and a little seeded noise stands in for vocoder artifacts.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import os
import shlex
import string
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .corpus import SYNTHETIC, Manifest, UtteranceRecord, save_manifest
from .errors import ConfigError, FormatError, InputError, ParseError, SynthesisError
from .frontend import read_wav, write_wav
from .semantics import FIXED, OPEN, SemanticLabel, parse_label, serialize_label

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 16000
SYNTHETIC_STYLE = "synthetic"
REAL_STYLE = "real"

# characters without a formant entry are rendered as silence
VOICED = string.ascii_lowercase + string.digits
_QUIET = {" ": 0.0}
_PERIOD_TABLE = 2048


def stable_hash(*parts, n: int = 16) -> str:
    h = hashlib.sha1("\x1f".join(map(str, parts)).encode("utf-8"))
    return h.hexdigest()[:n]


def _seed_of(*parts) -> int:
    return int(stable_hash(*parts, n=16), 16)


def _formant_table(seed: int = 1234) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    table = {}
    for ch in VOICED:
        table[ch] = np.array(
            [rng.uniform(250, 900), rng.uniform(900, 2300), rng.uniform(2300, 3600)]
        )
    return table


FORMANTS = _formant_table()


@dataclass(frozen=True)
class TtsVoice:
    """A synthetic speaker.

    For the mock backend ``style_params`` holds ``f0`` (Hz), ``rate``
    (chars/s), ``timbre_seed``, ``formant_scale``, ``bandwidth`` (Hz),
    ``tilt`` (dB/kHz), ``noise`` and ``accent``.
    """

    voice_id: str
    backend: str = "mock"
    style_params: Mapping[str, float] = field(default_factory=dict, hash=False)
    style: str = SYNTHETIC_STYLE

    def param(self, name, default=None):
        return self.style_params.get(name, default)


class TtsAdapter(Protocol):
    name: str
    voices: Sequence[TtsVoice]
    sample_rate: int

    def synthesize(self, text: str, voice: TtsVoice) -> np.ndarray: ...


def default_voices(n_synthetic: int = 22, n_real: int = 8, seed: int = 0) -> list[TtsVoice]:
    """The default mock inventory: ``n_synthetic`` synthetic-style and
    ``n_real`` real-style voices.

    Fundamental frequencies sit on one shared grid (so any two voices differ
    by several percent) and are interleaved between the styles; formant
    scales cover one shared range. The styles differ in timbre: synthetic
    voices have narrow formants, flat tilt and more artifact noise, real ones
    wide formants, a steeper tilt and little noise.
    """
    n = n_synthetic + n_real
    rng = np.random.default_rng(seed)
    f0_grid = np.geomspace(85.0, 260.0, n)
    # spread real-style voices evenly across the pitch grid
    real_slots = set(np.round(np.linspace(1, n - 2, n_real)).astype(int).tolist()) if n_real else set()
    while len(real_slots) < n_real:
        real_slots.add(int(rng.integers(n)))
    scales = np.linspace(0.9, 1.1, n)
    rng.shuffle(scales)
    voices, i_syn, i_real = [], 0, 0
    for slot in range(n):
        real = slot in real_slots
        params = {
            "f0": float(f0_grid[slot]),
            "rate": float(rng.uniform(12.0, 16.0)),
            "timbre_seed": int(rng.integers(2**31)),
            "formant_scale": float(scales[slot]),
            "bandwidth": float(rng.uniform(150, 210) if real else rng.uniform(70, 110)),
            "tilt": float(rng.uniform(-6.0, -4.0) if real else rng.uniform(-2.0, 0.0)),
            "noise": 0.004 if real else 0.02,
            "accent": 0.03,
        }
        if real:
            vid, style = f"real{i_real:02d}", REAL_STYLE
            i_real += 1
        else:
            vid, style = f"syn{i_syn:02d}", SYNTHETIC_STYLE
            i_syn += 1
        voices.append(TtsVoice(vid, "mock", params, style))
    voices.sort(key=lambda v: (v.style != SYNTHETIC_STYLE, v.voice_id))
    return voices


@dataclass
class MockTts:
    """Deterministic toy TTS. ``drop_prob`` is the per-utterance chance of
    skipping one character, a stand-in for mispronunciations."""

    voices: Sequence[TtsVoice] = field(default_factory=default_voices)
    sample_rate: int = DEFAULT_SAMPLE_RATE
    drop_prob: float = 0.02
    f0_jitter: float = 0.01
    name: str = "mock"

    def voice(self, voice_id: str) -> TtsVoice:
        for v in self.voices:
            if v.voice_id == voice_id:
                return v
        raise ConfigError(f"unknown voice {voice_id!r}")

    def synthesize(self, text: str, voice: TtsVoice) -> np.ndarray:
        return self.synthesize_aligned(text, voice)[0]

    def synthesize_aligned(self, text: str, voice: TtsVoice):
        """Render ``text`` and return ``(waveform, alignment)`` where alignment
        lists ``(char, start_sample, end_sample)`` per rendered character."""
        if not text:
            raise InputError("cannot synthesize empty text")
        p = voice.style_params
        sr = self.sample_rate
        rng = np.random.default_rng(_seed_of(voice.voice_id, p.get("timbre_seed", 0), text))
        chars = list(text.lower())
        if len(chars) > 1 and rng.random() < self.drop_prob:
            del chars[int(rng.integers(len(chars)))]

        seg = max(1, int(round(sr / float(p.get("rate", 14.0)))))
        n = seg * len(chars)
        f0 = float(p.get("f0", 120.0)) * (1.0 + rng.uniform(-self.f0_jitter, self.f0_jitter))
        n_harm = max(1, int(0.45 * sr / f0))
        harm = f0 * np.arange(1, n_harm + 1)

        vrng = np.random.default_rng(int(p.get("timbre_seed", 0)))
        accent = 1.0 + float(p.get("accent", 0.03)) * vrng.standard_normal((len(VOICED), 3))
        weights = np.array([1.0, 0.7, 0.45]) * vrng.uniform(0.7, 1.3, 3)
        scale = float(p.get("formant_scale", 1.0))
        bw = float(p.get("bandwidth", 90.0))
        tilt = 10 ** (float(p.get("tilt", -3.0)) * harm / 1000.0 / 20.0)

        # spectral envelope per character, sampled at the harmonics
        env = np.zeros((len(chars), n_harm))
        for i, ch in enumerate(chars):
            if ch in _QUIET:
                continue
            k = VOICED.find(ch)
            if k < 0:
                continue
            formants = FORMANTS[ch] * scale * accent[k]
            g = np.exp(-0.5 * ((harm[None, :] - formants[:, None]) / bw) ** 2)
            env[i] = (weights[:, None] * g).sum(0) * tilt
        # one pitch period per character, built by inverse FFT, then read out
        # at the running phase; the envelope cross-fades between neighbouring
        # character centres
        m = _PERIOD_TABLE
        phases = rng.uniform(0, 2 * np.pi, n_harm)
        spec = np.zeros((len(chars), m // 2 + 1), dtype=np.complex128)
        spec[:, 1 : n_harm + 1] = (m / 2) * env * (-1j * np.exp(1j * phases))[None, :]
        tables = np.fft.irfft(spec, n=m, axis=1)
        t = np.arange(n)
        p_pos = ((t * f0 / sr) % 1.0) * m
        i0 = p_pos.astype(int) % m
        i1 = (i0 + 1) % m
        w = p_pos - np.floor(p_pos)
        pos = np.clip((t + 0.5) / seg - 0.5, 0.0, len(chars) - 1.0)
        left = np.minimum(pos.astype(int), len(chars) - 1)
        right = np.minimum(left + 1, len(chars) - 1)
        frac = pos - left

        def lookup(rows):
            return tables[rows, i0] * (1.0 - w) + tables[rows, i1] * w

        y = lookup(left) * (1.0 - frac) + lookup(right) * frac
        peak = np.abs(y).max()
        if peak > 0:
            y = y / peak * 0.8
        y = y + float(p.get("noise", 0.01)) * rng.standard_normal(n)
        y = np.clip(y, -1.0, 1.0)
        align = [(ch, i * seg, (i + 1) * seg) for i, ch in enumerate(chars)]
        return y.astype(np.float64), align


@dataclass
class CallableTts:
    """Wraps a plug-in callable ``fn(text, voice_id) -> (waveform, sample_rate)``.

    Waveforms at a different rate are resampled to ``sample_rate``.
    """

    fn: Callable[[str, str], tuple[np.ndarray, int]]
    voices: Sequence[TtsVoice]
    sample_rate: int = DEFAULT_SAMPLE_RATE
    name: str = "callable"

    def synthesize(self, text: str, voice: TtsVoice) -> np.ndarray:
        from .frontend import resample

        if not text:
            raise InputError("cannot synthesize empty text")
        try:
            wav, sr = self.fn(text, voice.voice_id)
        except SynthesisError:
            raise
        except Exception as exc:
            raise SynthesisError(f"{self.name} failed: {exc}", text, voice.voice_id) from exc
        wav = np.asarray(wav, dtype=np.float64)
        if wav.ndim != 1 or not np.all(np.isfinite(wav)) or wav.size == 0:
            raise SynthesisError(f"{self.name} returned an invalid waveform", text, voice.voice_id)
        return np.clip(resample(wav, sr, self.sample_rate), -1.0, 1.0)


def command_tts(command: str, voices: Sequence[TtsVoice], sample_rate: int = DEFAULT_SAMPLE_RATE) -> CallableTts:
    """Adapter around an external program.

    ``command`` is a template with ``{text}``, ``{voice_id}`` and ``{out}``
    placeholders; the program must write a WAV file to ``{out}``.
    """

    def run(text: str, voice_id: str):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, "out.wav")
            argv = [a.format(text=text, voice_id=voice_id, out=out) for a in shlex.split(command)]
            proc = subprocess.run(argv, capture_output=True, text=True)
            if proc.returncode != 0:
                raise SynthesisError(
                    f"command exited with {proc.returncode}: {proc.stderr.strip()[:200]}", text, voice_id
                )
            return read_wav(out)

    return CallableTts(run, voices, sample_rate, name=f"command:{shlex.split(command)[0]}")


def synthesize(text: str, voice: TtsVoice, adapter: TtsAdapter | None = None) -> np.ndarray:
    adapter = adapter or MockTts(voices=[voice])
    return adapter.synthesize(text, voice)


@dataclass(frozen=True)
class TextRow:
    transcript: str
    label: SemanticLabel


def load_text_dataset(path, variant: str | None = None) -> list[TextRow]:
    """CSV with ``transcript,label`` columns (label in its string form)."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if set(reader.fieldnames or ()) != {"transcript", "label"}:
            raise FormatError(f"{path}: expected columns transcript,label; got {reader.fieldnames}")
        for i, row in enumerate(reader, start=2):
            v = variant or (FIXED if row["label"].count("|") == 2 else OPEN)
            try:
                rows.append(TextRow(row["transcript"], parse_label(row["label"], v)))
            except ParseError as exc:
                raise FormatError(f"row {i}: {exc}") from None
    return rows


def save_text_dataset(rows: Sequence[TextRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["transcript", "label"])
        for r in rows:
            w.writerow([r.transcript, serialize_label(r.label)])
    return path


@dataclass
class SynthesisPlan:
    source: Sequence[TextRow]
    voices: Sequence[TtsVoice]
    output_dir: Path
    adapter: TtsAdapter = None
    name: str = "synthetic"

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if not self.voices:
            raise ConfigError("synthesis plan needs at least one voice")
        if self.adapter is None:
            self.adapter = MockTts(voices=list(self.voices))
        known = {v.voice_id for v in self.adapter.voices}
        missing = [v.voice_id for v in self.voices if v.voice_id not in known]
        if missing:
            raise ConfigError(f"voices not provided by adapter {self.adapter.name}: {missing}")
        variants = {r.label.variant for r in self.source}
        if len(variants) > 1:
            raise ConfigError(f"mixed label variants in source: {sorted(variants)}")


@dataclass
class SynthesisReport:
    completed: list[tuple[int, str]] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    failed: list[tuple[int, str, str]] = field(default_factory=list)


class CorpusSynthesisError(SynthesisError):
    def __init__(self, message, report: SynthesisReport):
        super().__init__(message)
        self.report = report


def audio_relpath(voice_id: str, transcript: str) -> str:
    return f"{voice_id}/{stable_hash(transcript)}.wav"


def synthesize_corpus(plan: SynthesisPlan, workers: int = 1) -> Manifest:
    """Render every (transcript, voice) pair and return the synthetic manifest.

    Files are content-addressed, so a re-run only renders what is missing.
    Records are ordered by (transcript index, voice index). The manifest is
    also written to ``<output_dir>/manifest.csv``.
    """
    out = plan.output_dir
    out.mkdir(parents=True, exist_ok=True)
    sr = plan.adapter.sample_rate
    jobs = [(ti, row, vi, v) for ti, row in enumerate(plan.source) for vi, v in enumerate(plan.voices)]
    report = SynthesisReport()

    def render(job):
        ti, row, _, v = job
        rel = audio_relpath(v.voice_id, row.transcript)
        dest = out / rel
        if dest.exists():
            return "skipped"
        wav = plan.adapter.synthesize(row.transcript, v)
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_wav(dest, wav, sr)
        return "completed"

    def handle(job, fut_result):
        ti, _, _, v = job
        getattr(report, fut_result).append((ti, v.voice_id))

    if workers <= 1:
        for job in jobs:
            try:
                handle(job, render(job))
            except SynthesisError as exc:
                report.failed.append((job[0], job[3].voice_id, str(exc)))
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(job, pool.submit(render, job)) for job in jobs]
            for job, fut in futures:
                try:
                    handle(job, fut.result())
                except SynthesisError as exc:
                    report.failed.append((job[0], job[3].voice_id, str(exc)))
                    for _, other in futures:
                        other.cancel()
                    break
    if report.failed:
        ti, vid, msg = report.failed[0]
        raise CorpusSynthesisError(
            f"synthesis aborted at transcript {ti} / voice {vid}: {msg} "
            f"({len(report.completed)} rendered, {len(report.skipped)} already present)",
            report,
        )
    log.info("synthesized %d files, %d already present", len(report.completed), len(report.skipped))

    variant = plan.source[0].label.variant if plan.source else FIXED
    records = [
        UtteranceRecord(
            id=f"{v.voice_id}-{ti:05d}",
            audio_path=audio_relpath(v.voice_id, row.transcript),
            transcript=row.transcript,
            label=row.label,
            speaker_id=v.voice_id,
            provenance=SYNTHETIC,
        )
        for ti, row, _, v in jobs
    ]
    manifest = Manifest(tuple(records), variant=variant, sample_rate=sr, name=plan.name, root=out)
    save_manifest(manifest, out / "manifest.csv")
    return manifest


def render_voices(rows: Sequence[TextRow], voices: Sequence[TtsVoice], output_dir, *, provenance: str,
                  adapter: TtsAdapter | None = None, name: str = "corpus") -> Manifest:
    """Like :func:`synthesize_corpus` but tags records with ``provenance``.

    Used to build stand-in "real" corpora from real-style mock voices.
    """
    from dataclasses import replace

    m = synthesize_corpus(SynthesisPlan(rows, voices, output_dir, adapter, name=name))
    if provenance == SYNTHETIC:
        return m
    m = m.with_records(replace(r, provenance=provenance) for r in m.records)
    save_manifest(m, Path(output_dir) / "manifest.csv")
    return m
