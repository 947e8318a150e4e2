"""Toy-scale encoder pre-training on a framewise phone-recognition task.

The ASR manifest is JSON lines with ``id``, ``audio_path`` and ``targets``
(one phone index per feature frame). A linear probe on the encoder outputs
is trained with framewise cross-entropy; the encoder weights are the product.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError, FormatError
from .evaluation import pad_features
from .frontend import FeatureCache, FeatureConfig, n_frames, write_wav
from .model import Encoder, EncoderConfig
from .synth import MockTts, TtsVoice, stable_hash
from .toydata import PHONES, phone_strings


@dataclass(frozen=True)
class AsrUtterance:
    id: str
    audio_path: str
    targets: tuple[int, ...]


@dataclass
class AsrManifest:
    utterances: list[AsrUtterance]
    n_classes: int
    root: Path | None = None

    def __len__(self):
        return len(self.utterances)

    def resolve(self, u: AsrUtterance) -> Path:
        p = Path(u.audio_path)
        return p if p.is_absolute() or self.root is None else self.root / p


def load_asr_manifest(path, n_classes: int | None = None) -> AsrManifest:
    path = Path(path)
    utts = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"row {i}: invalid JSON: {exc}") from None
        if not d.get("targets"):
            raise FormatError(f"row {i} (id={d.get('id')!r}): missing framewise targets")
        if "id" not in d or "audio_path" not in d:
            raise FormatError(f"row {i}: needs id and audio_path")
        utts.append(AsrUtterance(str(d["id"]), str(d["audio_path"]), tuple(int(t) for t in d["targets"])))
    if not utts:
        raise FormatError(f"{path}: empty ASR manifest")
    k = n_classes or 1 + max(max(u.targets) for u in utts)
    return AsrManifest(utts, k, path.parent)


def save_asr_manifest(m: AsrManifest, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for u in m.utterances:
            fh.write(json.dumps({"id": u.id, "audio_path": u.audio_path, "targets": list(u.targets)}) + "\n")
    return path


def make_toy_asr_corpus(
    out_dir,
    n_utterances: int = 200,
    voices: Sequence[TtsVoice] | None = None,
    seed: int = 0,
    feature_cfg: FeatureConfig = FeatureConfig(),
    phones: str = PHONES,
) -> AsrManifest:
    """Render random phone strings with the mock TTS and label every feature
    frame with the phone under its centre sample."""
    out_dir = Path(out_dir)
    tts = MockTts(voices=list(voices)) if voices else MockTts()
    tts.drop_prob = 0.0
    utts = []
    for i, text in enumerate(phone_strings(n_utterances, seed, phones=phones)):
        v = tts.voices[i % len(tts.voices)]
        wav, align = tts.synthesize_aligned(text, v)
        rel = f"{v.voice_id}/{stable_hash(text, i)}.wav"
        (out_dir / v.voice_id).mkdir(parents=True, exist_ok=True)
        write_wav(out_dir / rel, wav, tts.sample_rate)
        per_sample = np.empty(len(wav), dtype=int)
        for ch, a, b in align:
            per_sample[a:b] = phones.index(ch)
        t = n_frames(len(wav), feature_cfg.frame_len, feature_cfg.hop)
        centres = np.arange(t) * feature_cfg.hop + feature_cfg.frame_len // 2
        utts.append(AsrUtterance(f"asr-{i:05d}", rel, tuple(per_sample[centres].tolist())))
    m = AsrManifest(utts, len(phones), out_dir)
    save_asr_manifest(m, out_dir / "asr_manifest.jsonl")
    return m


@dataclass(frozen=True)
class PretrainConfig:
    lr: float = 3e-3
    batch_size: int = 16
    epochs: int = 5
    seed: int = 0
    heldout_fraction: float = 0.2


@dataclass
class PretrainResult:
    encoder_state: dict
    probe_state: dict
    initial_heldout_loss: float
    final_heldout_loss: float
    final_heldout_accuracy: float
    losses: list[float] = field(default_factory=list)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save({"encoder_state": self.encoder_state, "probe_state": self.probe_state}, path)
        return path


def _downsample_targets(targets: Sequence[int], factor: int, t_out: int) -> torch.Tensor:
    t = len(targets)
    idx = np.minimum(np.arange(t_out) * factor + factor // 2, t - 1)
    return torch.as_tensor(np.asarray(targets)[idx], dtype=torch.long)


def _framewise(encoder, probe, feats, targets, factor):
    x, lengths = pad_features(feats)
    h, hl = encoder(x, lengths)
    logits = probe(h)
    tgt = torch.full(h.shape[:2], -100, dtype=torch.long)
    for i, tg in enumerate(targets):
        n = int(hl[i])
        tgt[i, :n] = _downsample_targets(tg, factor, n)
    loss = F.cross_entropy(logits.reshape(-1, logits.size(-1)), tgt.reshape(-1), ignore_index=-100)
    valid = tgt != -100
    acc = (logits.argmax(-1) == tgt)[valid].float().mean()
    return loss, float(acc)


def pretrain_encoder(
    asr: AsrManifest,
    encoder_cfg: EncoderConfig = EncoderConfig(),
    feature_cfg: FeatureConfig = FeatureConfig(),
    cfg: PretrainConfig = PretrainConfig(),
    encoder: Encoder | None = None,
) -> PretrainResult:
    """Train ``encoder`` (or a fresh seeded one) with a framewise linear probe.

    The last ``heldout_fraction`` of utterances is held out to measure the
    probe loss before and after training.
    """
    if encoder_cfg.input_dim != feature_cfg.dim:
        raise ConfigError("encoder input_dim does not match the feature config")
    if any(not u.targets for u in asr.utterances):
        raise FormatError("every utterance needs framewise targets")
    cache = FeatureCache(feature_cfg)
    feats = [cache.get(asr.resolve(u)) for u in asr.utterances]
    for u, f in zip(asr.utterances, feats):
        if len(u.targets) != f.shape[0]:
            raise FormatError(f"{u.id}: {len(u.targets)} targets for {f.shape[0]} frames")
    targets = [u.targets for u in asr.utterances]
    n_held = max(1, int(round(cfg.heldout_fraction * len(feats))))
    tr_idx = list(range(len(feats) - n_held))
    ho = (feats[-n_held:], targets[-n_held:])

    with torch.random.fork_rng():
        torch.manual_seed(cfg.seed)
        if encoder is None:
            encoder = Encoder(encoder_cfg)
        probe = nn.Linear(encoder_cfg.output_dim, asr.n_classes)
    factor = encoder_cfg.downsampling
    opt = torch.optim.Adam(list(encoder.parameters()) + list(probe.parameters()), lr=cfg.lr)
    gen = torch.Generator().manual_seed(cfg.seed)

    with torch.no_grad():
        init_loss, _ = _framewise(encoder, probe, *ho, factor)
    losses = []
    for _ in range(cfg.epochs):
        order = torch.randperm(len(tr_idx), generator=gen).tolist()
        for i in range(0, len(order), cfg.batch_size):
            idx = [tr_idx[j] for j in order[i : i + cfg.batch_size]]
            loss, _ = _framewise(encoder, probe, [feats[j] for j in idx], [targets[j] for j in idx], factor)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
    with torch.no_grad():
        final_loss, final_acc = _framewise(encoder, probe, *ho, factor)
    return PretrainResult(
        copy.deepcopy(encoder.state_dict()),
        copy.deepcopy(probe.state_dict()),
        float(init_loss),
        float(final_loss),
        final_acc,
        losses,
    )
