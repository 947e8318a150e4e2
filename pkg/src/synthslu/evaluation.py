"""Exact-match accuracy, loss evaluation and multi-run statistics."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import torch

from .corpus import Manifest
from .errors import AudioLoadError, InputError, LabelError, ParseError
from .semantics import SemanticLabel, labels_equal, parse_label

log = logging.getLogger(__name__)

MAX_UNREADABLE_FRACTION = 0.01


@dataclass
class RunMetrics:
    accuracy: float
    loss: float
    n_utterances: int
    seed: int | None = None
    failures: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise InputError(f"accuracy {self.accuracy} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AggregateMetrics:
    mean: float
    std: float
    n_runs: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EvalConfig:
    beam_width: int = 8
    max_len: int | None = None
    batch_size: int = 64


def _as_label(pred, variant: str) -> SemanticLabel | None:
    if pred is None or not isinstance(pred, str):
        return pred
    try:
        return parse_label(pred, variant)
    except ParseError:
        return None


def exact_match_accuracy(predictions: Sequence, references: Sequence[SemanticLabel]) -> float:
    """Fraction of utterances whose prediction equals the reference exactly.

    Predictions may be labels, raw decoder strings or None; strings that do
    not parse count as wrong.
    """
    if len(predictions) != len(references):
        raise InputError(f"{len(predictions)} predictions vs {len(references)} references")
    if not references:
        raise InputError("no utterances to score")
    hits = 0
    for pred, ref in zip(predictions, references):
        lab = _as_label(pred, ref.variant)
        hits += lab is not None and labels_equal(lab, ref)
    return hits / len(references)


def _batches(n: int, size: int):
    for i in range(0, n, size):
        yield range(i, min(n, i + size))


def pad_features(arrays: Sequence[np.ndarray]):
    lengths = torch.tensor([a.shape[0] for a in arrays], dtype=torch.long)
    out = torch.zeros(len(arrays), int(lengths.max()), arrays[0].shape[1])
    for i, a in enumerate(arrays):
        out[i, : a.shape[0]] = torch.from_numpy(np.asarray(a, dtype=np.float32))
    return out, lengths


@torch.no_grad()
def evaluate(model, manifest: Manifest, cfg: EvalConfig = EvalConfig(), cache=None, seed: int | None = None) -> RunMetrics:
    """Beam-search exact-match accuracy and mean per-utterance loss.

    Unreadable audio counts as an error for that utterance; more than 1%
    unreadable aborts. Utterances whose reference cannot be encoded with the
    model's vocabulary are left out of the loss only.
    """
    from .train import feature_store

    if len(manifest) == 0:
        raise InputError("empty evaluation manifest")
    if manifest.variant != model.vocab.variant:
        raise InputError(f"manifest is {manifest.variant}-slot but model expects {model.vocab.variant}-slot")
    store = feature_store(model, cache)
    was_training = model.training
    model.eval()
    feats, failures = [], []
    for r in manifest.records:
        try:
            feats.append(store.get(manifest.resolve(r)))
        except (AudioLoadError, InputError) as exc:
            feats.append(None)
            failures.append(f"{r.id}: {exc}")
    if len(failures) > MAX_UNREADABLE_FRACTION * len(manifest):
        raise AudioLoadError(f"{len(failures)}/{len(manifest)} utterances unreadable, e.g. {failures[0]}")
    for f in failures:
        log.warning("evaluation skipped %s", f)

    ok = [i for i, f in enumerate(feats) if f is not None]
    preds: list = [None] * len(manifest)
    losses = []
    try:
        for idx in _batches(len(ok), cfg.batch_size):
            ids = [ok[i] for i in idx]
            x, lengths = pad_features([feats[i] for i in ids])
            labels = [manifest.records[i].label for i in ids]
            kw = {"beam_width": cfg.beam_width}
            if cfg.max_len:
                kw["max_len"] = cfg.max_len
            for i, p in zip(ids, model.predict(x, lengths, **kw)):
                preds[i] = p
            try:
                losses.extend(model.per_utterance_loss(x, lengths, labels).tolist())
            except (InputError, LabelError):
                for j, lab in zip(range(len(ids)), labels):
                    try:
                        losses.extend(model.per_utterance_loss(x[j : j + 1, : lengths[j]], lengths[j : j + 1], [lab]).tolist())
                    except (InputError, LabelError):
                        pass
    finally:
        model.train(was_training)
    acc = exact_match_accuracy(preds, [r.label for r in manifest.records])
    loss = float(np.mean(losses)) if losses else float("nan")
    return RunMetrics(acc, loss, len(manifest), seed, failures)


def aggregate(values: Iterable[float]) -> AggregateMetrics:
    """Mean and sample (n-1) standard deviation; std is 0 for one value."""
    vals = [float(v) for v in values]
    if not vals:
        raise InputError("nothing to aggregate")
    # clamp: the correctly rounded sum divided by n can still land one ulp
    # outside the data range
    mean = min(max(math.fsum(vals) / len(vals), min(vals)), max(vals))
    std = 0.0 if len(vals) == 1 else math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1))
    return AggregateMetrics(mean, std, len(vals))


def aggregate_runs(runs: Sequence[RunMetrics], metrics: Sequence[str] = ("accuracy", "loss")) -> dict[str, AggregateMetrics]:
    if not runs:
        raise InputError("no runs to aggregate")
    return {m: aggregate(getattr(r, m) for r in runs) for m in metrics}


def metrics_json(obj: Mapping) -> str:
    """Stable JSON text (sorted keys) so repeated runs write identical files."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
