"""Seeded training loops, best-metric tracking and cross-validation."""
from __future__ import annotations

import copy
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .corpus import Manifest, concat_datasets, make_folds, records_for_transcripts, upsample
from .errors import ConfigError, DivergenceError, InputError
from .evaluation import AggregateMetrics, EvalConfig, aggregate, evaluate, pad_features
from .frontend import FeatureCache

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 32
    max_epochs: int = 10
    seed: int = 0
    optimizer: str = "sgd"
    momentum: float = 0.9
    grad_clip: float | None = 5.0
    eval_every: int = 1
    eval_beam_width: int = 8
    max_steps: int | None = None  # optimizer-step budget; training stops once reached

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.max_epochs < 0 or self.eval_every <= 0:
            raise ConfigError("lr, batch_size, eval_every must be positive and max_epochs >= 0")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_accuracy: float | None = None
    test_loss: float | None = None
    steps: int = 0
    wall_clock: float = 0.0


@dataclass
class RunHistory:
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.epochs)

    def to_jsonl(self, include_timing: bool = True) -> str:
        lines = []
        for e in self.epochs:
            d = asdict(e)
            if not include_timing:
                d.pop("wall_clock")
            d["seed"] = self.seed
            lines.append(json.dumps(d, sort_keys=True))
        return "".join(line + "\n" for line in lines)

    def save(self, path, include_timing: bool = True) -> Path:
        path = Path(path)
        path.write_text(self.to_jsonl(include_timing))
        return path

    @classmethod
    def load(cls, path) -> "RunHistory":
        epochs, seed = [], None
        for line in Path(path).read_text().splitlines():
            d = json.loads(line)
            seed = d.pop("seed", seed)
            epochs.append(EpochRecord(**d))
        return cls(seed if seed is not None else 0, epochs)


def feature_store(model, cache=None) -> FeatureCache:
    if cache is not None:
        if cache.cfg != model.feature_cfg:
            raise ConfigError("feature cache was built with a different feature config")
        return cache
    return FeatureCache(model.feature_cfg)


def _optimizer(model, cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return torch.optim.Adam(model.parameters(), lr=cfg.lr)
    return torch.optim.SGD(model.parameters(), lr=cfg.lr, momentum=cfg.momentum)


def steps_per_epoch(n_records: int, batch_size: int) -> int:
    return -(-n_records // batch_size)


def train(
    model,
    train_manifest: Manifest,
    test_manifest: Manifest | None,
    cfg: TrainConfig,
    cache: FeatureCache | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
):
    """Train in place and return ``(model, history)``.

    Shuffling and any torch randomness derive from ``cfg.seed`` only, so the
    same seed, data and initial weights reproduce the history exactly. The
    test set (if given) is evaluated every ``eval_every`` epochs and after
    the last one. With ``max_steps`` set, the final epoch may be partial.
    """
    if len(train_manifest) == 0:
        raise InputError("empty training manifest")
    if train_manifest.variant != model.vocab.variant:
        raise InputError("training manifest label variant does not match the model")
    history = RunHistory(cfg.seed)
    if cfg.max_epochs == 0 or cfg.max_steps == 0:
        return model, history

    store = feature_store(model, cache)
    feats = [store.get(train_manifest.resolve(r)) for r in train_manifest.records]
    labels = [r.label for r in train_manifest.records]
    opt = _optimizer(model, cfg)
    gen = torch.Generator().manual_seed(cfg.seed)
    torch.manual_seed(cfg.seed)
    last_good = copy.deepcopy(model.state_dict())
    eval_cfg = EvalConfig(beam_width=cfg.eval_beam_width)
    t0 = time.perf_counter()
    budget = cfg.max_steps if cfg.max_steps is not None else float("inf")
    done_steps = 0

    for epoch in range(1, cfg.max_epochs + 1):
        model.train()
        order = torch.randperm(len(feats), generator=gen).tolist()
        total, count, steps = 0.0, 0, 0
        for i in range(0, len(order), cfg.batch_size):
            if done_steps >= budget:
                break
            idx = order[i : i + cfg.batch_size]
            x, lengths = pad_features([feats[j] for j in idx])
            loss = model.loss(x, lengths, [labels[j] for j in idx])
            if not torch.isfinite(loss):
                model.load_state_dict(last_good)
                raise DivergenceError(f"non-finite loss at epoch {epoch}, step {steps}", epoch, last_good)
            opt.zero_grad()
            loss.backward()
            if cfg.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            opt.step()
            total += float(loss.detach()) * len(idx)
            count += len(idx)
            steps += 1
            done_steps += 1
        last = epoch == cfg.max_epochs or done_steps >= budget
        rec = EpochRecord(epoch, total / count, steps=steps)
        if test_manifest is not None and (epoch % cfg.eval_every == 0 or last):
            m = evaluate(model, test_manifest, eval_cfg, store, seed=cfg.seed)
            rec.test_accuracy, rec.test_loss = m.accuracy, m.loss
        rec.wall_clock = time.perf_counter() - t0
        history.epochs.append(rec)
        last_good = copy.deepcopy(model.state_dict())
        log.info(
            "epoch %d train_loss %.4f test_acc %s test_loss %s",
            epoch, rec.train_loss, rec.test_accuracy, rec.test_loss,
        )
        if on_epoch:
            on_epoch(rec)
        if last:
            break
    return model, history


def track_best(h: RunHistory) -> tuple[float, float]:
    """Best test accuracy (max) and best test loss (min), tracked independently."""
    accs = [e.test_accuracy for e in h.epochs if e.test_accuracy is not None]
    losses = [e.test_loss for e in h.epochs if e.test_loss is not None and not math.isnan(e.test_loss)]
    if not accs or not losses:
        raise InputError("history has no evaluated epochs")
    return max(accs), min(losses)


@dataclass
class FoldResult:
    fold: int
    best_accuracy: float
    best_loss: float
    n_train: int
    steps_per_epoch: int
    history: RunHistory


@dataclass
class CrossValidationResult:
    folds: list[FoldResult]
    accuracy: AggregateMetrics
    loss: AggregateMetrics


def cross_validate(
    manifest: Manifest,
    n_folds: int,
    cfg: TrainConfig,
    build: Callable[[int], object],
    augment: Manifest | None = None,
    *,
    upsample_to: int | None = None,
    fold_seed: int = 0,
    cache: FeatureCache | None = None,
) -> CrossValidationResult:
    """Per-fold training with best-metric tracking.

    ``build(fold)`` returns a freshly initialized model. When ``augment`` is
    given, its records whose transcripts belong to the fold's training side
    are appended to the training set. Without augmentation the training set
    is upsampled to ``upsample_to`` records, if given; pass the augmented
    arm's size to equalize optimizer steps per epoch.
    """
    results = []
    for f, (tr, te) in enumerate(make_folds(manifest, n_folds, fold_seed)):
        if augment is not None:
            extra = records_for_transcripts(augment, {r.transcript for r in tr.records})
            tr = concat_datasets(tr, extra)
        elif upsample_to:
            tr = upsample(tr, upsample_to(f, tr) if callable(upsample_to) else upsample_to)
        model = build(f)
        _, hist = train(model, tr, te, cfg, cache=cache)
        acc, loss = track_best(hist)
        results.append(FoldResult(f, acc, loss, len(tr), steps_per_epoch(len(tr), cfg.batch_size), hist))
    return CrossValidationResult(
        results,
        aggregate(r.best_accuracy for r in results),
        aggregate(r.best_loss for r in results),
    )


def augmented_sizes(manifest: Manifest, augment: Manifest, n_folds: int, fold_seed: int = 0) -> list[int]:
    """Training-set size of each fold once ``augment`` is appended."""
    out = []
    for tr, _ in make_folds(manifest, n_folds, fold_seed):
        extra = records_for_transcripts(augment, {r.transcript for r in tr.records})
        out.append(len(tr) + len(extra))
    return out
