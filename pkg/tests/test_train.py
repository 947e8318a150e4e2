import math

import pytest
import torch

from synthslu.corpus import make_folds
from synthslu.errors import ConfigError, DivergenceError, InputError
from synthslu.frontend import FeatureCache, FeatureConfig
from synthslu.model import AUTOREGRESSIVE, MAXPOOL, DecoderConfig, EncoderConfig, ModelConfig, build_model
from synthslu.semantics import build_vocabularies
from synthslu.train import (
    EpochRecord,
    RunHistory,
    TrainConfig,
    augmented_sizes,
    cross_validate,
    steps_per_epoch,
    track_best,
    train,
)

ENC = EncoderConfig(conv_channels=(8,), conv_kernels=(5,), pool=(4,), rnn_hidden=8)
DEC = DecoderConfig(hidden=16, embedding_dim=8, attention_dim=8, value_dim=8)
FAST = TrainConfig(lr=3e-3, optimizer="adam", batch_size=8, max_epochs=3)


def fresh(manifest, family=MAXPOOL, seed=0, vocab_from=None):
    vocab = build_vocabularies(vocab_from or manifest)
    return build_model(ModelConfig(family, ENC, DEC), vocab, seed=seed)


def test_config_validation():
    for kw in ({"lr": 0}, {"batch_size": 0}, {"max_epochs": -1}, {"optimizer": "lbfgs"}, {"max_steps": -1}):
        with pytest.raises(ConfigError):
            TrainConfig(**kw)


@pytest.mark.parametrize("family", [MAXPOOL, AUTOREGRESSIVE])
def test_same_seed_same_history(small_fixed_corpus, family):
    _, msyn, mreal = small_fixed_corpus
    cache = FeatureCache(FeatureConfig())
    runs = []
    for _ in range(2):
        model, hist = train(fresh(msyn, family, seed=1), msyn, mreal, FAST, cache)
        runs.append((hist.to_jsonl(include_timing=False), [p.detach().clone() for p in model.parameters()]))
    assert runs[0][0] == runs[1][0]
    for a, b in zip(runs[0][1], runs[1][1]):
        assert torch.equal(a, b)
    other = train(fresh(msyn, family, seed=1), msyn, mreal, TrainConfig(**{**FAST.__dict__, "seed": 5}), cache)[1]
    assert other.to_jsonl(include_timing=False) != runs[0][0]


def test_training_reduces_loss(small_fixed_corpus):
    _, msyn, _ = small_fixed_corpus
    _, hist = train(fresh(msyn), msyn, None, TrainConfig(lr=3e-3, optimizer="adam", batch_size=8, max_epochs=6))
    assert hist.epochs[-1].train_loss < hist.epochs[0].train_loss
    assert all(e.test_accuracy is None for e in hist.epochs)


def test_step_budget(small_fixed_corpus):
    _, msyn, mreal = small_fixed_corpus
    cfg = TrainConfig(lr=1e-3, optimizer="adam", batch_size=8, max_epochs=100, max_steps=7, eval_every=50)
    _, hist = train(fresh(msyn), msyn, mreal, cfg)
    per_epoch = steps_per_epoch(len(msyn), 8)
    assert sum(e.steps for e in hist.epochs) == 7
    assert len(hist) == math.ceil(7 / per_epoch)
    # the last (possibly partial) epoch is always evaluated
    assert hist.epochs[-1].test_accuracy is not None
    assert all(e.test_accuracy is None for e in hist.epochs[:-1])
    _, empty = train(fresh(msyn), msyn, mreal, TrainConfig(max_steps=0))
    assert len(empty) == 0


def test_eval_every(small_fixed_corpus):
    _, msyn, mreal = small_fixed_corpus
    cfg = TrainConfig(lr=1e-3, batch_size=16, max_epochs=3, eval_every=2)
    seen = []
    _, hist = train(fresh(msyn), msyn, mreal, cfg, on_epoch=seen.append)
    assert [e.test_accuracy is not None for e in hist.epochs] == [False, True, True]
    assert seen == hist.epochs


def test_input_validation(small_fixed_corpus, small_open_corpus):
    _, msyn, _ = small_fixed_corpus
    _, mopen = small_open_corpus
    with pytest.raises(InputError):
        train(fresh(msyn), msyn.with_records([]), None, FAST)
    with pytest.raises(InputError):
        train(fresh(msyn), mopen, None, FAST)


def test_divergence_restores_last_good(small_fixed_corpus, monkeypatch):
    _, msyn, _ = small_fixed_corpus
    model = fresh(msyn)
    real_loss = model.loss
    calls = {"n": 0}
    steps_one_epoch = steps_per_epoch(len(msyn), 8)
    snapshot = {}

    def flaky(*a, **kw):
        calls["n"] += 1
        if calls["n"] == steps_one_epoch + 1:
            snapshot.update({k: v.clone() for k, v in model.state_dict().items()})
        if calls["n"] == steps_one_epoch + 2:
            return torch.tensor(float("nan"))
        return real_loss(*a, **kw)

    monkeypatch.setattr(model, "loss", flaky)
    with pytest.raises(DivergenceError) as exc:
        train(model, msyn, None, FAST)
    assert exc.value.epoch == 2
    # weights are back at the end of epoch 1, before any epoch-2 update
    for k, v in model.state_dict().items():
        assert torch.equal(v, snapshot[k])
    assert set(exc.value.checkpoint) == set(snapshot)


def test_history_round_trip(tmp_path):
    h = RunHistory(3, [EpochRecord(1, 2.0, 0.5, 1.0, 4, 1.5), EpochRecord(2, 1.0, None, None, 4, 3.0)])
    back = RunHistory.load(h.save(tmp_path / "h.jsonl"))
    assert back == h
    stripped = RunHistory.load(h.save(tmp_path / "s.jsonl", include_timing=False))
    assert [e.wall_clock for e in stripped.epochs] == [0.0, 0.0]


def test_track_best_is_per_metric():
    h = RunHistory(0, [EpochRecord(1, 1.0, 0.2, 0.5), EpochRecord(2, 1.0, 0.6, 0.9), EpochRecord(3, 1.0, None, None)])
    assert track_best(h) == (0.6, 0.5)
    with pytest.raises(InputError):
        track_best(RunHistory(0, [EpochRecord(1, 1.0)]))


def test_cross_validation_step_parity(small_fixed_corpus):
    _, msyn, mreal = small_fixed_corpus
    cfg = TrainConfig(lr=1e-3, optimizer="adam", batch_size=8, max_epochs=1)
    vocab_from = [r.label for r in msyn.records]
    build = lambda f: fresh(msyn, seed=f, vocab_from=vocab_from)  # noqa: E731
    cache = FeatureCache(FeatureConfig())
    sizes = augmented_sizes(mreal, msyn, 3)
    aug = cross_validate(mreal, 3, cfg, build, msyn, cache=cache)
    real = cross_validate(mreal, 3, cfg, build, upsample_to=lambda f, tr: sizes[f], cache=cache)
    assert [f.n_train for f in aug.folds] == sizes == [f.n_train for f in real.folds]
    assert [f.steps_per_epoch for f in aug.folds] == [f.steps_per_epoch for f in real.folds]
    assert aug.accuracy.n_runs == 3
    # 2 real voices per training transcript, plus 3 synthetic copies of it
    assert all(n * 2 == len(tr) * 5 for n, (tr, _) in zip(sizes, make_folds(mreal, 3, 0)))
