"""Command-line entry point: ``synthslu <command> ...``.

Experiment commands read a YAML config (see ``configs/``) and accept
``--set dotted.key=value`` overrides; the effective config is written next
to the results.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .corpus import REAL, SYNTHETIC, concat_datasets, load_manifest
from .errors import SluError
from .evaluation import EvalConfig, evaluate, metrics_json
from .semantics import build_vocabularies
from .model import build_model, load_encoder_weights, load_model, save_model
from .synth import MockTts, SynthesisPlan, load_text_dataset, render_voices, synthesize_corpus

log = logging.getLogger("synthslu")


def _config(args) -> ex.ExperimentConfig:
    return ex.load_config(args.config, args.set or [])


def cmd_toy_data(args) -> int:
    if args.cv:
        c = ex.make_toy_cv_corpus(args.out, n_sentences=args.n_sentences or 60, seed=args.seed)
    else:
        c = ex.make_toy_corpus(args.out, args.variant, args.n_sentences, args.real_train, args.seed)
    for k in ("text", "synthetic", "real_all", "real_train", "real_test"):
        print(f"{k}: {getattr(c, k)}")
    return 0


def cmd_synthesize(args) -> int:
    rows = load_text_dataset(args.text)
    tts = MockTts()
    if args.voices:
        wanted = args.voices.split(",")
        by_id = {v.voice_id: v for v in tts.voices}
        missing = [w for w in wanted if w not in by_id]
        if missing:
            raise SluError(f"unknown voices {missing}; available: {sorted(by_id)}")
        voices = [by_id[w] for w in wanted]
    else:
        voices = [v for v in tts.voices if v.style == args.style]
    if args.provenance == SYNTHETIC:
        m = synthesize_corpus(SynthesisPlan(rows, voices, args.out, tts, name="synthetic"), workers=args.workers)
    else:
        m = render_voices(rows, voices, args.out, provenance=args.provenance, adapter=tts, name=args.provenance)
    print(f"{len(m)} records from {len(rows)} transcripts x {len(voices)} voices -> {Path(args.out) / 'manifest.csv'}")
    return 0


def cmd_pretrain(args) -> int:
    from .pretrain import PretrainConfig, load_asr_manifest, make_toy_asr_corpus, pretrain_encoder

    exp = _config(args)
    if args.asr:
        asr = load_asr_manifest(args.asr)
    else:
        asr = make_toy_asr_corpus(Path(args.out).parent / "asr", args.toy_utterances, feature_cfg=exp.features)
    res = pretrain_encoder(asr, exp.model.encoder, exp.features, PretrainConfig(epochs=args.epochs, seed=exp.train.seed))
    res.save(args.out)
    print(json.dumps({"initial_heldout_loss": res.initial_heldout_loss, "final_heldout_loss": res.final_heldout_loss,
                      "final_heldout_accuracy": res.final_heldout_accuracy}))
    return 0


def cmd_train(args) -> int:
    from .train import train

    exp = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ex.save_config(exp, out / "config.yaml")
    parts = [load_manifest(p) for p in args.train]
    train_m = parts[0]
    for m in parts[1:]:
        train_m = concat_datasets(train_m, m)
    test_m = load_manifest(args.test) if args.test else None
    if exp.data.text:
        vocab = ex.label_space(exp)
    else:
        vocab = build_vocabularies([r.label for r in train_m.records + (test_m.records if test_m else ())])
    model = build_model(exp.model, vocab, exp.features, seed=exp.train.seed)
    if exp.encoder_weights:
        load_encoder_weights(model, exp.encoder_weights)
    model, hist = train(model, train_m, test_m, exp.train)
    save_model(model, out / "model.pt")
    hist.save(out / "history.jsonl", include_timing=False)
    if hist.epochs:
        last = hist.epochs[-1]
        (out / "metrics.json").write_text(metrics_json({"accuracy": last.test_accuracy, "loss": last.test_loss,
                                                         "train_loss": last.train_loss}))
    print(f"model -> {out / 'model.pt'}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    m = load_manifest(args.manifest)
    res = evaluate(model, m, EvalConfig(beam_width=args.beam_width))
    print(metrics_json(res.to_dict()), end="")
    return 0


def _effective(exp, kind):
    ex.save_config(exp, Path(exp.results_dir) / exp.name / f"{kind}.config.yaml")


def cmd_sweep(args) -> int:
    exp = _config(args)
    _effective(exp, args.kind)
    out = Path(exp.results_dir) / exp.name
    if args.kind == "synthetic":
        res = ex.sweep_synthetic_speakers(exp)
        ex.emit_plot_data(res, out / "plot_accuracy.txt")
        for p in res.points:
            a = p.aggregate["accuracy"]
            print(f"{p.x:>4} {a.mean:.3f} ± {a.std:.3f}")
        print(f"spearman: {ex.spearman(res.xs(), res.means()):.3f}")
    else:
        res = ex.sweep_real_speakers(exp)
        ex.emit_plot_data(res.real_only, out / "plot_real_only.txt")
        ex.emit_plot_data(res.augmented, out / "plot_augmented.txt")
        for k, p in res.baselines.items():
            ex.emit_baseline(p, res.real_only.xs(), out / f"plot_baseline_{k}.txt")
        for a, b in zip(res.real_only.points, res.augmented.points):
            print(f"{a.x:>4} real {a.aggregate['accuracy'].mean:.3f}  real+syn {b.aggregate['accuracy'].mean:.3f}")
        print(f"delta above {exp.sweep.delta_threshold}: {res.delta_above_threshold}")
    return 0


def cmd_cv(args) -> int:
    exp = _config(args)
    _effective(exp, "cv")
    print(ex.run_cross_validation(exp).render(), end="")
    return 0


def cmd_report(args) -> int:
    root = Path(args.results)
    names = [args.sweep] if args.sweep else sorted(p.name for p in root.iterdir() if p.is_dir())
    for name in names:
        try:
            res = ex.load_sweep_result(root, name)
        except SluError:
            continue
        path = ex.emit_plot_data(res, root / name / "plot_accuracy.txt")
        print(f"{name}: {len(res.points)} points -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synthslu", description="Train and evaluate SLU models on synthetic speech.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="experiment YAML")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")

    sp = sub.add_parser("toy-data", help="render a toy corpus with the mock TTS")
    sp.add_argument("--out", required=True)
    sp.add_argument("--variant", choices=("fixed", "open"), default="fixed")
    sp.add_argument("--n-sentences", type=int)
    sp.add_argument("--real-train", type=int, default=4, help="real-style voices in the training pool")
    sp.add_argument("--cv", action="store_true", help="single-read open-slot corpus for cross-validation")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_toy_data)

    sp = sub.add_parser("synthesize", help="render a labeled text CSV with every selected voice")
    sp.add_argument("--text", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--voices", help="comma-separated voice ids")
    sp.add_argument("--style", choices=("synthetic", "real"), default="synthetic")
    sp.add_argument("--provenance", choices=(SYNTHETIC, REAL), default=SYNTHETIC)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=cmd_synthesize)

    sp = sub.add_parser("pretrain", help="pre-train the encoder on framewise phone targets")
    with_config(sp)
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--asr", help="ASR manifest (JSON lines); default renders a toy corpus")
    sp.add_argument("--toy-utterances", type=int, default=200)
    sp.add_argument("--epochs", type=int, default=5)
    sp.set_defaults(fn=cmd_pretrain)

    sp = sub.add_parser("train", help="train one model")
    with_config(sp)
    sp.add_argument("--train", nargs="+", required=True, help="training manifest(s), concatenated")
    sp.add_argument("--test")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("evaluate", help="exact-match accuracy and loss of a checkpoint")
    sp.add_argument("--model", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--beam-width", type=int, default=8)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("sweep", help="speaker-count sweep")
    with_config(sp)
    sp.add_argument("--kind", choices=("synthetic", "real"), required=True)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("cv", help="real vs real+synthetic cross-validation")
    with_config(sp)
    sp.set_defaults(fn=cmd_cv)

    sp = sub.add_parser("report", help="write plot data for committed sweeps")
    sp.add_argument("--results", default="results")
    sp.add_argument("--sweep")
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except SluError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
