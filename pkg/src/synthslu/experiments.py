"""Sweep orchestration for the speaker-count and cross-validation experiments.

Results are stored as ``<results_dir>/<sweep-name>/<point>/<run>/`` with
``history.jsonl``, ``metrics.json`` and the run's effective ``config.json``.
A point is committed by atomically writing ``<point>/point.json`` once all of
its runs exist; re-running a sweep skips committed points and finished runs.
"""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml

from .corpus import REAL, SYNTHETIC, Manifest, concat_datasets, load_manifest, save_manifest, select_speakers, upsample
from .errors import ConfigError, InputError
from .evaluation import AggregateMetrics, RunMetrics, aggregate, aggregate_runs, metrics_json
from .frontend import FeatureCache, FeatureConfig
from .model import ModelConfig, build_model, load_encoder_weights
from .semantics import Vocabularies, build_vocabularies
from .synth import MockTts, load_text_dataset, render_voices, save_text_dataset
from .train import TrainConfig, cross_validate, augmented_sizes, track_best, train

log = logging.getLogger(__name__)

N_SYNTHETIC_SPEAKERS = "n_synthetic_speakers"
N_REAL_SPEAKERS = "n_real_speakers"


# configuration -------------------------------------------------------------------


@dataclass
class DataRefs:
    """Manifest paths. ``real`` is the pool of real training speakers,
    ``test`` the fixed held-out set, ``text`` the labeled text dataset that
    defines the label space (optional)."""

    synthetic: str | None = None
    real: str | None = None
    test: str | None = None
    text: str | None = None


@dataclass
class SweepConfig:
    points: list[int] = field(default_factory=lambda: [1, 2])
    runs_per_point: int = 5
    base_seed: int = 0
    nested: bool = False
    upsample: bool = False
    metric: str = "final"  # "final" test metrics or "best" over epochs
    baselines: bool = True
    delta_threshold: int = 40
    n_folds: int = 5
    fold_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        pts = list(self.points)
        if not pts or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError(f"sweep points must be non-empty and strictly increasing: {pts}")
        if self.runs_per_point < 1:
            raise ConfigError("runs_per_point must be >= 1")
        if self.metric not in ("final", "best"):
            raise ConfigError("metric must be 'final' or 'best'")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    data: DataRefs = field(default_factory=DataRefs)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    results_dir: str = "results"
    encoder_weights: str | None = None

    def to_dict(self) -> dict:
        d = _plain(asdict(self))
        d["model"] = _plain(self.model.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        return _build(cls, d)

    def fingerprint(self) -> str:
        """Hash of everything that affects results; where they are written does not."""
        import hashlib

        d = self.to_dict()
        d.pop("results_dir")
        return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


def _plain(obj):
    if isinstance(obj, Mapping):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls, d: Mapping | None):
    if d is None:
        return cls()
    if not isinstance(d, Mapping):
        raise ConfigError(f"expected a mapping for {cls.__name__}, got {d!r}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(d) - set(known))
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {unknown}")
    kwargs = {}
    nested = {"data": DataRefs, "sweep": SweepConfig, "features": FeatureConfig, "train": TrainConfig}
    for k, v in d.items():
        if cls is ExperimentConfig and k == "model":
            if not isinstance(v, Mapping):
                raise ConfigError("model section must be a mapping")
            try:
                v = ModelConfig.from_dict(v)
            except TypeError as exc:
                raise ConfigError(f"bad model section: {exc}") from None
        elif cls is ExperimentConfig and k in nested:
            v = _build(nested[k], v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(d: dict, overrides: Iterable[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML."""
    d = json.loads(json.dumps(d))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = yaml.safe_load(raw)
    return d


def load_config(path=None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    d = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            d = yaml.safe_load(fh) or {}
        base = Path(path).parent
        # data paths are relative to the config file
        for k, v in list((d.get("data") or {}).items()):
            if v and not os.path.isabs(v):
                d["data"][k] = str(base / v)
    return ExperimentConfig.from_dict(apply_overrides(d, overrides))


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    return path


# results ---------------------------------------------------------------------------


@dataclass
class PointResult:
    x: int
    runs: list[RunMetrics]
    aggregate: dict[str, AggregateMetrics]

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "runs": [r.to_dict() for r in self.runs],
            "aggregate": {k: v.to_dict() for k, v in self.aggregate.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "PointResult":
        return cls(
            d["x"],
            [RunMetrics(**r) for r in d["runs"]],
            {k: AggregateMetrics(**v) for k, v in d["aggregate"].items()},
        )


@dataclass
class SweepResult:
    name: str
    variable: str
    points: list[PointResult]
    provenance: dict = field(default_factory=dict)

    def xs(self) -> list[int]:
        return [p.x for p in self.points]

    def means(self, metric: str = "accuracy") -> list[float]:
        return [p.aggregate[metric].mean for p in self.points]


@dataclass
class RealSweepResult:
    real_only: SweepResult
    augmented: SweepResult
    baselines: dict[str, PointResult]
    delta_above_threshold: float | None


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# jobs -----------------------------------------------------------------------------


@dataclass
class RunJob:
    """One training run. ``parts`` lists (manifest path, speakers to keep or
    None for all); the parts are concatenated in order."""

    sweep: str
    x: int
    run: int
    seed: int
    parts: list[tuple[str, list[str] | None]]
    test: str
    upsample_to: int | None
    run_dir: str


_STATE: dict = {}


def _manifest(path: str) -> Manifest:
    cache = _STATE.setdefault("manifests", {})
    if path not in cache:
        cache[path] = load_manifest(path)
    return cache[path]


def _feature_cache(cfg: FeatureConfig) -> FeatureCache:
    fc = _STATE.get("features")
    if fc is None or fc.cfg != cfg:
        fc = _STATE["features"] = FeatureCache(cfg)
    return fc


def _training_set(job: RunJob) -> Manifest:
    out = None
    for path, speakers in job.parts:
        m = _manifest(path)
        if speakers is not None:
            m = m.by_speakers(speakers)
        out = m if out is None else concat_datasets(out, m)
    if job.upsample_to and job.upsample_to > len(out):
        out = upsample(out, job.upsample_to)
    return out


def run_job(exp: ExperimentConfig, vocab: Vocabularies, job: RunJob) -> RunMetrics:
    run_dir = Path(job.run_dir)
    metrics_path = run_dir / "metrics.json"
    if metrics_path.exists():
        return RunMetrics(**json.loads(metrics_path.read_text())["metrics"])
    train_m = _training_set(job)
    test_m = _manifest(job.test)
    model = build_model(exp.model, vocab, exp.features, seed=job.seed)
    if exp.encoder_weights:
        load_encoder_weights(model, exp.encoder_weights)
    cfg = replace(exp.train, seed=job.seed)
    t0 = time.time()
    _, hist = train(model, train_m, test_m, cfg, cache=_feature_cache(exp.features))
    if exp.sweep.metric == "best":
        acc, loss = track_best(hist)
    else:
        acc, loss = hist.epochs[-1].test_accuracy, hist.epochs[-1].test_loss
    metrics = RunMetrics(acc, loss, len(test_m), job.seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    hist.save(run_dir / "history.jsonl", include_timing=False)
    effective = {
        "experiment": exp.to_dict(),
        "job": {k: v for k, v in asdict(job).items() if k != "run_dir"},
        "n_train": len(train_m),
        "train_speakers": sorted(train_m.speakers()),
    }
    _write_atomic(run_dir / "config.json", json.dumps(effective, sort_keys=True, indent=2) + "\n")
    _write_atomic(run_dir / "timing.json", json.dumps({"seconds": time.time() - t0, "finished": time.time()}) + "\n")
    _write_atomic(metrics_path, metrics_json({"metrics": metrics.to_dict()}))
    return metrics


def _job_worker(args):
    exp_dict, vocab_dict, job = args
    return run_job(ExperimentConfig.from_dict(exp_dict), Vocabularies.from_dict(vocab_dict), job)


def _execute(exp: ExperimentConfig, vocab: Vocabularies, jobs: list[RunJob]) -> list[RunMetrics]:
    if exp.sweep.workers <= 1 or len(jobs) <= 1:
        return [run_job(exp, vocab, j) for j in jobs]
    args = [(exp.to_dict(), vocab.to_dict(), j) for j in jobs]
    with ProcessPoolExecutor(max_workers=exp.sweep.workers) as pool:
        return list(pool.map(_job_worker, args))


def _run_point(exp, vocab, sweep_name: str, x: int, jobs: list[RunJob]) -> PointResult:
    point_path = Path(exp.results_dir) / sweep_name / str(x) / "point.json"
    if point_path.exists():
        saved = json.loads(point_path.read_text())
        if saved.get("fingerprint") == exp.fingerprint():
            return PointResult.from_dict(saved["result"])
    runs = _execute(exp, vocab, jobs)
    result = PointResult(x, runs, aggregate_runs(runs))
    _write_atomic(point_path, metrics_json({"fingerprint": exp.fingerprint(), "result": result.to_dict()}))
    return result


def subset_seed(base_seed: int, x: int, run: int, nested: bool) -> int:
    """Seed for drawing the speaker subset of (point, run). In nested mode the
    point is ignored, so subsets grow by prefix."""
    return base_seed * 1_000_003 + run if nested else base_seed * 1_000_003 + 7919 * x + run


def label_space(exp: ExperimentConfig) -> Vocabularies:
    """Vocabularies over every label the experiment can encounter."""
    if exp.data.text:
        return build_vocabularies([r.label for r in load_text_dataset(exp.data.text)])
    labels = []
    for p in (exp.data.synthetic, exp.data.real, exp.data.test):
        if p:
            labels += [r.label for r in _manifest(p).records]
    if not labels:
        raise ConfigError("experiment has no data")
    return build_vocabularies(labels)


def _require(exp, *names):
    missing = [n for n in names if not getattr(exp.data, n)]
    if missing:
        raise ConfigError(f"experiment {exp.name!r} needs data paths: {missing}")


def _provenance(exp: ExperimentConfig, **extra) -> dict:
    return {"config": exp.to_dict(), "fingerprint": exp.fingerprint(), **extra}


def sweep_synthetic_speakers(exp: ExperimentConfig) -> SweepResult:
    """Accuracy on the real test set as a function of how many synthetic
    speakers the training set draws from."""
    _require(exp, "synthetic", "test")
    vocab = label_space(exp)
    synth = _manifest(exp.data.synthetic)
    n_spk = len(synth.speakers())
    sw = exp.sweep
    if sw.points[-1] > n_spk:
        raise ConfigError(f"sweep point {sw.points[-1]} exceeds {n_spk} synthetic speakers")
    points = []
    seeds = {}
    for x in sw.points:
        jobs = []
        for r in range(sw.runs_per_point):
            s_seed = subset_seed(sw.base_seed, x, r, sw.nested)
            speakers = sorted(select_speakers(synth, x, s_seed).speakers())
            seed = sw.base_seed + r
            seeds[f"{x}/{r}"] = {"model_seed": seed, "subset_seed": s_seed, "speakers": speakers}
            jobs.append(
                RunJob(exp.name, x, r, seed, [(exp.data.synthetic, speakers)], exp.data.test, None,
                       str(Path(exp.results_dir) / exp.name / str(x) / str(r)))
            )
        points.append(_run_point(exp, vocab, exp.name, x, jobs))
        log.info("point %d: accuracy %.3f ± %.3f", x, points[-1].aggregate["accuracy"].mean, points[-1].aggregate["accuracy"].std)
    result = SweepResult(exp.name, N_SYNTHETIC_SPEAKERS, points, _provenance(exp, seeds=seeds))
    _write_provenance(exp, exp.name, result.provenance)
    return result


def _write_provenance(exp, sweep_name, prov):
    path = Path(exp.results_dir) / sweep_name / "provenance.json"
    _write_atomic(path, json.dumps({**prov, "written": time.strftime("%Y-%m-%dT%H:%M:%S")}, sort_keys=True, indent=2) + "\n")


def sweep_real_speakers(exp: ExperimentConfig) -> RealSweepResult:
    """Two arms per point over the same real-speaker subsets: real only, and
    real plus every synthetic speaker. Optional baselines: all real speakers
    alone and all synthetic speakers alone."""
    _require(exp, "synthetic", "real", "test")
    vocab = label_space(exp)
    real = _manifest(exp.data.real)
    synth = _manifest(exp.data.synthetic)
    n_real = len(real.speakers())
    sw = exp.sweep
    if sw.points[-1] > n_real:
        raise ConfigError(f"sweep point {sw.points[-1]} exceeds {n_real} real speakers")
    root = Path(exp.results_dir)
    name_a, name_b = f"{exp.name}.real_only", f"{exp.name}.augmented"
    pts_a, pts_b, seeds = [], [], {}

    def arm_jobs(sweep_name, x, augmented):
        jobs = []
        for r in range(sw.runs_per_point):
            s_seed = subset_seed(sw.base_seed, x, r, sw.nested)
            speakers = sorted(select_speakers(real, x, s_seed).speakers())
            seeds[f"{x}/{r}"] = {"model_seed": sw.base_seed + r, "subset_seed": s_seed, "speakers": speakers}
            parts = [(exp.data.real, speakers)]
            up = None
            if augmented:
                parts.append((exp.data.synthetic, None))
            elif sw.upsample:
                up = len(real.by_speakers(speakers)) + len(synth)
            jobs.append(RunJob(sweep_name, x, r, sw.base_seed + r, parts, exp.data.test, up,
                               str(root / sweep_name / str(x) / str(r))))
        return jobs

    for x in sw.points:
        pts_a.append(_run_point(exp, vocab, name_a, x, arm_jobs(name_a, x, False)))
        pts_b.append(_run_point(exp, vocab, name_b, x, arm_jobs(name_b, x, True)))

    baselines = {}
    if sw.baselines:
        name = f"{exp.name}.baseline_all_real"
        baselines["all_real"] = _run_point(exp, vocab, name, n_real, arm_jobs(name, n_real, False))
        name = f"{exp.name}.baseline_all_synthetic"
        jobs = [
            RunJob(name, 0, r, sw.base_seed + r, [(exp.data.synthetic, None)], exp.data.test, None,
                   str(root / name / "0" / str(r)))
            for r in range(sw.runs_per_point)
        ]
        baselines["all_synthetic"] = _run_point(exp, vocab, name, 0, jobs)

    prov = _provenance(exp, seeds=seeds)
    res_a = SweepResult(name_a, N_REAL_SPEAKERS, pts_a, prov)
    res_b = SweepResult(name_b, N_REAL_SPEAKERS, pts_b, prov)
    _write_provenance(exp, exp.name, prov)
    return RealSweepResult(res_a, res_b, baselines, augmentation_delta(res_a, res_b, sw.delta_threshold))


def augmentation_delta(real_only: SweepResult, augmented: SweepResult, threshold: int) -> float | None:
    """Mean accuracy gain from augmentation over all (point, run) pairs with
    point > ``threshold``; None when no point qualifies."""
    diffs = [
        b.accuracy - a.accuracy
        for pa, pb in zip(real_only.points, augmented.points)
        if pa.x > threshold
        for a, b in zip(pa.runs, pb.runs)
    ]
    return float(np.mean(diffs)) if diffs else None


# cross-validation -------------------------------------------------------------------


@dataclass
class CVRow:
    data_type: str
    accuracy: AggregateMetrics
    loss: AggregateMetrics
    per_fold: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "data_type": self.data_type,
            "best_accuracy": self.accuracy.to_dict(),
            "best_loss": self.loss.to_dict(),
            "per_fold": [list(x) for x in self.per_fold],
        }


@dataclass
class CVReport:
    rows: list[CVRow]
    steps_per_epoch: dict[str, list[int]]

    COLUMNS = ("Data type", "Best accuracy", "Best loss")

    def to_dict(self) -> dict:
        return {"columns": list(self.COLUMNS), "rows": [r.to_dict() for r in self.rows],
                "steps_per_epoch": self.steps_per_epoch}

    def render(self) -> str:
        lines = [f"{self.COLUMNS[0]:<18} {self.COLUMNS[1]:>18} {self.COLUMNS[2]:>16}"]
        for r in self.rows:
            acc = f"{100 * r.accuracy.mean:.1f}% ± {100 * r.accuracy.std:.1f}%"
            loss = f"{r.loss.mean:.2f} ± {r.loss.std:.2f}"
            lines.append(f"{r.data_type:<18} {acc:>18} {loss:>16}")
        return "\n".join(lines) + "\n"


def run_cross_validation(exp: ExperimentConfig) -> CVReport:
    """Real vs real + synthetic, n-fold over transcripts, best metrics per fold.

    The real-only arm is upsampled to the augmented arm's training size in
    every fold so both take the same number of optimizer steps per epoch.
    """
    _require(exp, "real", "synthetic")
    vocab = label_space(exp)
    real = _manifest(exp.data.real)
    synth = _manifest(exp.data.synthetic)
    sw = exp.sweep
    cache = _feature_cache(exp.features)
    cfg = replace(exp.train, seed=sw.base_seed)

    def build(fold):
        model = build_model(exp.model, vocab, exp.features, seed=sw.base_seed + fold)
        if exp.encoder_weights:
            load_encoder_weights(model, exp.encoder_weights)
        return model

    sizes = augmented_sizes(real, synth, sw.n_folds, sw.fold_seed)
    arms = [
        ("Real", dict(upsample_to=(lambda f, tr: sizes[f]) if sw.upsample else None)),
        ("Real + synthetic", dict(augment=synth)),
    ]
    rows, steps = [], {}
    out_dir = Path(exp.results_dir) / exp.name
    for label, kw in arms:
        res = cross_validate(real, sw.n_folds, cfg, build, fold_seed=sw.fold_seed, cache=cache, **kw)
        rows.append(CVRow(label, res.accuracy, res.loss, [(f.best_accuracy, f.best_loss) for f in res.folds]))
        steps[label] = [f.steps_per_epoch for f in res.folds]
        for f in res.folds:
            d = out_dir / label.replace(" + ", "_plus_").replace(" ", "_").lower() / f"fold{f.fold}"
            d.mkdir(parents=True, exist_ok=True)
            f.history.save(d / "history.jsonl", include_timing=False)
    report = CVReport(rows, steps)
    _write_atomic(out_dir / "report.json", metrics_json(report.to_dict()))
    _write_atomic(out_dir / "report.txt", report.render())
    return report


# plot data -------------------------------------------------------------------------


def emit_plot_data(result: SweepResult | Sequence[PointResult], path, metric: str = "accuracy") -> Path:
    """Write ``x y err`` rows (mean and std of ``metric``) sorted by x."""
    points = result.points if isinstance(result, SweepResult) else list(result)
    if not points:
        raise InputError("nothing to plot")
    path = Path(path)
    rows = sorted((p.x, p.aggregate[metric].mean, p.aggregate[metric].std) for p in points)
    text = "x y err\n" + "".join(f"{x:g} {y:.6f} {e:.6f}\n" for x, y, e in rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def emit_baseline(point: PointResult, xs: Sequence[int], path, metric: str = "accuracy") -> Path:
    """A constant band across ``xs`` (for the all-real / all-synthetic lines)."""
    agg = point.aggregate[metric]
    return emit_plot_data([PointResult(x, point.runs, {metric: agg}) for x in xs], path, metric)


def load_sweep_result(results_dir, sweep_name: str) -> SweepResult:
    root = Path(results_dir) / sweep_name
    points = []
    for p in sorted(root.glob("*/point.json"), key=lambda p: int(p.parent.name)):
        points.append(PointResult.from_dict(json.loads(p.read_text())["result"]))
    if not points:
        raise InputError(f"no committed points under {root}")
    prov_path = root / "provenance.json"
    prov = json.loads(prov_path.read_text()) if prov_path.exists() else {}
    return SweepResult(sweep_name, prov.get("variable", ""), points, prov)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation; NaN when either side is constant (undefined)."""
    from scipy.stats import spearmanr

    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return float("nan")
    return float(spearmanr(xs, ys).statistic)


# toy experiment material -------------------------------------------------------------


@dataclass
class ToyCorpus:
    root: Path
    text: Path
    synthetic: Path
    real_all: Path
    real_train: Path
    real_test: Path


def make_toy_corpus(root, variant: str = "fixed", n_sentences: int | None = None, n_real_train: int = 4,
                    seed: int = 0, tts: MockTts | None = None) -> ToyCorpus:
    """Render a toy labeled-text dataset with every synthetic-style voice and
    every real-style voice.

    The real-style voices are split into a training pool (first
    ``n_real_train``) and a held-out test set (the rest).
    """
    from .toydata import fixed_slot_sentences, open_slot_sentences

    root = Path(root)
    tts = tts or MockTts()
    if variant == "fixed":
        rows = fixed_slot_sentences(n_sentences or 50, seed)
    else:
        rows = open_slot_sentences(n_sentences or 60, seed)
    text = save_text_dataset(rows, root / "text.csv")
    syn_voices = [v for v in tts.voices if v.style == "synthetic"]
    real_voices = [v for v in tts.voices if v.style == "real"]
    render_voices(rows, syn_voices, root / "synthetic", provenance=SYNTHETIC, adapter=tts, name="synthetic")
    real = render_voices(rows, real_voices, root / "real", provenance=REAL, adapter=tts, name="real")
    pool = {v.voice_id for v in real_voices[:n_real_train]}
    save_manifest(real.filter(lambda r: r.speaker_id in pool), root / "real" / "train.csv")
    save_manifest(real.filter(lambda r: r.speaker_id not in pool), root / "real" / "test.csv")
    return ToyCorpus(root, text, root / "synthetic" / "manifest.csv", root / "real" / "manifest.csv",
                     root / "real" / "train.csv", root / "real" / "test.csv")


def make_toy_cv_corpus(root, n_sentences: int = 60, seed: int = 0, tts: MockTts | None = None) -> ToyCorpus:
    """Open-slot corpus where, as in a single-read dataset, every sentence is
    spoken once by one real-style voice (round robin)."""
    from dataclasses import replace as dc_replace

    from .toydata import open_slot_sentences

    root = Path(root)
    tts = tts or MockTts()
    rows = open_slot_sentences(n_sentences, seed)
    text = save_text_dataset(rows, root / "text.csv")
    syn_voices = [v for v in tts.voices if v.style == "synthetic"]
    real_voices = [v for v in tts.voices if v.style == "real"]
    render_voices(rows, syn_voices, root / "synthetic", provenance=SYNTHETIC, adapter=tts, name="synthetic")
    parts = []
    for i, row in enumerate(rows):
        v = real_voices[i % len(real_voices)]
        m = render_voices([row], [v], root / "real", provenance=REAL, adapter=tts, name="real")
        parts.append(dc_replace(m.records[0], id=f"{v.voice_id}-{i:05d}"))
    real = Manifest(tuple(parts), variant=m.variant, sample_rate=m.sample_rate, name="real", root=root / "real")
    save_manifest(real, root / "real" / "manifest.csv")
    return ToyCorpus(root, text, root / "synthetic" / "manifest.csv", root / "real" / "manifest.csv",
                     root / "real" / "manifest.csv", root / "real" / "manifest.csv")
