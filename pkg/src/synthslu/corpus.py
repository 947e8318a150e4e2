"""Dataset manifests and the operations used to compose training sets:
speaker subsetting, real/synthetic concatenation, upsampling and
cross-validation folds."""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, FormatError, LabelError, ParseError, RangeError
from .semantics import FIXED, OPEN, SemanticLabel, parse_label, serialize_label

REAL = "real"
SYNTHETIC = "synthetic"
PROVENANCES = (REAL, SYNTHETIC)

COLUMNS = ("id", "audio_path", "transcript", "label", "speaker_id", "provenance", "fold")


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    audio_path: str
    transcript: str
    label: SemanticLabel
    speaker_id: str
    provenance: str = REAL
    fold: int | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"record {self.id!r}: unknown provenance {self.provenance!r}")

    def to_row(self) -> dict:
        return {
            "id": self.id,
            "audio_path": self.audio_path,
            "transcript": self.transcript,
            "label": serialize_label(self.label),
            "speaker_id": self.speaker_id,
            "provenance": self.provenance,
            "fold": "" if self.fold is None else str(self.fold),
        }


@dataclass(frozen=True)
class SpeakerInventory:
    speakers: tuple[tuple[str, str], ...]

    def __post_init__(self):
        ids = [s for s, _ in self.speakers]
        if len(set(ids)) != len(ids):
            raise ConfigError("speaker inventory has duplicates")

    def ids(self, provenance: str | None = None) -> list[str]:
        return [s for s, p in self.speakers if provenance is None or p == provenance]

    def __len__(self):
        return len(self.speakers)


@dataclass(frozen=True)
class Manifest:
    records: tuple[UtteranceRecord, ...]
    variant: str
    sample_rate: int = 16000
    name: str = ""
    root: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.variant not in (FIXED, OPEN):
            raise ConfigError(f"unknown label variant {self.variant!r}")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise FormatError(f"duplicate record id {r.id!r}")
            seen.add(r.id)
            if r.label.variant != self.variant:
                raise ConfigError(
                    f"record {r.id!r} has a {r.label.variant}-slot label in a {self.variant}-slot manifest"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def with_records(self, records: Iterable[UtteranceRecord], **kw) -> "Manifest":
        return replace(self, records=tuple(records), **kw)

    def speakers(self) -> list[str]:
        """Distinct speaker ids in order of first appearance."""
        return list(dict.fromkeys(r.speaker_id for r in self.records))

    def inventory(self) -> SpeakerInventory:
        first = {}
        for r in self.records:
            first.setdefault(r.speaker_id, r.provenance)
        return SpeakerInventory(tuple(first.items()))

    def filter(self, pred) -> "Manifest":
        return self.with_records(r for r in self.records if pred(r))

    def by_provenance(self, provenance: str) -> "Manifest":
        return self.filter(lambda r: r.provenance == provenance)

    def by_speakers(self, speakers: Iterable[str]) -> "Manifest":
        keep = set(speakers)
        return self.filter(lambda r: r.speaker_id in keep)

    def resolve(self, record: UtteranceRecord) -> Path:
        p = Path(record.audio_path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p


def _parse_row(row: dict, lineno: int, variant: str | None) -> tuple[UtteranceRecord, str]:
    unknown = set(row) - set(COLUMNS)
    if None in row or unknown:
        raise FormatError(f"row {lineno}: unknown columns {sorted(map(str, unknown))}")
    missing = [c for c in COLUMNS if c != "fold" and c not in row]
    if missing:
        raise FormatError(f"row {lineno}: missing columns {missing}")
    raw = row["label"]
    if variant is None:
        variant = FIXED if str(raw).count("|") == 2 else OPEN
    try:
        label = parse_label(raw, variant)
    except ParseError as exc:
        raise FormatError(f"row {lineno} (id={row.get('id')!r}): unparseable label: {exc}") from None
    fold = row.get("fold")
    try:
        fold = None if fold in (None, "") else int(fold)
    except ValueError:
        raise FormatError(f"row {lineno}: fold must be an integer, got {fold!r}") from None
    try:
        rec = UtteranceRecord(
            id=str(row["id"]),
            audio_path=str(row["audio_path"]),
            transcript=str(row["transcript"]),
            label=label,
            speaker_id=str(row["speaker_id"]),
            provenance=str(row["provenance"]),
            fold=fold,
        )
    except (ConfigError, LabelError) as exc:
        raise FormatError(f"row {lineno}: {exc}") from None
    empty = [c for c in ("id", "audio_path", "speaker_id") if not getattr(rec, c)]
    if empty:
        raise FormatError(f"row {lineno}: empty {', '.join(empty)}")
    return rec, variant


def load_manifest(
    path, *, sample_rate: int = 16000, variant: str | None = None, name: str | None = None
) -> Manifest:
    """Read a CSV or JSON-lines manifest.

    The label variant is inferred from the first row unless given. Errors
    name the offending row (1-based, header is row 1 for CSV).
    """
    path = Path(path)
    if path.suffix in (".jsonl", ".json"):
        rows = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rows.append((i, json.loads(line)))
                except json.JSONDecodeError as exc:
                    raise FormatError(f"row {i}: invalid JSON: {exc}") from None
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            unknown = [c for c in header if c not in COLUMNS]
            if unknown:
                raise FormatError(f"{path}: unknown columns {unknown}")
            rows = [(i, row) for i, row in enumerate(reader, start=2)]

    records, seen = [], {}
    for lineno, row in rows:
        rec, row_variant = _parse_row(row, lineno, variant)
        if variant is None:
            variant = row_variant
        if rec.id in seen:
            raise FormatError(f"row {lineno}: duplicate id {rec.id!r} (first seen at row {seen[rec.id]})")
        seen[rec.id] = lineno
        records.append(rec)
    return Manifest(
        tuple(records),
        variant=variant or FIXED,
        sample_rate=sample_rate,
        name=name if name is not None else path.stem,
        root=path.parent,
    )


def save_manifest(m: Manifest, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix in (".jsonl", ".json"):
        with open(path, "w", encoding="utf-8") as fh:
            for r in m.records:
                fh.write(json.dumps(r.to_row(), ensure_ascii=False) + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            for r in m.records:
                writer.writerow(r.to_row())
    return path


def select_speakers(m: Manifest, k: int, seed: int) -> Manifest:
    """Keep records of a uniformly random k-subset of speakers.

    The subset is the first k entries of a seeded permutation of the sorted
    speaker ids, so for a fixed seed subsets are nested in k.
    """
    speakers = sorted(m.speakers())
    if not 1 <= k <= len(speakers):
        raise RangeError(f"k must be in [1, {len(speakers)}], got {k}")
    order = np.random.default_rng(seed).permutation(len(speakers))
    chosen = {speakers[i] for i in order[:k]}
    return m.by_speakers(chosen)


def concat_datasets(real: Manifest, synthetic: Manifest) -> Manifest:
    if real.variant != synthetic.variant:
        raise ConfigError(f"label variant mismatch: {real.variant} vs {synthetic.variant}")
    if real.sample_rate != synthetic.sample_rate:
        raise ConfigError(f"sample rate mismatch: {real.sample_rate} vs {synthetic.sample_rate}")
    records = list(real.records) + list(synthetic.records)
    if {r.id for r in real.records} & {r.id for r in synthetic.records}:
        records = [replace(r, id=f"{r.provenance}:{r.id}") for r in records]
        if len({r.id for r in records}) != len(records):
            raise ConfigError("ids collide even after provenance prefixing")
    if real.root != synthetic.root:
        # paths must survive losing one of the two roots
        records = [
            replace(r, audio_path=str(src.resolve(r)))
            for r, src in zip(records, [real] * len(real) + [synthetic] * len(synthetic))
        ]
    return Manifest(
        tuple(records),
        variant=real.variant,
        sample_rate=real.sample_rate,
        name=f"{real.name}+{synthetic.name}",
        root=real.root if real.root == synthetic.root else None,
    )


def repetition_counts(n: int, target: int) -> list[int]:
    base, extra = divmod(target, n)
    return [base + (1 if i < extra else 0) for i in range(n)]


def upsample(m: Manifest, target: int) -> Manifest:
    """Repeat records cyclically until there are ``target`` of them.

    The first copy keeps its id; later copies get ``#rN`` suffixes.
    """
    n = len(m)
    if target < n:
        raise RangeError(f"upsample target {target} is smaller than manifest size {n}")
    if n == 0:
        if target:
            raise RangeError("cannot upsample an empty manifest")
        return m
    records = []
    for j in range(-(-target // n)):
        for r in m.records:
            if len(records) == target:
                break
            records.append(r if j == 0 else replace(r, id=f"{r.id}#r{j}"))
    return m.with_records(records)


def make_folds(
    m: Manifest, n_folds: int, seed: int, *, use_existing: bool = False
) -> list[tuple[Manifest, Manifest]]:
    """Split into cross-validation folds at the transcript level.

    Distinct transcripts are shuffled with ``seed`` and dealt round-robin, so
    no sentence appears in both the train and test side of a fold. With
    ``use_existing`` the records' own ``fold`` column is used instead.
    """
    if n_folds < 2:
        raise RangeError(f"n_folds must be >= 2, got {n_folds}")
    if n_folds > len(m):
        raise RangeError(f"n_folds={n_folds} exceeds manifest size {len(m)}")
    if use_existing and all(r.fold is not None for r in m.records):
        assign = {r.id: r.fold for r in m.records}
        fold_ids = sorted(set(assign.values()))
        if len(fold_ids) != n_folds:
            raise RangeError(f"manifest defines {len(fold_ids)} folds, expected {n_folds}")
        index = {f: i for i, f in enumerate(fold_ids)}
        fold_of = {rid: index[f] for rid, f in assign.items()}
    else:
        transcripts = sorted({r.transcript for r in m.records})
        if len(transcripts) < n_folds:
            raise RangeError(f"only {len(transcripts)} distinct transcripts for {n_folds} folds")
        order = np.random.default_rng(seed).permutation(len(transcripts))
        t_fold = {transcripts[t]: pos % n_folds for pos, t in enumerate(order)}
        fold_of = {r.id: t_fold[r.transcript] for r in m.records}

    folds = []
    for f in range(n_folds):
        test = [r for r in m.records if fold_of[r.id] == f]
        train = [r for r in m.records if fold_of[r.id] != f]
        folds.append(
            (
                m.with_records(train, name=f"{m.name}-fold{f}-train"),
                m.with_records(test, name=f"{m.name}-fold{f}-test"),
            )
        )
    return folds


def speaker_counts(m: Manifest) -> Counter:
    return Counter(r.speaker_id for r in m.records)


def records_for_transcripts(m: Manifest, transcripts: Sequence[str]) -> Manifest:
    keep = set(transcripts)
    return m.filter(lambda r: r.transcript in keep)
