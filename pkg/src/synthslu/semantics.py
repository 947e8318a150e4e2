"""Semantic label types, their string form for character-level decoding, and
exact-match comparison.

Two label styles are supported:

* fixed-slot labels (``action|object|location``), one value per slot;
* open-slot labels (``intent|name=text;name=text``), a variable slot list.

Slots of an open-slot label are kept sorted by ``slot_name`` so that two labels
listing the same slots in a different order are the same value.  The
``entity`` of a slot is metadata only and is not part of the string form; it
can be reattached on parse through an ``entity_map``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import ConfigError, LabelError, ParseError

FIELD_SEP = "|"
SLOT_SEP = ";"
KV_SEP = "="
RESERVED = frozenset(FIELD_SEP + SLOT_SEP + KV_SEP)

BOS = "\x02"
EOS = "\x03"
_CONTROL = frozenset((BOS, EOS))

FIXED = "fixed"
OPEN = "open"
VARIANTS = (FIXED, OPEN)

FIXED_SLOTS = ("action", "object", "location")


def _check_token(value: str, what: str, *, allow_empty: bool = False) -> None:
    if not isinstance(value, str):
        raise LabelError(f"{what} must be a string, got {type(value).__name__}")
    if not value and not allow_empty:
        raise LabelError(f"{what} must be non-empty")
    bad = sorted(set(value) & (RESERVED | _CONTROL))
    if bad:
        raise LabelError(f"{what} {value!r} contains reserved character(s) {bad!r}")


@dataclass(frozen=True)
class FixedSlotLabel:
    action: str
    object: str
    location: str

    def __post_init__(self):
        for name in FIXED_SLOTS:
            _check_token(getattr(self, name), name)

    @property
    def variant(self) -> str:
        return FIXED

    def values(self) -> tuple[str, str, str]:
        return (self.action, self.object, self.location)


@dataclass(frozen=True)
class Slot:
    slot_name: str
    text: str
    entity: str = field(default="", compare=False)

    def __post_init__(self):
        _check_token(self.slot_name, "slot_name")
        _check_token(self.text, f"text of slot {self.slot_name!r}", allow_empty=True)


@dataclass(frozen=True)
class OpenSlotLabel:
    intent: str
    slots: tuple[Slot, ...] = ()

    def __post_init__(self):
        _check_token(self.intent, "intent")
        slots = tuple(sorted(self.slots, key=lambda s: s.slot_name))
        names = [s.slot_name for s in slots]
        if len(set(names)) != len(names):
            raise LabelError(f"duplicate slot_name in label {self.intent!r}: {names}")
        object.__setattr__(self, "slots", slots)

    @property
    def variant(self) -> str:
        return OPEN


SemanticLabel = Union[FixedSlotLabel, OpenSlotLabel]


def make_open_label(intent: str, slots: Iterable = ()) -> OpenSlotLabel:
    """Build an open-slot label from ``Slot`` objects, dicts or tuples.

    Dicts use the Snips keys (``entity``, ``slot_name``, ``text``); tuples are
    ``(entity, slot_name, text)``.
    """
    out = []
    for s in slots:
        if isinstance(s, Slot):
            out.append(s)
        elif isinstance(s, Mapping):
            out.append(Slot(s["slot_name"], s["text"], s.get("entity", "")))
        else:
            entity, name, text = s
            out.append(Slot(name, text, entity))
    return OpenSlotLabel(intent, tuple(out))


def serialize_label(label: SemanticLabel) -> str:
    if isinstance(label, FixedSlotLabel):
        return FIELD_SEP.join(label.values())
    if isinstance(label, OpenSlotLabel):
        body = SLOT_SEP.join(f"{s.slot_name}{KV_SEP}{s.text}" for s in label.slots)
        return f"{label.intent}{FIELD_SEP}{body}"
    raise LabelError(f"not a semantic label: {label!r}")


def parse_label(
    s: str, variant_hint: str, entity_map: Mapping[str, str] | None = None
) -> SemanticLabel:
    """Inverse of :func:`serialize_label`.

    Any malformed input raises :class:`ParseError`, so decoder output can be
    passed in unchecked.
    """
    if variant_hint not in VARIANTS:
        raise ParseError(f"unknown label variant {variant_hint!r}")
    if not isinstance(s, str):
        raise ParseError(f"expected a string, got {type(s).__name__}")
    parts = s.split(FIELD_SEP)
    try:
        if variant_hint == FIXED:
            if len(parts) != 3:
                raise ParseError(f"fixed-slot label needs 3 fields, got {len(parts)}: {s!r}")
            return FixedSlotLabel(*parts)
        if len(parts) != 2:
            raise ParseError(f"open-slot label needs 2 fields, got {len(parts)}: {s!r}")
        intent, body = parts
        slots = []
        if body:
            for item in body.split(SLOT_SEP):
                name, sep, text = item.partition(KV_SEP)
                if not sep or KV_SEP in text:
                    raise ParseError(f"malformed slot {item!r} in {s!r}")
                entity = (entity_map or {}).get(name, "")
                slots.append(Slot(name, text, entity))
        label = OpenSlotLabel(intent, tuple(slots))
    except LabelError as exc:
        raise ParseError(str(exc)) from exc
    # sorting on construction would silently accept out-of-order input
    if serialize_label(label) != s:
        raise ParseError(f"non-canonical label string {s!r}")
    return label


def labels_equal(a: SemanticLabel, b: SemanticLabel) -> bool:
    """Exact match: every slot must agree; differing variants are unequal.

    Entities are not compared since the slot name determines them.
    """
    if isinstance(a, FixedSlotLabel) and isinstance(b, FixedSlotLabel):
        return a.values() == b.values()
    if isinstance(a, OpenSlotLabel) and isinstance(b, OpenSlotLabel):
        key = lambda lab: [(s.slot_name, s.text) for s in lab.slots]  # noqa: E731
        return a.intent == b.intent and key(a) == key(b)
    return False


def label_to_dict(label: SemanticLabel) -> dict:
    if isinstance(label, FixedSlotLabel):
        return {"action": label.action, "object": label.object, "location": label.location}
    return {
        "intent": label.intent,
        "slots": [
            {"entity": s.entity, "slot_name": s.slot_name, "text": s.text} for s in label.slots
        ],
    }


def label_from_dict(d: Mapping) -> SemanticLabel:
    if "intent" in d:
        return make_open_label(d["intent"], d.get("slots", ()))
    return FixedSlotLabel(d["action"], d["object"], d["location"])


@dataclass(frozen=True)
class LabelAlphabet:
    """Character inventory for the autoregressive decoder.

    Index 0 is BOS and index 1 is EOS; payload characters follow in sorted
    order.
    """

    characters: tuple[str, ...]

    def __post_init__(self):
        chars = tuple(self.characters)
        if chars[:2] != (BOS, EOS):
            raise ConfigError("alphabet must start with BOS, EOS")
        if len(set(chars)) != len(chars):
            raise ConfigError("alphabet has duplicate symbols")
        object.__setattr__(self, "characters", chars)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(chars)})

    @classmethod
    def from_strings(cls, strings: Iterable[str]) -> "LabelAlphabet":
        chars = set()
        for s in strings:
            chars.update(s)
        if chars & _CONTROL:
            raise ConfigError("payload strings may not contain BOS/EOS")
        return cls((BOS, EOS) + tuple(sorted(chars)))

    @property
    def bos(self) -> int:
        return 0

    @property
    def eos(self) -> int:
        return 1

    def __len__(self) -> int:
        return len(self.characters)

    def __contains__(self, ch: str) -> bool:
        return ch in self._index

    def encode(self, s: str, *, add_eos: bool = True) -> list[int]:
        try:
            ids = [self._index[c] for c in s]
        except KeyError as exc:
            raise LabelError(f"character {exc.args[0]!r} not in alphabet") from None
        return ids + [self.eos] if add_eos else ids

    def decode(self, ids: Sequence[int]) -> str:
        """Map ids back to text, stopping at EOS. BOS is rendered as-is."""
        out = []
        for i in ids:
            if i == self.eos:
                break
            out.append(self.characters[i])
        return "".join(out)


@dataclass(frozen=True)
class Vocabularies:
    """Frozen slot vocabularies plus the decoder alphabet.

    For fixed-slot data ``slots`` maps action/object/location to their value
    lists. For open-slot data it maps ``intent`` and ``slot_name``.
    """

    variant: str
    slots: tuple[tuple[str, tuple[str, ...]], ...]
    alphabet: LabelAlphabet
    max_label_length: int = 0

    def slot_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.slots)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(values) for _, values in self.slots)

    def values(self, name: str) -> tuple[str, ...]:
        return dict(self.slots)[name]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "slots": [[name, list(values)] for name, values in self.slots],
            "alphabet": list(self.alphabet.characters),
            "max_label_length": self.max_label_length,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Vocabularies":
        return cls(
            d["variant"],
            tuple((name, tuple(values)) for name, values in d["slots"]),
            LabelAlphabet(tuple(d["alphabet"])),
            int(d.get("max_label_length", 0)),
        )


def build_vocabularies(labels_or_manifest) -> Vocabularies:
    """Derive slot vocabularies and alphabet from training labels.

    Accepts a Manifest or any iterable of labels. Ordering is sorted, hence
    deterministic.
    """
    records = getattr(labels_or_manifest, "records", None)
    labels = [r.label for r in records] if records is not None else list(labels_or_manifest)
    if not labels:
        raise ConfigError("cannot build vocabularies from an empty manifest")
    variants = {lab.variant for lab in labels}
    if len(variants) != 1:
        raise ConfigError(f"mixed label variants: {sorted(variants)}")
    variant = variants.pop()
    if variant == FIXED:
        slots = tuple(
            (name, tuple(sorted({getattr(lab, name) for lab in labels}))) for name in FIXED_SLOTS
        )
    else:
        intents = tuple(sorted({lab.intent for lab in labels}))
        names = tuple(sorted({s.slot_name for lab in labels for s in lab.slots}))
        slots = (("intent", intents), ("slot_name", names))
    strings = [serialize_label(lab) for lab in labels]
    return Vocabularies(variant, slots, LabelAlphabet.from_strings(strings), max(map(len, strings)))
