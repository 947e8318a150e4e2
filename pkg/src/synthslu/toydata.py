"""Small labeled-text grammars for desk-scale experiments.

``fixed_slot_sentences`` imitates a smart-home command set with
action/object/location slots; ``open_slot_sentences`` imitates a lights
assistant with a variable number of slots.
"""
from __future__ import annotations

import itertools

import numpy as np

from .semantics import FixedSlotLabel, Slot, make_open_label
from .synth import TextRow

_ON = ["turn on the {o}", "switch on the {o}"]
_OFF = ["turn off the {o}", "switch off the {o}"]
_LOC = {"kitchen": " in the kitchen", "bedroom": " in the bedroom", "washroom": " in the washroom", "none": ""}


def fixed_slot_sentences(n: int = 50, seed: int = 0) -> list[TextRow]:
    """Up to ``n`` distinct command sentences (the full grammar has 62)."""
    rows = []
    for (action, phrases), obj, loc in itertools.product(
        [("activate", _ON), ("deactivate", _OFF)], ["lights", "heat", "music"], _LOC
    ):
        for p in phrases:
            rows.append((p.format(o=obj) + _LOC[loc], (action, obj, loc)))
    for action, verbs in [("increase", ["increase", "raise"]), ("decrease", ["decrease", "lower"])]:
        for loc in _LOC:
            for v in verbs:
                rows.append((f"{v} the heat{_LOC[loc]}", (action, "heat", loc)))
        rows.append((f"{verbs[0]} the volume", (action, "volume", "none")))
    for obj in ["newspaper", "juice", "shoes", "socks"]:
        rows.append((f"bring me my {obj}", ("bring", obj, "none")))
    for lang in ["english", "german", "korean", "chinese"]:
        rows.append((f"switch the language to {lang}", ("change language", lang, "none")))

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rows))
    picked = sorted(order[: min(n, len(rows))].tolist())
    return [TextRow(rows[i][0], FixedSlotLabel(*rows[i][1])) for i in picked]


_ROOMS = ["kitchen", "bedroom", "garage", "office", "flat", "hall"]
_NUMBERS = ["ten", "twelve", "twenty", "fifty", "eighty"]
_COLORS = ["red", "blue", "green", "pink"]


def open_slot_sentences(n: int = 60, seed: int = 0) -> list[TextRow]:
    """Lights-assistant sentences; intents take zero to two slots."""
    room = lambda r: Slot("room", r, "house_room")  # noqa: E731
    cands = [
        ("turn the lights on", ("SwitchLightOn", [])),
        ("lights on please", ("SwitchLightOn", [])),
        ("turn the lights off", ("SwitchLightOff", [])),
        ("lights off please", ("SwitchLightOff", [])),
    ]
    for r in _ROOMS:
        cands.append((f"turn on the {r} lights", ("SwitchLightOn", [room(r)])))
        cands.append((f"turn off the {r} lights", ("SwitchLightOff", [room(r)])))
    for num in _NUMBERS:
        bright = Slot("brightness", num, "snips/number")
        cands.append((f"set the lights to {num}", ("SetLightBrightness", [bright])))
        for r in _ROOMS:
            cands.append((f"set the {r} lights to {num}", ("SetLightBrightness", [room(r), bright])))
    for c in _COLORS:
        col = Slot("color", c, "snips/color")
        cands.append((f"make the lights {c}", ("SetLightColor", [col])))
        for r in _ROOMS:
            cands.append((f"make the {r} lights {c}", ("SetLightColor", [room(r), col])))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(cands))
    picked = sorted(order[: min(n, len(cands))].tolist())
    return [TextRow(cands[i][0], make_open_label(cands[i][1][0], cands[i][1][1])) for i in picked]


PHONES = "aeiou"


def phone_strings(n: int, seed: int = 0, min_len: int = 6, max_len: int = 12, phones: str = PHONES) -> list[str]:
    """Random phone strings for the toy ASR pre-training corpus."""
    rng = np.random.default_rng(seed)
    return [
        "".join(rng.choice(list(phones), size=int(rng.integers(min_len, max_len + 1))))
        for _ in range(n)
    ]
