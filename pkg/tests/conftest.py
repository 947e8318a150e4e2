import string

import pytest
from hypothesis import settings, strategies as st

from synthslu.semantics import FixedSlotLabel, OpenSlotLabel, Slot
from synthslu.synth import MockTts, default_voices, render_voices, REAL_STYLE, SYNTHETIC_STYLE
from synthslu.toydata import fixed_slot_sentences, open_slot_sentences

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# characters allowed inside label values (no separators, no control chars)
VALUE_CHARS = string.ascii_letters + string.digits + " _-'"

tokens = st.text(VALUE_CHARS, min_size=1, max_size=8)
slot_texts = st.text(VALUE_CHARS, min_size=0, max_size=10)

fixed_labels = st.builds(FixedSlotLabel, tokens, tokens, tokens)


@st.composite
def open_labels(draw, max_slots=4):
    names = draw(st.lists(tokens, max_size=max_slots, unique=True))
    slots = tuple(Slot(n, draw(slot_texts), draw(st.sampled_from(["", "snips/room", "x"]))) for n in names)
    return OpenSlotLabel(draw(tokens), slots)


any_labels = st.one_of(fixed_labels, open_labels())


@pytest.fixture(scope="session")
def tts():
    return MockTts()


@pytest.fixture(scope="session")
def small_fixed_corpus(tmp_path_factory):
    """12 fixed-slot sentences, 3 synthetic-style and 2 real-style voices."""
    root = tmp_path_factory.mktemp("fixed")
    tts = MockTts()
    rows = fixed_slot_sentences(12, seed=0)
    syn = [v for v in tts.voices if v.style == SYNTHETIC_STYLE][:3]
    real = [v for v in tts.voices if v.style == REAL_STYLE][:2]
    msyn = render_voices(rows, syn, root / "synthetic", provenance="synthetic", adapter=tts)
    mreal = render_voices(rows, real, root / "real", provenance="real", adapter=tts)
    return rows, msyn, mreal


@pytest.fixture(scope="session")
def small_open_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("open")
    tts = MockTts()
    rows = open_slot_sentences(10, seed=0)
    syn = [v for v in tts.voices if v.style == SYNTHETIC_STYLE][:2]
    return rows, render_voices(rows, syn, root / "synthetic", provenance="synthetic", adapter=tts)


# acceptance verdicts, echoed again at the end of the session
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
