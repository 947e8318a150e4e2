#!/usr/bin/env python3
"""Real-only vs real + synthetic training with two real-style voices.

For the full curve over more real voices, regenerate the data with a larger
``--real-train`` and pass e.g. ``--set "sweep.points=[1, 2, 4]"``.
"""
from _common import ROOT, ensure_data, run

ensure_data(ROOT / "data" / "open", "--variant", "open", "--real-train", "2")
run(["sweep", "--config", str(ROOT / "configs" / "real_speakers.yaml"), "--kind", "real"])
