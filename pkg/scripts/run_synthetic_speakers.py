#!/usr/bin/env python3
"""Accuracy on real-style test voices vs the number of synthetic training voices.

Extra arguments are passed through, e.g. ``--set sweep.runs_per_point=2``.
"""
from _common import ROOT, ensure_data, run

ensure_data(ROOT / "data" / "fixed", "--variant", "fixed")
run(["sweep", "--config", str(ROOT / "configs" / "synthetic_speakers.yaml"), "--kind", "synthetic"])
