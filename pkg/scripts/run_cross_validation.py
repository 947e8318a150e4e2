#!/usr/bin/env python3
"""Five-fold cross-validation of real vs real + synthetic training data."""
from _common import ROOT, ensure_data, run

ensure_data(ROOT / "data" / "cv", "--cv")
run(["cv", "--config", str(ROOT / "configs" / "cross_validation.yaml")])
