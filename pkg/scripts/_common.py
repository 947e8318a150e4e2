"""Shared helpers for the experiment scripts: render the toy corpus a config
expects if it is not on disk yet, then hand over to the CLI."""
import sys
from pathlib import Path

from synthslu.cli import main

ROOT = Path(__file__).resolve().parent.parent


def ensure_data(out: Path, *extra: str) -> None:
    if (out / "text.csv").exists():
        return
    print(f"rendering toy corpus into {out}", flush=True)
    if main(["toy-data", "--out", str(out), *extra]) != 0:
        sys.exit("toy corpus generation failed")


def run(argv: list[str]) -> None:
    sys.exit(main(argv + sys.argv[1:]))
