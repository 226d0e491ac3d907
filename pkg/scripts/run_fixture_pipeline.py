#!/usr/bin/env python3
"""Run the full pipeline (build -> validate -> evaluate -> report) on a
throwaway copy of the shipped fixture and print where the outputs landed."""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from relprobe.cli import main  # noqa: E402


def run() -> int:
    workdir = Path(tempfile.mkdtemp(prefix="relprobe-fixture-"))
    fixture = workdir / "fixture"
    shutil.copytree(ROOT / "tests" / "data" / "fixture", fixture)
    config = str(fixture / "fixture.json")
    for command in ("build", "validate", "evaluate", "report"):
        print(f"$ relprobe {command} {config}")
        code = main([command, config])
        if code != 0:
            print(f"{command} failed with exit code {code}", file=sys.stderr)
            return code
    print(f"\noutputs under {fixture / 'out'}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
