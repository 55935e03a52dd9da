#!/usr/bin/env python3
"""Regenerate the stored structured reports for the bundled fixtures.

Run from the repository root after any change that legitimately alters report
content, then review the diff:

    python3 tools/regenerate_goldens.py
"""

import io
import sys
from contextlib import redirect_stdout
from pathlib import Path

from envborn.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "envborn" / "fixtures"

# fixture name -> (subcommand, expected exit code)
CASES = {
    "bell": ("schmidt", 0),
    "product-state": ("schmidt", 0),
    "random-3x4": ("schmidt", 0),
    "degenerate-3d": ("derive", 0),
    "certainty": ("derive", 0),
    "broken-unitary": ("derive", 1),
    "mixtures-purified": ("mixtures", 0),
    "mixtures-bell": ("mixtures", 0),
    "sample-fair": ("sample", 0),
    "sample-certainty": ("sample", 0),
    "sample-biased": ("sample", 1),
}


def regenerate() -> int:
    golden = FIXTURES / "golden"
    golden.mkdir(exist_ok=True)
    for name, (command, expected_code) in CASES.items():
        scenario = FIXTURES / f"{name}.json"
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main([command, str(scenario), "--format", "structured"])
        if code != expected_code:
            print(f"{name}: exit {code}, expected {expected_code}", file=sys.stderr)
            return 1
        out = golden / f"{name}.report.json"
        out.write_text(buffer.getvalue(), encoding="utf-8")
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(regenerate())
