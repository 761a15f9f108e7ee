#!/usr/bin/env python3
"""Regenerate the pinned golden report for the default 2x2 run.

Run this only when an intentional change to the engine or the report layout
makes the stored snapshot stale.  The diff of the golden file then documents
exactly what changed.
"""

from pathlib import Path

from fermicluster.config import RunConfig
from fermicluster.pipeline import run_experiment
from fermicluster.reports import deterministic_part, render_report

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "gn_2x2_g0.05.json"


def main() -> None:
    payload, timing = run_experiment(RunConfig())
    GOLDEN.write_text(deterministic_part(render_report(payload, timing)) + "\n")
    print(f"wrote {GOLDEN}")


if __name__ == "__main__":
    main()
