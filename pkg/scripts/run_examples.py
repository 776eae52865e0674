#!/usr/bin/env python3
"""Reproduce the period of every built-in example and print a summary table against the published values."""
import os
import sys

# Project root
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from dotenv import load_dotenv

load_dotenv()

from src.config import get_settings
from src.data import expected_periods, get_examples, period_discrepancies
from src.errors import MultirootError
from src.experiment import experiment_from_example
from src.period import period_study


def main():
    settings = get_settings()
    failures = 0
    for example_id, entry in sorted(get_examples().items()):
        expected = expected_periods(entry)
        differing = period_discrepancies(entry)
        print("\n" + "=" * 60)
        print(f"{example_id}: {entry.get('title', '')}")
        print("=" * 60)
        try:
            study = period_study(experiment_from_example(example_id), settings)
        except MultirootError as e:
            print("  [ERROR]", e)
            failures += 1
            continue
        print(f"  overall: {study.overall}  (candidate {study.candidate:g}, span {study.span:g})")
        for n, verdict in enumerate(study.per_coordinate, start=1):
            key = f"x{n}"
            target = expected.get(key)
            ok = verdict.period is not None and target is not None and abs(verdict.period - target) < 1e-9
            failures += 0 if ok else 1
            line = f"  {key}: {verdict}  expected {target}  {'ok' if ok else 'MISMATCH'}"
            if key in differing:
                line += f"  (published {differing[key][0]}, known discrepancy)"
            print(line)
        if entry.get("period_note"):
            print(f"  note: {entry['period_note']}")
    print("\n" + "=" * 60)
    print("Done." if not failures else f"Done with {failures} mismatches.")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
