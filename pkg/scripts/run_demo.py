#!/usr/bin/env python3
"""Run the bump-load demo and print its energy budget.

    python scripts/run_demo.py [--out runs/demo] [--set grid.nx=64 ...]
"""
import argparse
import sys
from pathlib import Path

from plateflow.cli import run_simulate, summarize_energy
from plateflow.config import load_config
from plateflow.store import ENERGY_FILE, read_rows

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "demo.toml", type=Path)
    ap.add_argument("--out", default="runs/demo")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    cfg = load_config(args.config).with_overrides(args.set)
    code, man = run_simulate(cfg, out_dir=args.out)
    for name, ok in man.checks.items():
        print(f"{name:15s} {'PASS' if ok else 'FAIL'}")
    if man.error:
        print(man.error)
        return code
    for k, v in summarize_energy(read_rows(Path(args.out) / ENERGY_FILE)).items():
        print(f"{k:18s} {v}")
    return code


if __name__ == "__main__":
    sys.exit(main())
