#!/usr/bin/env python3
"""Perturbation-scaling and Gronwall study over a family of eps values.

Writes the report to <out>/stability_report.{txt,json} and one distance CSV
per eps, like ``plateflow compare``.
"""
import argparse
import sys
from pathlib import Path

from plateflow.cli import run_compare
from plateflow.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "compare.toml", type=Path)
    ap.add_argument("--eps", type=float, default=1e-2, help="largest eps; the family is eps, eps/2, eps/4")
    ap.add_argument("--out", default="runs/stability")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    cfg = load_config(args.config).with_overrides(args.set)
    code, rep = run_compare(cfg, args.eps, out_dir=args.out)
    print(rep.text())
    return code


if __name__ == "__main__":
    sys.exit(main())
