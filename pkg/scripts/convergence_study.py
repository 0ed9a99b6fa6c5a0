#!/usr/bin/env python3
"""Refinement studies: transforms, mollifier, manufactured fluid and plate solutions.

Prints a table of errors per level and the fitted orders; ``--json`` dumps
the raw numbers.
"""
import argparse
import json
import sys
import time

from plateflow import verify

STUDIES = {
    "transform-divergence": lambda: verify.transform_solenoidality(),
    "transform-round-trip": lambda: verify.transform_round_trip(),
    "mollifier": lambda: verify.mollifier_structure(),
    "fluid-space": lambda: verify.fluid_space_order(),
    "fluid-time": lambda: verify.fluid_time_order(),
    "plate": lambda: verify.plate_mms(),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("studies", nargs="*", metavar="STUDY", help=f"any of {', '.join(STUDIES)} (default: all)")
    ap.add_argument("--json", help="write all results to this file")
    args = ap.parse_args()
    unknown = set(args.studies) - set(STUDIES)
    if unknown:
        ap.error(f"unknown studies: {', '.join(sorted(unknown))}")
    results = {}
    for name in args.studies or STUDIES:
        t0 = time.perf_counter()
        r = STUDIES[name]()
        results[name] = r
        orders = {k: v for k, v in r.items() if "order" in k and isinstance(v, float)}
        shown = ", ".join(f"{k} {v:.3f}" for k, v in orders.items())
        print(f"{name:22s} {shown}  ({time.perf_counter() - t0:.1f} s)")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, default=float)
    return 0


if __name__ == "__main__":
    sys.exit(main())
