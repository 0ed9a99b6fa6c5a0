"""Command line front end: ``plateflow simulate | compare | verify-ops | energy-report``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 solver or contact failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SimulationConfig, config_hash, load_config, write_config
from .errors import ConfigError, ContactError, ShapeError, SolverError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
log = logging.getLogger("plateflow")


def _threads(n: int):
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _load(args) -> SimulationConfig:
    cfg = load_config(args.config) if args.config else SimulationConfig()
    sets = list(args.set or [])
    if args.seed is not None:
        sets.append(f"seed={args.seed}")
    if getattr(args, "eps", None) is not None and args.command == "simulate":
        sets.append(f"perturbation.eps={args.eps}")
    if args.out:
        sets.append(f'output.dir="{args.out}"')
    return cfg.with_overrides(sets) if sets else cfg


# --- simulate -------------------------------------------------------------------------

def simulation_checks(rows: list[dict], tol_kin: float = 1e-8, tol_div: float = 1e-8,
                      budget: float = 0.01) -> dict:
    """Invariant checks on the per-step energy rows of one run."""
    e0 = rows[0]["kinetic"] + rows[0]["plate_kinetic"] + rows[0]["bending"] + rows[0]["tension"]
    scale = max(e0 + max(abs(r["work"]) for r in rows), 1e-300)
    v0 = rows[0]["volume"]
    return {
        "kinematic": max(r["kinematic_residual"] for r in rows) <= tol_kin,
        "divergence": max(r["divergence"] for r in rows) <= tol_div,
        "volume": max(abs(r["volume"] - v0) for r in rows) <= 1e-10 * max(1.0, v0),
        "energy_budget": max(abs(r["residual"]) for r in rows) <= budget * scale + 1e-14,
    }


def run_simulate(cfg: SimulationConfig, out_dir=None, threads: int = 1) -> tuple:
    from .simulation import ENERGY_COLUMNS, Snapshot, simulate
    from .store import ENERGY_FILE, RunManifest, now, write_rows, write_trajectory
    out = Path(out_dir or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(config_hash(cfg), __version__, now(), threads=threads)
    files = [write_config(cfg, out / "config.toml")]
    last = {}

    def keep(state):
        last["state"] = state

    try:
        res = simulate(cfg, callback=keep)
    except (SolverError, ContactError) as exc:
        dump = out / "failure_state.npz"
        st = last.get("state")
        if st is not None:
            s = Snapshot.of(st)
            np.savez(dump, t=s.t, u_x=s.v.u_x, u_y=s.v.u_y, p=s.p, eta=s.eta, eta_t=s.eta_t)
            files.append(dump)
        step = getattr(exc, "step", None)
        man.error = f"{type(exc).__name__} at step {step}: {exc}; last good state: {dump if st else 'none'}"
        man.finished, man.files = now(), [str(f) for f in files]
        man.write(out)
        return EXIT_SOLVER, man
    files += write_trajectory(out, res.trajectory)
    files.append(write_rows(out / ENERGY_FILE, res.energy, ENERGY_COLUMNS))
    man.checks = simulation_checks(res.energy)
    man.finished, man.files = now(), [str(f) for f in files]
    man.write(out)
    return (EXIT_OK if man.passed else EXIT_CHECK), man


# --- compare --------------------------------------------------------------------------

DISTANCE_COLUMNS = ("t", "kinetic", "plate_velocity", "bending", "dissipation", "I", "h", "int_h", "bound")


def run_compare(cfg: SimulationConfig, eps: float | None, out_dir=None):
    from .stability import gronwall_bound, verify_stability
    from .store import write_rows
    out = Path(out_dir or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    eps = cfg.perturbation.eps if eps is None else eps
    family = () if eps == 0 else (eps, eps / 2, eps / 4)
    rep = verify_stability(cfg, family, tiny_eps=1e-6 if eps == 0 else 0.0)
    for e, ds in rep.series.items():
        w = rep.weight
        H = w.integral()
        bound = gronwall_bound(ds.D0, w, scale=rep.cstar if math.isfinite(rep.cstar) else 1.0)
        rows = [{"t": t, **{k: ds.components[k][i] for k in ds.components}, "I": ds.I[i], "h": w.h[i],
                 "int_h": H[i], "bound": bound[i]} for i, t in enumerate(ds.times)]
        write_rows(out / f"distance_eps{e:.6g}.csv", rows, DISTANCE_COLUMNS)
    (out / "stability_report.txt").write_text(rep.text() + "\n")
    (out / "stability_report.json").write_text(json.dumps(rep.to_dict(), indent=2, default=float) + "\n")
    return (EXIT_OK if rep.passed else EXIT_CHECK), rep


# --- energy report --------------------------------------------------------------------

def summarize_energy(rows: list[dict]) -> dict:
    tot = [r["kinetic"] + r["plate_kinetic"] + r["bending"] + r["tension"] for r in rows]
    e0 = tot[0]
    scale = e0 + max(abs(r["work"]) for r in rows)
    res = max(abs(r["residual"]) for r in rows)
    return {"steps": int(rows[-1]["step"]), "initial_energy": e0, "final_energy": tot[-1],
            "dissipation": rows[-1]["dissipation"], "work": rows[-1]["work"],
            "max_abs_residual": res,
            "relative_residual": res / scale if scale > 0 else res,
            "monotone": all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(tot, tot[1:]))}


# --- argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plateflow", description="Fluid-plate interaction simulator and verifier.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eps=False):
        sp.add_argument("--config", type=Path, help="TOML configuration file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="seed for perturbation shapes")
        sp.add_argument("--threads", type=int, default=1, help="BLAS/LAPACK threads (default 1)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. grid.nx=64")
        if eps:
            sp.add_argument("--eps", type=float, help="perturbation size")

    common(sub.add_parser("simulate", help="run one coupled simulation"), eps=True)
    common(sub.add_parser("compare", help="paired runs and the stability report"), eps=True)
    vo = sub.add_parser("verify-ops", help="operator verification suites")
    vo.add_argument("--level", choices=("quick", "full"), default="quick")
    vo.add_argument("--out", help="write the JSON report here")
    vo.add_argument("--threads", type=int, default=1)
    er = sub.add_parser("energy-report", help="energy budget of a finished run or a fresh one")
    er.add_argument("run_dir", nargs="?", type=Path, help="run directory containing energy.csv")
    common(er)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    if args.threads < 1:
        log.error("--threads must be positive")
        return EXIT_USAGE
    try:
        with _threads(args.threads):
            return _dispatch(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_USAGE
    except (SolverError, ContactError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except ShapeError as exc:
        log.error("shape error: %s", exc)
        return EXIT_CHECK


def _dispatch(args) -> int:
    if args.command == "verify-ops":
        from .verify import run_verify_ops
        rep = run_verify_ops(args.level)
        print(rep.text())
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "verify_ops.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
        return EXIT_OK if rep.passed else EXIT_CHECK

    if args.command == "energy-report":
        from .store import ENERGY_FILE, read_rows
        if args.run_dir is not None:
            path = args.run_dir / ENERGY_FILE
            if not path.exists():
                raise ConfigError(f"no {ENERGY_FILE} in {args.run_dir}")
            rows = read_rows(path)
        else:
            from .simulation import simulate
            rows = simulate(_load(args)).energy
        summary = summarize_energy(rows)
        for k, v in summary.items():
            print(f"{k}: {v}")
        return EXIT_OK if summary["relative_residual"] <= 0.01 else EXIT_CHECK

    cfg = _load(args)
    if args.command == "simulate":
        code, man = run_simulate(cfg, threads=args.threads)
        for k, ok in man.checks.items():
            print(f"{k}: {'PASS' if ok else 'FAIL'}")
        if man.error:
            print(man.error)
        print(f"config hash {man.config_hash}; files in {cfg.output.dir}")
        return code
    code, rep = run_compare(cfg, args.eps)
    print(rep.text())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
