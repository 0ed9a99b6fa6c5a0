"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary) and then asserts the same condition.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from plateflow.config import load_config
from plateflow.stability import lps_index, verify_stability
from plateflow import verify

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(n: int, ok: bool, detail: str, seconds: float | None = None):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail}"
    line += f"; {seconds:.1f} s)" if seconds is not None else ")"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.fixture(scope="module")
def stability():
    cfg = load_config(CONFIGS / "compare.toml")
    with Timer() as t:
        rep = verify_stability(cfg, eps_family=(1e-2, 5e-3, 2.5e-3), tiny_eps=1e-6)
    return rep, t.seconds


def test_criterion_1_transform_solenoidality():
    with Timer() as t:
        r = verify.transform_solenoidality((32, 64, 128), n_fields=20)
    ok = r["order"] >= 1.8 and r["discrete"][-1] <= 1e-6 and t.seconds < 30
    report(1, ok, f"sampled-field order {r['order']:.3f} (max div {r['sampled'][-1]:.2e} at nx=128), "
                  f"grid-solenoidal fields max div {r['discrete'][-1]:.2e}", t.seconds)


def test_criterion_2_round_trip():
    with Timer() as t:
        r = verify.transform_round_trip((32, 64, 128), n_fields=5)
    ok = r["constant"] <= 1e-10 and max(r["varying"]) <= 1e-10 and r["order"] >= 1.8 and t.seconds < 10
    report(2, ok, f"constant {r['constant']:.1e}, varying {max(r['varying']):.1e}, "
                  f"hat vs continuum order {r['order']:.3f}", t.seconds)


def test_criterion_3_mollifier_structure():
    with Timer() as t:
        r = verify.mollifier_structure(nx=128, widths=(2, 4, 8))
    ok = (max(r["divergence"]) <= 1e-6 and max(r["trace"]) <= 1e-8 and r["monotone"]
          and 0.8 <= r["order"] <= 1.2 and t.seconds < 60)
    report(3, ok, f"div {max(r['divergence']):.1e}, trace {max(r['trace']):.1e}, "
                  f"order {r['order']:.3f}, monotone {r['monotone']}", t.seconds)


def test_criterion_4_energy_budget():
    from plateflow.simulation import simulate
    cfg = load_config(CONFIGS / "compare.toml").with_overrides(
        ["grid.dt=0.002", "grid.t_end=2.0", "perturbation.eps=0", "initial.eta0_amplitude=0.1",
         "output.stride=1000"])
    assert cfg.plate.gamma_visc > 0 and cfg.grid.n_steps == 1000
    with Timer() as t:
        rows = simulate(cfg).energy
    tot = np.array([r["kinetic"] + r["plate_kinetic"] + r["bending"] + r["tension"] for r in rows])
    drift = max(abs(r["residual"]) for r in rows) / tot[0]
    mono = bool(np.all(np.diff(tot) <= 1e-12 * tot[0]))
    ok = drift <= 0.01 and mono and t.seconds < 120
    report(4, ok, f"max drift {100 * drift:.3f}% of E0 over {len(rows) - 1} steps, monotone {mono}", t.seconds)


def test_criterion_5_uniqueness(stability):
    rep, _ = stability
    checks = {c.name: c for c in rep.checks}
    ok = checks["uniqueness"].passed and checks["tiny-perturbation"].passed
    report(5, ok, f"{checks['uniqueness'].detail}; {checks['tiny-perturbation'].detail}")


def test_criterion_6_scaling(stability):
    rep, seconds = stability
    c = {c.name: c for c in rep.checks}
    ok = c["scaling-exponent"].passed and c["pair-ratios"].passed and seconds < 300
    report(6, ok, f"exponent {rep.exponent:.4f} (final-time {rep.final_exponent:.4f}), "
                  f"ratios {c['pair-ratios'].detail}", seconds)


def test_criterion_7_gronwall(stability):
    rep, _ = stability
    c = {c.name: c for c in rep.checks}
    ok = c["gronwall"].passed and c["cstar-spread"].passed and math.isfinite(rep.cstar)
    per = ", ".join(f"{r['cstar']:.4f}" for r in rep.scaling)
    report(7, ok, f"C* = {rep.cstar:.4f}, per-run {per}, {c['cstar-spread'].detail}")


def test_criterion_8_korn():
    with Timer() as t:
        r = verify.korn_study(nx=128, n_snapshots=10)
    lo, hi = min(r["ratios"]), max(r["ratios"])
    report(8, 0.95 <= lo and hi <= 1.05 and len(r["ratios"]) == 10,
           f"ratios in [{lo:.4f}, {hi:.4f}] at nx=128", t.seconds)


def test_criterion_9_reynolds_transport():
    with Timer() as t:
        r = verify.reynolds_study()
    ok = len(r["ratios"]) == 5 and all(1.7 <= q <= 2.3 for q in r["ratios"])
    report(9, ok, "halving ratios " + ", ".join(f"{q:.3f}" for q in r["ratios"]), t.seconds)


def test_criterion_10_manufactured_convergence():
    with Timer() as t:
        fs = verify.fluid_space_order()
        ft = verify.fluid_time_order()
        pm = verify.plate_mms()
    ok = (ft["order"] >= 0.8 and fs["order"] >= 1.8 and pm["order"] >= 1.8 and pm["time_order"] >= 1.8
          and t.seconds < 180)
    report(10, ok, f"fluid dt {ft['order']:.2f}, fluid hx {fs['order']:.2f}, "
                   f"plate dt {pm['time_order']:.2f}, plate hx {pm['order']:.2f}", t.seconds)


def test_criterion_11_lps_index():
    v = lps_index(math.inf, 2)
    report(11, v == 1, f"lps_index(inf, 2) = {v!r}")
