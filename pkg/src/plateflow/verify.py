"""Operator verification suites shared by ``plateflow verify-ops`` and the acceptance tests.

Each study returns plain numbers; :func:`run_verify_ops` turns them into
PASS/FAIL checks at the documented tolerances.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import build_domain_map, mapped_divergence
from .grid import GridSpec, ScalarField, VectorField, divergence, gradient
from .manufactured import (GEOMETRY_PAIRS, PlateMMS, continuum_hat, discrete_velocity, random_fields,
                           sample_velocity)
from .mollify import (MollifierSpec, convolution_identity_defect, interface_flux, kernel_normalisation,
                      l2_time_space, mollify_scalar, mollify_solenoidal)
from .profiles import stream_velocity
from .stability import Check
from .transforms import check_transform, hat_transform


def fitted_order(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    slope, _ = np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(err, float)), 1)
    return float(slope)


def _grid(nx: int, L: float = 2.0) -> GridSpec:
    return GridSpec(L=L, nx=nx, ny=nx // 2, dt=1e-2, t_end=1.0)


def _div(v: VectorField, eta) -> float:
    return float(np.abs(mapped_divergence(v, eta).values).max())


# --- transforms ------------------------------------------------------------------------

def transform_solenoidality(levels=(32, 64, 128), n_fields: int = 20, seed: int = 0) -> dict:
    """Divergence of hat/check images.

    ``sampled``: fields sampled from continuum solenoidal fields, whose
    discrete divergence is a truncation error; ``discrete``: stream-function
    fields that are discretely solenoidal, whose images must stay so.
    """
    fields = random_fields(n_fields, seed)
    sampled, exact = [], []
    for nx in levels:
        g = _grid(nx)
        worst_s = worst_d = 0.0
        for g1, g2 in GEOMETRY_PAIRS:
            e1, e2 = g1.nodes(g), g2.nodes(g)
            dmap = build_domain_map(ScalarField(e1, "plate", g), ScalarField(e2, "plate", g))
            for f in fields:
                w2 = sample_velocity(f, g2, g)
                u1 = sample_velocity(f, g1, g)
                worst_s = max(worst_s, _div(hat_transform(w2, dmap), e1), _div(check_transform(u1, dmap), e2))
                d2 = discrete_velocity(f, g2, g)
                d1 = discrete_velocity(f, g1, g)
                worst_d = max(worst_d, _div(hat_transform(d2, dmap), e1), _div(check_transform(d1, dmap), e2))
        sampled.append(worst_s)
        exact.append(worst_d)
    h = [2.0 / n for n in levels]
    return {"levels": list(levels), "sampled": sampled, "discrete": exact, "order": fitted_order(h, sampled)}


def transform_round_trip(levels=(32, 64, 128), n_fields: int = 5, seed: int = 1) -> dict:
    """Round-trip error for constant and varying gamma and the hat error against the continuum map."""
    fields = random_fields(n_fields, seed)
    const_err, vary_err, cont_err = 0.0, [], []
    for nx in levels:
        g = _grid(nx)
        ones = ScalarField(np.ones(g.nx + 1), "plate", g)
        two = ScalarField(np.full(g.nx + 1, 2.0), "plate", g)
        cmap = build_domain_map(two, ones)
        rt_v = rt_c = 0.0
        for f in fields:
            w = sample_velocity(f, GEOMETRY_PAIRS[0][0], g)
            back = check_transform(hat_transform(w, cmap), cmap)
            const_err = max(const_err, (back - w).max_abs())
            for g1, g2 in GEOMETRY_PAIRS:
                dmap = build_domain_map(ScalarField(g1.nodes(g), "plate", g), ScalarField(g2.nodes(g), "plate", g))
                w2 = sample_velocity(f, g2, g)
                rt_v = max(rt_v, (check_transform(hat_transform(w2, dmap), dmap) - w2).max_abs())
                ref = continuum_hat(f, g1, g2, g)
                rt_c = max(rt_c, (hat_transform(w2, dmap) - ref).max_abs())
        vary_err.append(rt_v)
        cont_err.append(rt_c)
    h = [1.0 / (n // 2) for n in levels]
    return {"levels": list(levels), "constant": const_err, "varying": vary_err,
            "continuum": cont_err, "order": fitted_order(h, cont_err)}


# --- mollifier -------------------------------------------------------------------------

def _moving_eta(g: GridSpec, t: float) -> np.ndarray:
    from .manufactured import Geometry
    return Geometry(0.15 * np.sin(3.0 * t) + 0.05, 1, 0.2).nodes(g)


def mollifier_structure(nx: int = 128, n_t: int = 41, dt: float = 0.01, widths=(2, 4, 8)) -> dict:
    """Divergence and trace of the geometric mollification on a moving plate, and the
    delta-convergence on a static plate (L-infinity in time, Jacobian L2 in space)."""
    from .manufactured import Geometry, StreamField
    g = _grid(nx)
    F = StreamField(1.0, np.pi, 0.3, 1)
    X, Y = g.coords("node")
    T = np.arange(n_t) * dt
    etas = np.array([_moving_eta(g, t) for t in T])
    phis = [stream_velocity(np.cos(2 * t) * F.F(X, Y) + 0.3 * t * F.F(X, Y) ** 2, e, g) for t, e in zip(T, etas)]
    b = np.array([interface_flux(p) for p in phis])
    div, trace = [], []
    for m in widths:
        spec = MollifierSpec.build(m * dt, dt)
        out = mollify_solenoidal(phis, etas, spec, b=b)
        div.append(max(_div(o, e) for o, e in zip(out, etas)))
        bd = mollify_scalar(b, spec)
        trace.append(max(float(np.abs(interface_flux(o) - bd[n]).max()) for n, o in enumerate(out)))
    e = Geometry(0.1, 1, 0.0).nodes(g)
    static = [stream_velocity(np.sin(3 * t) * F.F(X, Y), e, g) for t in T]
    conv = []
    for m in widths:
        spec = MollifierSpec.build(m * dt, dt)
        conv.append(l2_time_space(mollify_solenoidal(static, [e] * n_t, spec), static, [e] * n_t, "max"))
    deltas = [m * dt for m in widths]
    return {"widths": list(widths), "divergence": div, "trace": trace, "convergence": conv,
            "order": fitted_order(deltas, conv),
            "monotone": all(a < b for a, b in zip(conv, conv[1:]))}


def kernel_checks(deltas=(0.02, 0.05, 0.1, 0.4)) -> dict:
    mass = [abs(MollifierSpec.build(d, d / 4).kernel_mass() - 1.0) for d in deltas]
    t = np.linspace(0, 1, 2001)
    u = np.stack([np.sin(3 * t), np.cos(2 * t)], axis=1)
    v = np.stack([t ** 2, np.exp(-t)], axis=1)
    defects = [convolution_identity_defect(u, v, t[1] - t[0], d) for d in (0.1, 0.05, 0.025)]
    return {"mass": max(mass), "identity_defects": defects, "normalisation": kernel_normalisation()}


# --- flat operators --------------------------------------------------------------------

def grid_identities(nx: int = 32, seed: int = 0) -> dict:
    g = _grid(nx)
    rng = np.random.default_rng(seed)
    s = ScalarField(rng.standard_normal(g.shape("center")), "center", g)
    ux = rng.standard_normal(g.shape("face-x"))
    uy = rng.standard_normal(g.shape("face-y"))
    ux[[0, -1]] = 0.0
    uy[:, [0, -1]] = 0.0
    f = VectorField(ux, uy, g)
    gs = gradient(s)
    inner = np.sum(gs.u_x * f.u_x) + np.sum(gs.u_y * f.u_y)
    adj = abs(inner + np.sum(s.values * divergence(f).values))
    lap = divergence(gs).values
    v = s.values
    ref = np.zeros_like(v)
    ref[1:-1, 1:-1] = ((v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / g.hx ** 2
                       + (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / g.hy ** 2)
    return {"adjointness": float(adj / max(1.0, abs(inner))),
            "laplacian": float(np.abs(lap[1:-1, 1:-1] - ref[1:-1, 1:-1]).max() / np.abs(ref).max())}


# --- coupled-run diagnostics ---------------------------------------------------------------

def _moving_config(nx: int, dt: float, t_end: float, vortex: float = 0.0):
    from .config import SimulationConfig
    sets = ['initial.eta0="cosine_bump"', "initial.eta0_amplitude=0.1", f"grid.nx={nx}", f"grid.ny={nx // 2}",
            f"grid.dt={dt}", f"grid.t_end={t_end}", 'initial.eta_star="sine_cutoff"',
            "initial.eta_star_amplitude=0.5"]
    if vortex:
        sets += ['initial.v0="vortex"', f"initial.v0_amplitude={vortex}"]
    return SimulationConfig().with_overrides(sets)


def korn_study(nx: int = 128, n_snapshots: int = 10, dt: float = 2e-3) -> dict:
    from .fluid import korn_ratio
    from .simulation import simulate
    cfg = _moving_config(nx, dt, n_snapshots * dt, vortex=1.0)
    run = simulate(cfg, stride=1)
    ratios = [korn_ratio(s.v, s.eta) for s in run.snapshots[1:]]
    return {"nx": nx, "ratios": ratios}


def reynolds_study(nx: int = 32, dt: float = 4e-3, t_end: float = 0.2) -> dict:
    """Time-mean |residual| of the transport identity for dt and dt/2 on the same grid."""
    from .simulation import simulate
    from .transport import TEST_FUNCTIONS, transport_residuals
    means = {}
    for d in (dt, dt / 2):
        snaps = simulate(_moving_config(nx, d, t_end), stride=1).snapshots
        means[d] = [float(np.mean(np.abs(transport_residuals(snaps, phi)))) for phi in TEST_FUNCTIONS]
    ratios = [a / b for a, b in zip(means[dt], means[dt / 2])]
    return {"dt": dt, "coarse": means[dt], "fine": means[dt / 2], "ratios": ratios}


def plate_energy_audit(nx: int = 32, steps: int = 1000) -> dict:
    from .plate import PlateParams, PlateState, plate_energy, plate_step
    g = GridSpec(nx=nx, ny=8, dt=2e-3, t_end=steps * 2e-3)
    params = PlateParams(gamma_visc=0.0)
    x = g.x_nodes
    s = PlateState.from_arrays(g, 1 + 0.1 * np.sin(np.pi * x / g.L) ** 2, np.zeros(nx + 1))
    e0 = sum(plate_energy(s, params).values())
    drift = 0.0
    for _ in range(steps):
        s = plate_step(s, params)
        drift = max(drift, abs(sum(plate_energy(s, params).values()) - e0))
    return {"relative_drift": drift / e0}


def _plate_run(nx: int, dt: float, t_end: float):
    from .plate import PlateParams, PlateState, plate_step
    params, mms = PlateParams(), PlateMMS()
    g = GridSpec(nx=nx, ny=8, dt=dt, t_end=t_end)
    x, L = g.x_nodes, g.L
    s = PlateState.from_arrays(g, mms.eta(0, x, L), mms.eta_t(0, x, L))
    n = int(round(t_end / dt))
    for k in range(n):
        s = plate_step(s, params, g=mms.source((k + 0.5) * dt, x, L, params) / params.rho_s, dt=dt)
    return s.eta.values, mms.eta(n * dt, x, L), g


def plate_mms(levels=(16, 32, 64), dts=(0.02, 0.01, 0.005), t_end: float = 0.5,
              nx_time: int = 64, dt_space: float = 1e-3) -> dict:
    """Plate orders in hx (exact solution, tiny dt) and in dt (same-grid reference)."""
    errs, hs = [], []
    for nx in levels:
        eta, exact, g = _plate_run(nx, dt_space, t_end)
        errs.append(float(np.abs(eta - exact).max()))
        hs.append(g.hx)
    ref = _plate_run(nx_time, min(dts) / 16, t_end)[0]
    terrs = [float(np.abs(_plate_run(nx_time, dt, t_end)[0] - ref).max()) for dt in dts]
    return {"levels": list(levels), "errors": errs, "order": fitted_order(hs, errs),
            "dts": list(dts), "time_errors": terrs, "time_order": fitted_order(dts, terrs)}


def _fluid_run(nx: int, dt: float, t_end: float, mms, start):
    import warnings

    from .fluid import FluidParams, FluidState, SolverCache, fluid_step, mapped_operators
    g = GridSpec(nx=nx, ny=nx // 2, dt=dt, t_end=t_end)
    prm = FluidParams(forcing=mms.forcing)
    st = FluidState(mms.velocity(start, g), ScalarField(mms.pressure(start, g), "center", g))
    eta = ScalarField(np.ones(nx + 1), "plate", g)
    eta_t = np.zeros(nx + 1)
    ops, cache = mapped_operators(eta, eta_t), SolverCache()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(int(round(t_end / dt))):
            st = fluid_step(st, eta, eta_t, prm, dt, ops=ops, cache=cache)
    return st.v, g


def _vmax(a: VectorField, b: VectorField) -> float:
    return float(max(np.abs(a.u_x - b.u_x).max(), np.abs(a.u_y - b.u_y).max()))


def fluid_space_order(levels=(16, 32, 64), dt: float = 0.01, steps: int = 150) -> dict:
    """Steady manufactured solution: start exact, march to a discrete steady state."""
    from .manufactured import FluidMMS
    mms = FluidMMS(omega=0.0)
    errs, hs = [], []
    for nx in levels:
        v, g = _fluid_run(nx, dt, steps * dt, mms, 0.0)
        errs.append(_vmax(v, mms.velocity(0.0, g)))
        hs.append(g.hx)
    return {"levels": list(levels), "errors": errs, "order": fitted_order(hs, errs)}


def fluid_time_order(nx: int = 32, dts=(0.02, 0.01, 0.005), t_end: float = 0.5,
                     dt_ref: float = 6.25e-4) -> dict:
    """Time-periodic manufactured solution; errors against a fine-dt run on the same grid."""
    from .manufactured import FluidMMS
    mms = FluidMMS(omega=2.0)
    ref, _ = _fluid_run(nx, dt_ref, t_end, mms, 0.0)
    errs = [_vmax(_fluid_run(nx, dt, t_end, mms, 0.0)[0], ref) for dt in dts]
    return {"nx": nx, "dts": list(dts), "errors": errs, "order": fitted_order(dts, errs)}


# --- report ----------------------------------------------------------------------------

@dataclass
class OpsReport:
    level: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed "
                     f"({self.level}, {self.seconds:.1f} s)")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"level": self.level, "passed": self.passed, "seconds": self.seconds,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks]}


def run_verify_ops(level: str = "quick") -> OpsReport:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    full = level == "full"
    t0 = time.perf_counter()
    rep = OpsReport(level)
    add = rep.checks.append

    gi = grid_identities()
    add(Check("grid-adjointness", gi["adjointness"] <= 1e-12, f"{gi['adjointness']:.2e} <= 1e-12"))
    add(Check("div-grad-laplacian", gi["laplacian"] <= 1e-12, f"{gi['laplacian']:.2e} <= 1e-12"))

    levels = (32, 64, 128)
    ts = transform_solenoidality(levels, n_fields=20 if full else 3)
    add(Check("transform-divergence-order", ts["order"] >= 1.8, f"order {ts['order']:.3f} >= 1.8"))
    add(Check("transform-divergence-exact", max(ts["discrete"]) <= 1e-6,
              f"{max(ts['discrete']):.2e} <= 1e-6 on discretely solenoidal input"))
    rt = transform_round_trip(levels, n_fields=5 if full else 2)
    add(Check("round-trip-constant", rt["constant"] <= 1e-10, f"{rt['constant']:.2e} <= 1e-10"))
    add(Check("round-trip-varying", max(rt["varying"]) <= 1e-10, f"{max(rt['varying']):.2e} <= 1e-10"))
    add(Check("hat-vs-continuum-order", rt["order"] >= 1.8, f"order {rt['order']:.3f} >= 1.8"))

    kc = kernel_checks()
    add(Check("kernel-mass", kc["mass"] <= 1e-10, f"{kc['mass']:.2e} <= 1e-10"))
    d = kc["identity_defects"]
    add(Check("convolution-identity", d[-1] < d[0], ", ".join(f"{x:.2e}" for x in d)))
    ms = mollifier_structure(nx=128 if full else 32, n_t=41 if full else 25)
    add(Check("mollifier-divergence", max(ms["divergence"]) <= 1e-6, f"{max(ms['divergence']):.2e} <= 1e-6"))
    add(Check("mollifier-trace", max(ms["trace"]) <= 1e-8, f"{max(ms['trace']):.2e} <= 1e-8"))
    add(Check("mollifier-convergence", ms["monotone"] and 0.8 <= ms["order"] <= 1.2,
              f"order {ms['order']:.3f} in [0.8, 1.2]"))

    pm = plate_mms()
    add(Check("plate-space-order", pm["order"] >= 1.8, f"order {pm['order']:.3f} >= 1.8"))
    add(Check("plate-time-order", pm["time_order"] >= 1.8, f"order {pm['time_order']:.3f} >= 1.8"))
    pe = plate_energy_audit(steps=1000 if full else 200)
    add(Check("plate-energy", pe["relative_drift"] <= 1e-10, f"{pe['relative_drift']:.2e} <= 1e-10"))

    ks = korn_study(nx=128 if full else 32, n_snapshots=10 if full else 3)
    lo, hi = min(ks["ratios"]), max(ks["ratios"])
    tol = 0.05
    add(Check("korn", 1 - tol <= lo and hi <= 1 + tol, f"ratios in [{lo:.4f}, {hi:.4f}] at nx = {ks['nx']}"))
    if full:
        fs = fluid_space_order()
        add(Check("fluid-space-order", fs["order"] >= 1.8, f"order {fs['order']:.3f} >= 1.8"))
        ft = fluid_time_order()
        add(Check("fluid-time-order", ft["order"] >= 0.8, f"order {ft['order']:.3f} >= 0.8"))
        rs = reynolds_study()
        add(Check("reynolds-order", all(1.7 <= r <= 2.3 for r in rs["ratios"]),
                  "ratios " + ", ".join(f"{r:.3f}" for r in rs["ratios"])))
    rep.seconds = time.perf_counter() - t0
    return rep
