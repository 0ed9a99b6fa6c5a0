"""Weak-strong stability harness.

Two trajectories on the same grid are compared through the distance

    I(t) = 1/2 |w1|^2 + 1/2 |d_t(eta1 - eta2)|^2 + 1/2 |Lap(eta1 - eta2)|^2 + int_0^t |eps(w1)|^2,

with w1 = v1 - hat(v2) on Omega_eta1, and against the Gronwall bound
D0 exp(C int_0^t h) built from the norms of the second ("strong") run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, ShapeError
from .fluid import _interior, dual_norm_sq, fluid_norm_sq, gradient_norms, mapped_operators
from .geometry import as_plate, build_domain_map, slope_nodes, to_centers
from .grid import GridSpec, VectorField
from .mollify import Trajectory
from .plate import _matrices
from .transforms import hat_transform

COMPONENTS = ("kinetic", "plate_velocity", "bending", "dissipation")


def _states(run) -> tuple:
    return run.states if isinstance(run, Trajectory) else tuple(run)


def _times(run, states) -> np.ndarray:
    if isinstance(run, Trajectory):
        return run.times
    return np.array([s.t for s in states], dtype=float)


@dataclass(frozen=True)
class DistanceSeries:
    times: np.ndarray
    I: np.ndarray
    components: dict
    D0: float

    @property
    def max_I(self) -> float:
        return float(self.I.max())


def _plate_difference(g: GridSpec, eta1, eta2, et1, et2) -> tuple[float, float]:
    lap, _, c = _matrices(g.nx, g.hx)
    du = np.asarray(eta1)[1:-1] - np.asarray(eta2)[1:-1]
    dv = np.asarray(et1)[1:-1] - np.asarray(et2)[1:-1]
    return 0.5 * g.hx * float(dv @ dv), 0.5 * g.hx * float(np.sum(c * (lap @ du) ** 2))


def difference_field(v1: VectorField, eta1, v2: VectorField, eta2) -> VectorField:
    """w1 = v1 - hat(v2) on Omega_eta1."""
    g = v1.grid
    e1, e2 = as_plate(eta1, g), as_plate(eta2, g)
    if np.array_equal(e1.values, e2.values):
        return v1 - v2
    return v1 - hat_transform(v2, build_domain_map(e1, e2))


def distance_series(run1, run2) -> DistanceSeries:
    """I(t) and its parts at every common sample of two runs of snapshots."""
    s1, s2 = _states(run1), _states(run2)
    t1, t2 = _times(run1, s1), _times(run2, s2)
    if len(s1) != len(s2) or not np.allclose(t1, t2, rtol=0, atol=1e-12):
        raise ShapeError("runs have different sample times")
    if s1[0].v.grid != s2[0].v.grid:
        raise ShapeError("runs live on different grids")
    g = s1[0].v.grid
    n = len(s1)
    comp = {k: np.zeros(n) for k in COMPONENTS}
    eps_sq = np.zeros(n)
    for k, (a, b) in enumerate(zip(s1, s2)):
        w1 = difference_field(a.v, a.eta, b.v, b.eta)
        comp["kinetic"][k] = 0.5 * fluid_norm_sq(w1, a.eta)
        comp["plate_velocity"][k], comp["bending"][k] = _plate_difference(g, a.eta, b.eta, a.eta_t, b.eta_t)
        eps_sq[k] = gradient_norms(w1, a.eta)[1]
    if n > 1:
        comp["dissipation"] = cumulative_trapezoid(eps_sq, t1, initial=0.0)
    I = sum(comp.values())
    return DistanceSeries(t1.copy(), I, comp, float(I[0]))


# --- Gronwall weight ------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallWeight:
    """h = h1 + h2 per sample; ``dual`` marks the finite-difference surrogate."""
    times: np.ndarray
    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    C: float
    parts: dict = field(default_factory=dict)
    dual_is_surrogate: bool = True

    def integral(self) -> np.ndarray:
        """Cumulative trapezoid of h from the first sample."""
        if self.times.size < 2:
            return np.zeros(self.times.size)
        return cumulative_trapezoid(self.h, self.times, initial=0.0)


def w1s_norm(v: VectorField, eta) -> float:
    """Discrete W^{1,2} norm (|v|^2 + |grad v|^2)^(1/2) on Omega_eta."""
    return math.sqrt(fluid_norm_sq(v, eta) + gradient_norms(v, eta)[0])


def lipschitz_norm(eta: np.ndarray, hx: float) -> float:
    """|eta|_{1,inf} = max |eta| + max |d_x eta|."""
    eta = np.asarray(eta, dtype=float)
    return float(np.abs(eta).max() + np.abs(slope_nodes(eta, hx)).max())


def forcing_norm_sq(forcing, t: float, v: VectorField, eta) -> float:
    if forcing is None:
        return 0.0
    g = v.grid
    e = as_plate(eta, g).values
    Xx, Yx = g.coords("face-x")
    Xy, Yy = g.coords("face-y")
    f = VectorField(np.asarray(forcing(t, Xx, Yx * e[:, None], 0), float),
                    np.asarray(forcing(t, Xy, Yy * to_centers(e)[:, None], 1), float), g)
    return fluid_norm_sq(f, e)


def _dual_time_derivative(states, times, k) -> float:
    n = len(states)
    if n < 2:
        return 0.0
    a, b = (k, k + 1) if k + 1 < n else (k - 1, k)
    dt = times[b] - times[a]
    ref = states[k]
    ops = mapped_operators(as_plate(ref.eta, ref.v.grid), ref.eta_t)
    dv = (_interior(states[b].v) - _interior(states[a].v)) / dt
    return dual_norm_sq(ops.mass * dv, ops)


def gronwall_weight(run2, run1, C: float = 1.0, forcing: Callable | None = None,
                    mask_geometry: bool = False, include_dual: bool = True) -> GronwallWeight:
    """h1 = C (N(v2)^2 + |d_t v2|_dual^2 + |f2|^2), h2 = (N(v2) + 1)^2 (|eta1|_{1,inf} + |eta2|_{1,inf} + 1)^2."""
    s2, s1 = _states(run2), _states(run1)
    if len(s1) != len(s2):
        raise ShapeError("runs have different lengths")
    times = _times(run2, s2)
    g = s2[0].v.grid
    n = len(s2)
    N = np.array([w1s_norm(s.v, s.eta) for s in s2])
    dual = np.array([_dual_time_derivative(s2, times, k) for k in range(n)]) if include_dual else np.zeros(n)
    fsq = np.array([forcing_norm_sq(forcing, float(t), s.v, s.eta) for t, s in zip(times, s2)])
    geo = np.array([lipschitz_norm(a.eta, g.hx) + lipschitz_norm(b.eta, g.hx) + 1.0 for a, b in zip(s1, s2)])
    h1 = C * (N ** 2 + dual + fsq)
    h2 = np.zeros(n) if mask_geometry else (N + 1.0) ** 2 * geo ** 2
    parts = {"strong_norm": N, "dual_surrogate": dual, "forcing_sq": fsq, "geometry": geo}
    return GronwallWeight(np.asarray(times, float), h1 + h2, h1, h2, float(C), parts)


def gronwall_bound(D0: float, weight: GronwallWeight, t: float | None = None, scale: float = 1.0):
    """D0 exp(scale * int_0^t h); the whole series if ``t`` is None."""
    H = weight.integral()
    if t is None:
        return D0 * np.exp(scale * H)
    return float(D0 * np.exp(scale * np.interp(t, weight.times, H)))


def fit_cstar(series: DistanceSeries, weight: GronwallWeight) -> float:
    """Smallest C with I(t) <= D0 exp(C int_0^t h) at every sample with t > 0.

    May be negative when the distance decays.  Infinite if D0 = 0 < max I.
    """
    H = weight.integral()
    I, D0 = series.I, series.D0
    mask = H > 0
    if not np.any(mask):
        return 0.0
    if D0 <= 0:
        return math.inf if np.any(I[mask] > 0) else 0.0
    with np.errstate(divide="ignore"):
        ratio = np.log(np.maximum(I[mask], 1e-300) / D0) / H[mask]
    return float(ratio.max())


def gronwall_holds(series: DistanceSeries, weight: GronwallWeight, cstar: float, rtol: float = 1e-12) -> bool:
    bound = gronwall_bound(series.D0, weight, scale=cstar)
    return bool(np.all(series.I <= bound * (1.0 + rtol) + 1e-300))


def lps_index(q: float, r: float) -> float:
    """Ladyzhenskaya-Prodi-Serrin index 3/q + 2/r (3/inf = 0)."""
    for name, val in (("q", q), ("r", r)):
        if not (val >= 1):
            raise DomainError(f"exponent {name} = {val} must lie in [1, inf]")
    return (0.0 if math.isinf(q) else 3.0 / q) + (0.0 if math.isinf(r) else 2.0 / r)


def space_time_norm(run, q: float, r: float) -> float:
    """|v|_{L^r(0,T; L^q(Omega_eta))} with face samples and trapezoid quadrature in time."""
    states = _states(run)
    times = _times(run, states)
    vals = []
    for s in states:
        g = s.v.grid
        e = np.asarray(s.eta, dtype=float)
        ax = np.abs(s.v.u_x)
        ay = np.abs(s.v.u_y)
        if math.isinf(q):
            vals.append(max(ax.max(), ay.max()))
        else:
            vol = g.hx * g.hy
            sx = np.sum(e[:, None] * ax ** q) * vol
            sy = np.sum(to_centers(e)[:, None] * ay ** q) * vol
            vals.append((0.5 * (sx + sy)) ** (1.0 / q))
    vals = np.asarray(vals)
    if math.isinf(r):
        return float(vals.max())
    if vals.size < 2:
        return float(vals[0])
    return float(np.trapezoid(vals ** r, times) ** (1.0 / r))


# --- verification driver --------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.detail})"


@dataclass
class StabilityReport:
    checks: list = field(default_factory=list)
    scaling: list = field(default_factory=list)   # rows: eps, D0, max_I, cstar, int_h
    exponent: float = float("nan")
    final_exponent: float = float("nan")
    cstar: float = float("nan")
    lps: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    weight: GronwallWeight | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
                "scaling": self.scaling, "exponent": self.exponent,
                "final_exponent": self.final_exponent, "cstar": self.cstar,
                "lps": self.lps, "dual_norm": "finite-difference surrogate"}

    def text(self) -> str:
        out = [c.line() for c in self.checks]
        if self.scaling:
            out.append("eps            D0                     max_I                  C*")
            for row in self.scaling:
                out.append(f"{row['eps']:<14.6g} {row['D0']:<22.15e} {row['max_I']:<22.15e} {row['cstar']:.6g}")
            out.append(f"fitted exponent: {self.exponent:.4f} (max_t I), {self.final_exponent:.4f} (I at final time)")
        for k, v in self.lps.items():
            out.append(f"lps {k}: {v}")
        return "\n".join(out)


def scaling_exponent(eps: Sequence[float], values: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(eps, float)), np.log(np.asarray(values, float)), 1)
    return float(slope)


def cstar_spread(values: Sequence[float]) -> float:
    """max/min of the per-run constants; infinite if they change sign or vanish."""
    v = np.asarray(values, dtype=float)
    if np.any(v == 0) or (np.any(v > 0) and np.any(v < 0)):
        return math.inf
    a = np.abs(v)
    return float(a.max() / a.min())


def verify_stability(cfg, eps_family=(1e-2, 5e-3, 2.5e-3), tiny_eps: float = 1e-6,
                     simulate_fn=None) -> StabilityReport:
    """Uniqueness, eps-scaling, Gronwall consistency and LPS diagnostics for one configuration.

    The unperturbed run is the strong solution (run 2); each perturbed run is run 1.
    """
    from .simulation import simulate
    sim = simulate_fn or (lambda c, e: simulate(c, eps=e, stride=1).trajectory)
    rep = StabilityReport()
    base = sim(cfg, 0.0)
    twin = sim(cfg, 0.0)
    ds0 = distance_series(twin, base)
    zero = bool(np.all(ds0.I == 0.0))
    rep.checks.append(Check("uniqueness", zero, f"max I = {ds0.max_I:.3e} for identical data"))

    weight = gronwall_weight(base, base, forcing=None)
    rep.weight = weight
    if tiny_eps:
        ds = distance_series(sim(cfg, tiny_eps), base)
        ok = 0.0 < ds.max_I < 1e-8
        rep.checks.append(Check("tiny-perturbation", ok, f"eps = {tiny_eps:g}, max I = {ds.max_I:.3e}"))

    cstars, weights = [], {}
    for e in eps_family:
        run = sim(cfg, e)
        ds = distance_series(run, base)
        w = gronwall_weight(base, run)
        cs = fit_cstar(ds, w)
        cstars.append(cs)
        rep.series[e] = ds
        weights[e] = w
        rep.scaling.append({"eps": e, "D0": ds.D0, "max_I": ds.max_I, "final_I": float(ds.I[-1]),
                            "cstar": cs, "int_h": float(w.integral()[-1])})
    if len(eps_family) >= 2:
        rep.exponent = scaling_exponent(eps_family, [r["max_I"] for r in rep.scaling])
        rep.checks.append(Check("scaling-exponent", 1.8 <= rep.exponent <= 2.2, f"{rep.exponent:.4f}"))
        rep.final_exponent = scaling_exponent(eps_family, [r["final_I"] for r in rep.scaling])
        ratios = [a["max_I"] / b["max_I"] for a, b in zip(rep.scaling, rep.scaling[1:])]
        rep.checks.append(Check("pair-ratios", all(3.5 <= q <= 4.5 for q in ratios),
                                ", ".join(f"{q:.4f}" for q in ratios)))
        rep.cstar = max(cstars)
        holds = all(gronwall_holds(rep.series[e], weights[e], rep.cstar) for e in eps_family)
        rep.checks.append(Check("gronwall", holds, f"C* = {rep.cstar:.6g}"))
        spread = cstar_spread(cstars)
        rep.checks.append(Check("cstar-spread", spread < 2.0, f"max/min = {spread:.4f}"))
    rep.lps = {"index(inf,2)": lps_index(math.inf, 2),
               "|v2|_L2(Linf)": space_time_norm(base, math.inf, 2),
               "|v2|_L4(L6)": space_time_norm(base, 6, 4)}
    return rep
