"""Simulation configuration: TOML loading, dotted overrides, validation and hashing.

A configuration is a tree of small frozen dataclasses.  ``to_dict`` gives
the canonical plain-data form; ``config_hash`` is the SHA-256 of its sorted
JSON dump, so key order in the source file never changes the hash.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import tomli

from .errors import ConfigError, PlateflowError
from .grid import GridSpec
from .plate import PlateParams
from .profiles import PLATE_PROFILES, VELOCITY_PROFILES, plate_profile

FLUID_FORCINGS = ("none", "shear", "swirl")
PERTURBATION_TARGETS = ("velocity", "plate-position", "plate-velocity")
PERTURBATION_SHAPES = tuple(sorted(PLATE_PROFILES)) + ("random",)


@dataclass(frozen=True)
class FluidSection:
    rho_f: float = 1.0
    mu_f: float = 1.0
    stress_form: str = "gradient"
    solver_tol: float = 1e-10
    max_iter: int = 500


@dataclass(frozen=True)
class ForcingSection:
    """Outer loads: g on the plate and f in the fluid.

    g(t, x) = plate_amplitude * shape(x) * cos(plate_frequency * t);
    f is a named solenoidal body force scaled by fluid_amplitude.
    """
    plate_profile: str = "flat"
    plate_amplitude: float = 0.0
    plate_frequency: float = 0.0
    fluid_profile: str = "none"
    fluid_amplitude: float = 0.0
    fluid_frequency: float = 0.0


@dataclass(frozen=True)
class InitialSection:
    eta0: str = "flat"
    eta0_amplitude: float = 0.0
    eta_star: str = "flat"
    eta_star_amplitude: float = 0.0
    v0: str = "zero"
    v0_amplitude: float = 0.0


@dataclass(frozen=True)
class PerturbationSection:
    eps: float = 0.0
    target: str = "plate-velocity"
    shape: str = "sine_cutoff"


@dataclass(frozen=True)
class MollifierSection:
    delta_steps: int = 4


@dataclass(frozen=True)
class OutputSection:
    dir: str = "runs/default"
    stride: int = 10


@dataclass(frozen=True)
class CouplingSection:
    tol: float = 1e-8
    max_subiterations: int = 50
    relax0: float = 0.5
    load_form: str = "consistent"
    smoothing: bool = False
    floor: float = 0.0


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridSpec = field(default_factory=lambda: GridSpec(nx=32, ny=16, dt=2e-3, t_end=0.2))
    fluid: FluidSection = field(default_factory=FluidSection)
    plate: PlateParams = field(default_factory=PlateParams)
    forcing: ForcingSection = field(default_factory=ForcingSection)
    initial: InitialSection = field(default_factory=InitialSection)
    perturbation: PerturbationSection = field(default_factory=PerturbationSection)
    mollifier: MollifierSection = field(default_factory=MollifierSection)
    output: OutputSection = field(default_factory=OutputSection)
    coupling: CouplingSection = field(default_factory=CouplingSection)
    seed: int = 0

    def to_dict(self) -> dict:
        return _plain(self)

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, overrides: Iterable[str]) -> "SimulationConfig":
        data = self.to_dict()
        for item in overrides:
            apply_override(data, item)
        return from_dict(data)


_SECTIONS = {f.name: f for f in dataclasses.fields(SimulationConfig)}


def _plain(obj) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _section_type(name: str):
    return {"grid": GridSpec, "fluid": FluidSection, "plate": PlateParams, "forcing": ForcingSection,
            "initial": InitialSection, "perturbation": PerturbationSection,
            "mollifier": MollifierSection, "output": OutputSection, "coupling": CouplingSection}[name]


def _coerce(value, target_type: type, where: str):
    if target_type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if target_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    return value


_TYPES = {"float": float, "int": int, "bool": bool, "str": str}


def _build_section(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {sorted(unknown)}")
    kw = {k: _coerce(v, _TYPES[str(known[k].type)], f"{name}.{k}") for k, v in data.items()}
    try:
        return cls(**kw)
    except PlateflowError as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def from_dict(data: dict) -> SimulationConfig:
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown configuration section(s): {sorted(unknown)}")
    kw = {}
    for name, value in data.items():
        if name == "seed":
            kw[name] = _coerce(value, int, "seed")
        else:
            kw[name] = _build_section(_section_type(name), value, name)
    cfg = SimulationConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path) -> SimulationConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def parse_value(text: str):
    """Interpret an override value as a TOML scalar, falling back to a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(data: dict, item: str) -> None:
    """Apply ``section.key=value`` (or ``seed=value``) to plain config data in place."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = (s.strip() for s in item.split("=", 1))
    parts = key.split(".")
    if len(parts) == 1 and parts[0] == "seed":
        data["seed"] = parse_value(text)
        return
    if len(parts) != 2 or parts[0] not in _SECTIONS or parts[0] == "seed":
        raise ConfigError(f"unknown override key {key!r}")
    data.setdefault(parts[0], {})[parts[1]] = parse_value(text)


def _check_choice(value: str, choices, what: str):
    if value not in choices:
        raise ConfigError(f"unknown {what} {value!r}; choose from {sorted(choices)}")


def validate(cfg: SimulationConfig) -> None:
    """Reject configurations that would violate model invariants before any compute."""
    g = cfg.grid
    if cfg.fluid.rho_f <= 0 or cfg.fluid.mu_f <= 0:
        raise ConfigError("fluid density and viscosity must be positive")
    _check_choice(cfg.fluid.stress_form, ("gradient", "symmetric"), "stress form")
    for name in (cfg.initial.eta0, cfg.initial.eta_star, cfg.forcing.plate_profile):
        plate_profile(name)
    _check_choice(cfg.initial.v0, VELOCITY_PROFILES, "velocity profile")
    _check_choice(cfg.forcing.fluid_profile, FLUID_FORCINGS, "fluid forcing")
    _check_choice(cfg.perturbation.target, PERTURBATION_TARGETS, "perturbation target")
    _check_choice(cfg.perturbation.shape, PERTURBATION_SHAPES, "perturbation shape")
    _check_choice(cfg.coupling.load_form, ("consistent", "pointwise"), "load form")
    if cfg.perturbation.eps < 0:
        raise ConfigError("perturbation eps must be nonnegative")
    if cfg.output.stride < 1:
        raise ConfigError("output stride must be at least 1")
    if cfg.mollifier.delta_steps < 2:
        raise ConfigError("mollifier width must be at least two time steps")

    from .profiles import plate_shape
    eta0 = 1.0 + plate_shape(cfg.initial.eta0, g, cfg.initial.eta0_amplitude)
    if abs(eta0[0] - 1.0) > 1e-12 or abs(eta0[-1] - 1.0) > 1e-12:
        raise ConfigError(f"initial plate {cfg.initial.eta0!r} violates eta = 1 at the ends")
    if eta0.min() <= cfg.coupling.floor:
        raise ConfigError("initial plate touches the bottom")
    star = plate_shape(cfg.initial.eta_star, g, cfg.initial.eta_star_amplitude)
    if abs(star[0]) > 1e-12 or abs(star[-1]) > 1e-12:
        raise ConfigError(f"initial plate velocity {cfg.initial.eta_star!r} must vanish at the ends")
    if abs(star.sum()) * g.hx > 1e-10 * max(1.0, np.abs(star).max()):
        raise ConfigError("initial plate velocity must have zero mean (incompressible fluid)")
    p = cfg.perturbation
    if p.eps > 0 and p.target != "velocity" and p.shape != "random":
        prof = plate_profile(p.shape)
        if not prof.clamped:
            raise ConfigError(f"perturbation shape {p.shape!r} is not clamped")
        if p.target == "plate-velocity" and not prof.mean_zero:
            raise ConfigError("plate-velocity perturbations need a mean-zero shape")


def config_hash(cfg: SimulationConfig) -> str:
    text = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def dump_toml(cfg: SimulationConfig) -> str:
    """Serialise to TOML (the subset needed here: one level of tables and scalars)."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, int):
            return str(v)
        return json.dumps(v)

    data = cfg.to_dict()
    lines = [f"seed = {fmt(data.pop('seed'))}"]
    for name, table in data.items():
        lines.append("")
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {fmt(v)}" for k, v in table.items())
    return "\n".join(lines) + "\n"


def write_config(cfg: SimulationConfig, path) -> Path:
    path = Path(path)
    path.write_text(dump_toml(cfg))
    return path
