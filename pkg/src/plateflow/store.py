"""Run directories: trajectory binary + CSV index, energy CSV, manifests and reports."""
from __future__ import annotations

import csv
import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .grid import GridSpec, VectorField
from .mollify import Trajectory

FLOAT_FMT = "{:.17g}"
TRAJECTORY_FILE = "trajectory.bin"
INDEX_FILE = "trajectory_index.csv"
ENERGY_FILE = "energy.csv"
MANIFEST_FILE = "manifest.json"

_BLOCKS = ("u_x", "u_y", "p", "eta", "eta_t", "w")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT.format(float(x))


def _block_shapes(g: GridSpec) -> dict:
    return {"u_x": (g.nx + 1, g.ny), "u_y": (g.nx, g.ny + 1), "p": (g.nx, g.ny),
            "eta": (g.nx + 1,), "eta_t": (g.nx + 1,), "w": (g.nx + 1,)}


def record_size(g: GridSpec) -> int:
    return sum(int(np.prod(s)) for s in _block_shapes(g).values())


def write_trajectory(out_dir, traj: Trajectory) -> list[Path]:
    """Little-endian float64 records, one per snapshot, in the block order of ``_BLOCKS``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = traj.states[0].v.grid
    n = record_size(g)
    with open(out / TRAJECTORY_FILE, "wb") as fh:
        for s in traj.states:
            rec = np.concatenate([s.v.u_x.ravel(), s.v.u_y.ravel(), np.ravel(s.p),
                                  np.ravel(s.eta), np.ravel(s.eta_t), np.ravel(s.w)]).astype("<f8")
            fh.write(rec.tobytes())
    with open(out / INDEX_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# L", fmt(g.L), "nx", g.nx, "ny", g.ny, "dt", fmt(g.dt), "t_end", fmt(g.t_end),
                    "blocks", "|".join(_BLOCKS)])
        w.writerow(["index", "t", "offset_bytes", "length"])
        for k, t in enumerate(traj.times):
            w.writerow([k, fmt(t), k * n * 8, n])
    return [out / TRAJECTORY_FILE, out / INDEX_FILE]


def read_trajectory(run_dir) -> Trajectory:
    from .simulation import Snapshot
    run = Path(run_dir)
    with open(run / INDEX_FILE, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    meta = dict(zip(head[2::2], head[3::2]))
    g = GridSpec(float(head[1]), int(meta["nx"]), int(meta["ny"]), float(meta["dt"]), float(meta["t_end"]))
    data = np.fromfile(run / TRAJECTORY_FILE, dtype="<f8")
    n = record_size(g)
    if data.size % n:
        raise ShapeError("trajectory file is truncated")
    shapes = _block_shapes(g)
    times, states = [], []
    for row in rows[2:]:
        k, t = int(row[0]), float(row[1])
        rec = data[k * n:(k + 1) * n]
        parts, pos = {}, 0
        for name in _BLOCKS:
            size = int(np.prod(shapes[name]))
            parts[name] = rec[pos:pos + size].reshape(shapes[name]).copy()
            pos += size
        v = VectorField(parts["u_x"], parts["u_y"], g)
        states.append(Snapshot(t, v, parts["p"], parts["eta"], parts["eta_t"], parts["w"]))
        times.append(t)
    return Trajectory(np.array(times), tuple(states))


def write_rows(path, rows: list[dict], columns) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])
    return path


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    started: str
    finished: str = ""
    checks: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    threads: int = 1
    python: str = field(default_factory=platform.python_version)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.checks.values())

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_FILE
        d = asdict(self)
        d["passed"] = self.passed
        path.write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text())
        d.pop("passed", None)
        return cls(**d)
