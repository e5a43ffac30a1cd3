"""Command-line front end and the bundle writers/readers.

A run produces a bundle directory:

    metadata.json            experiment, grid, stepping, file list, analysis
    diagnostics.csv          step,time,energy,momentum,constraint_residual[,...]
    snapshots/snap_NNNNNN.csv (or .bin with --binary)

All floats are written with 17 significant digits so files parse back to the
exact binary values; rerunning an identical config reproduces the diagnostics
bytes exactly.  The environment variable MSCONSTRAIN_OUT overrides the root
for relative output paths.
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import ProjectiveConstraint, QuadricConstraint
from .core import Grid
from .diagnostics import (
    BlowupNotDetectedError,
    DiagnosticsRecord,
    blowup_detect,
)
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    PreparedRun,
    convergence_study,
    default_config,
    prepare,
)
from .wavemap import MemorySinks, RunConfig, run

SNAPSHOT_MAGIC = "# msconstrain snapshot v1"
BINARY_MAGIC = b"MSCN"
BUNDLE_FORMAT = "msconstrain-bundle v1"

_CONFIG_KEYS = {
    "experiment", "points", "final_time", "courant", "dt",
    "params", "snapshot_every", "diagnostics_every",
}


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict) or "experiment" not in data:
        raise ConfigError("config must be a JSON object with an 'experiment' key")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = default_config(data["experiment"])
    kwargs = {}
    for key in ("final_time", "courant", "dt"):
        if key in data:
            kwargs[key] = float(data[key]) if data[key] is not None else None
    for key in ("snapshot_every", "diagnostics_every"):
        if key in data:
            kwargs[key] = int(data[key])
    if "points" in data:
        pts = data["points"]
        kwargs["points"] = tuple(int(p) for p in pts) if isinstance(pts, list) else int(pts)
    params = dict(base.params)
    params.update(data.get("params", {}))
    from dataclasses import replace

    return replace(base, params=params, **kwargs)


def _flatten_values(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Node-major real component table of a field (Hermitian matrices become
    diagonal entries followed by re/im of the upper triangle)."""
    nodes = int(np.prod(grid.shape))
    vals = u.reshape((nodes,) + u.shape[grid.dim:])
    if vals.ndim == 2 and not np.iscomplexobj(vals):
        return np.asarray(vals, dtype=float)
    k = vals.shape[-1]
    cols = [vals[:, i, i].real for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            cols.append(vals[:, i, j].real)
            cols.append(vals[:, i, j].imag)
    return np.stack(cols, axis=-1)


def write_snapshot(path: str | Path, grid: Grid, u: np.ndarray, time: float) -> None:
    table = _flatten_values(u, grid)
    coords = [c.reshape(-1) for c in np.meshgrid(
        *[grid.axis_coords(a) for a in range(grid.dim)], indexing="ij")]
    coord_names = ["x", "y"][: grid.dim]
    comp_names = [f"u{i}" for i in range(table.shape[1])]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SNAPSHOT_MAGIC}\n")
        fh.write(f"# time {_fmt(time)}\n")
        fh.write(",".join(["index"] + coord_names + comp_names) + "\n")
        for idx in range(table.shape[0]):
            row = [str(idx)] + [_fmt(c[idx]) for c in coords] + \
                  [_fmt(v) for v in table[idx]]
            fh.write(",".join(row) + "\n")


def read_snapshot(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a snapshot file (header {magic!r})")
        time_line = fh.readline().split()
        time = float(time_line[2])
        header = fh.readline().rstrip("\n").split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    ncoord = sum(1 for name in header if name in ("x", "y"))
    return {
        "time": time,
        "columns": header,
        "coords": data[:, 1:1 + ncoord],
        "values": data[:, 1 + ncoord:],
    }


def write_snapshot_binary(path: str | Path, grid: Grid, u: np.ndarray, time: float) -> None:
    """Flat little-endian float64 frame: MSCN, version, dim, shape, ncomp, time, payload."""
    table = _flatten_values(u, grid)
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<II", 1, grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.shape))
        fh.write(struct.pack("<I", table.shape[1]))
        fh.write(struct.pack("<d", time))
        fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())


def read_snapshot_binary(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        if fh.read(4) != BINARY_MAGIC:
            raise ValueError(f"{path}: not a binary snapshot")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != 1:
            raise ValueError(f"unsupported binary snapshot version {version}")
        shape = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        (ncomp,) = struct.unpack("<I", fh.read(4))
        (time,) = struct.unpack("<d", fh.read(8))
        payload = np.frombuffer(fh.read(), dtype="<f8")
    nodes = int(np.prod(shape))
    return {
        "time": time,
        "shape": shape,
        "values": payload.reshape(nodes, ncomp),
    }


def diagnostics_columns(records) -> list[str]:
    cols = ["step", "time", "energy", "momentum", "constraint_residual"]
    if any(r.trace_residual is not None for r in records):
        cols.append("trace_residual")
    if any(r.center_z is not None for r in records):
        cols.append("center_z")
    return cols


def write_diagnostics(path: str | Path, records) -> None:
    cols = diagnostics_columns(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in records:
            row = [str(r.step)] + [
                _fmt(getattr(r, c)) for c in cols[1:]
            ]
            fh.write(",".join(row) + "\n")


def read_diagnostics(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty diagnostics table")
    data = np.array(rows, dtype=float)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_errors_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a convergence-study errors.csv back (columns n,dx,dt,error)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty errors table")
    data = np.array(rows, dtype=float)
    return {name: data[:, i] for i, name in enumerate(header)}


def records_from_table(table: dict[str, np.ndarray]) -> list[DiagnosticsRecord]:
    n = len(table["step"])
    out = []
    for i in range(n):
        out.append(DiagnosticsRecord(
            step=int(table["step"][i]),
            time=float(table["time"][i]),
            energy=float(table["energy"][i]),
            momentum=float(table["momentum"][i]),
            constraint_residual=float(table["constraint_residual"][i]),
            trace_residual=float(table["trace_residual"][i]) if "trace_residual" in table else None,
            center_z=float(table["center_z"][i]) if "center_z" in table else None,
        ))
    return out


def resolve_out_dir(out: str | Path) -> Path:
    out = Path(out)
    root = os.environ.get("MSCONSTRAIN_OUT")
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _grid_meta(grid: Grid) -> dict:
    return {
        "shape": list(grid.shape),
        "lengths": list(grid.lengths),
        "boundaries": list(grid.boundaries),
        "origins": list(grid.origins),
        "spacings": list(grid.spacings),
    }


def _constraint_meta(constraint) -> dict:
    if isinstance(constraint, QuadricConstraint):
        return {"kind": "quadric", "signature": list(constraint.form.signature)}
    if isinstance(constraint, ProjectiveConstraint):
        return {"kind": "projective", "n": constraint.n}
    return {"kind": "unknown"}


def _config_meta(config: RunConfig) -> dict:
    return {
        "experiment": config.experiment,
        "points": list(config.points) if isinstance(config.points, tuple) else config.points,
        "final_time": config.final_time,
        "courant": config.courant,
        "dt": config.dt,
        "params": config.params,
        "snapshot_every": config.snapshot_every,
        "diagnostics_every": config.diagnostics_every,
    }


def _write_metadata(path: Path, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metadata(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class BundleSinks(MemorySinks):
    """Streams snapshots to files while recording diagnostics in memory."""

    def __init__(self, out_dir: Path, grid: Grid, binary: bool = False):
        super().__init__()
        self.out_dir = out_dir
        self.grid = grid
        self.binary = binary
        self.snapshot_files: list[str] = []
        (out_dir / "snapshots").mkdir(parents=True, exist_ok=True)

    def on_snapshot(self, step, time, u):
        ext = "bin" if self.binary else "csv"
        name = f"snapshots/snap_{step:06d}.{ext}"
        path = self.out_dir / name
        if self.binary:
            write_snapshot_binary(path, self.grid, u, time)
        else:
            write_snapshot(path, self.grid, u, time)
        if name not in self.snapshot_files:
            self.snapshot_files.append(name)


def execute_run(config: RunConfig, out_dir: Path, binary: bool = False) -> int:
    prep: PreparedRun = prepare(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    sinks = BundleSinks(out_dir, prep.grid, binary=binary)
    result = run(config, sinks)

    write_diagnostics(out_dir / "diagnostics.csv", sinks.records)
    analysis: dict = {}
    if sinks.records and sinks.records[0].center_z is not None and len(sinks.records) >= 3:
        try:
            t_energy, t_flip = blowup_detect(sinks.records)
            analysis["t_energy_max"] = t_energy
            analysis["t_center_flip"] = t_flip
        except BlowupNotDetectedError as exc:
            analysis["blowup"] = str(exc)
    meta = {
        "format": BUNDLE_FORMAT,
        "tool_version": __version__,
        "experiment": config.experiment,
        "grid": _grid_meta(prep.grid),
        "dt": prep.state.dt,
        "courant": prep.state.dt / prep.grid.min_spacing,
        "constraint": _constraint_meta(prep.constraint),
        "potential": prep.potential.name,
        "config": _config_meta(config),
        "status": result.status,
        "steps_completed": result.steps_completed,
        "events": [
            {"kind": k, "message": m, "time": t} for k, m, t in sinks.events
        ],
        "analysis": analysis,
        "files": {
            "diagnostics": "diagnostics.csv",
            "snapshots": sinks.snapshot_files,
        },
    }
    _write_metadata(out_dir / "metadata.json", meta)
    if result.status != "ok":
        print(f"run ended early: {result.status}", file=sys.stderr)
        return 2
    print(f"wrote {out_dir} ({result.steps_completed} steps)")
    return 0


def execute_convergence(config: RunConfig, out_dir: Path | None) -> int:
    ns = [int(n) for n in config.params.get("n_values", [16, 32, 64, 128])]
    study = convergence_study(ns, config.courant, config.final_time)
    print(f"convergence order slope: {study.slope:.3f}")
    for n, err in zip(study.ns, study.errors):
        print(f"  N={n:4d}  error={err:.6e}")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "errors.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n,dx,dt,error\n")
            for n, err in zip(study.ns, study.errors):
                grid = Grid.torus(n)
                dx = grid.min_spacing
                fh.write(f"{n},{_fmt(dx)},{_fmt(study.courant * dx)},{_fmt(err)}\n")
        meta = {
            "format": BUNDLE_FORMAT,
            "tool_version": __version__,
            "experiment": "convergence2d",
            "kind": "convergence-study",
            "courant": study.courant,
            "final_time": study.final_time,
            "n_values": study.ns,
            "analysis": {"slope": study.slope},
            "files": {"errors": "errors.csv"},
        }
        _write_metadata(out_dir / "metadata.json", meta)
        print(f"wrote {out_dir}")
    return 0


def list_experiments(stream=None) -> None:
    stream = stream or sys.stdout
    for name, exp in EXPERIMENTS.items():
        print(f"{name}: {exp.description}", file=stream)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msconstrain",
        description="constrained multi-symplectic wave map runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--binary", action="store_true",
                       help="write snapshots as flat binary frames")

    p_conv = sub.add_parser("convergence", help="run the order study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--out", default=None)

    sub.add_parser("list", help="print the experiment registry")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            list_experiments()
            return 0
        config = load_config(args.config)
        if args.command == "run":
            return execute_run(config, resolve_out_dir(args.out), binary=args.binary)
        out = resolve_out_dir(args.out) if args.out else None
        return execute_convergence(config, out)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
