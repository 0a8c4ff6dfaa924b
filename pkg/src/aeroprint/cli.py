"""Command line front end.

Subcommands cover the pipeline stages: ``chunk`` decomposes a mesh,
``slice`` plans one toolpath, ``plan`` previews decomposition plus paths,
``simulate`` flies the whole mission, and ``report`` summarises a finished
run directory.  All units are SI (metres, radians, seconds); every output
file is written with deterministic formatting so equal runs are equal bytes.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, fields, is_dataclass
from pathlib import Path

import numpy as np

from . import geometry, mesh_io
from .bsp_tree import export_chunk_objs, in_order_priority, rebuild_sorted, tree_to_dict
from .chunk_search import SearchConfig, SearchExhaustedError, beam_search, candidate_planes
from .flight_control import ModelParams, NmpcConfig, NonFiniteError
from .geometry import DegenerateCutError, NonWatertightError
from .mission_emulator import BatteryPolicy, MarkerParams, run_mission
from .task_allocation import NoCapableAgentError
from .toolpath import (
    EmptySliceError,
    ParseError,
    SlicerParams,
    UnsupportedCommandError,
    path_to_dict,
    serialize_gcode,
    slice_chunk,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

_RUNTIME_ERRORS = (
    SearchExhaustedError,
    NoCapableAgentError,
    DegenerateCutError,
    EmptySliceError,
    NonFiniteError,
)


class ConfigError(ValueError):
    """A config file field is unknown or has the wrong shape."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, mirroring the JSON config layout (SI units)."""

    search: SearchConfig = SearchConfig()
    slicer: SlicerParams = SlicerParams()
    control: NmpcConfig = NmpcConfig()
    model: ModelParams = ModelParams()
    battery: BatteryPolicy = BatteryPolicy()
    marker: MarkerParams = MarkerParams()
    rod_length: float = 0.5
    noise_pos: float = 0.0
    noise_vel: float = 0.0
    seed: int = 0


# ---------------------------------------------------------------------------
# config handling


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        return tuple(_coerce(v, default[0] if default else 0.0, f"{path}[{i}]")
                     for i, v in enumerate(value))
    return value


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown field")
        kwargs[key] = _coerce(value, getattr(defaults, key), f"{path}.{key}")
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root: expected an object")
    defaults = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
        current = getattr(defaults, key)
        if is_dataclass(current):
            kwargs[key] = _build_section(type(current), value, key)
        else:
            kwargs[key] = _coerce(value, current, key)
    return RunConfig(**kwargs)


def config_to_dict(config: RunConfig) -> dict:
    out = {}
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        out[f.name] = asdict(value) if is_dataclass(value) else value
    return out


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# io helpers


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, payload):
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    )


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % value


def write_trace_csv(path, log):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(log.COLUMNS)
        for row in log.iter_csv_rows():
            writer.writerow([_fmt(v) for v in row])


def _load_mesh(args) -> geometry.TriangleMesh:
    mesh = mesh_io.load_stl(args.mesh)
    if args.scale != 1.0:
        mesh = geometry.scale(mesh, args.scale)
    geometry.validate_watertight(mesh)
    return mesh


def _prepare(args):
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        parts = {f.name: getattr(config, f.name) for f in fields(RunConfig)}
        parts["seed"] = args.seed
        config = RunConfig(**parts)
    return config


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_chunk(args) -> int:
    config = _prepare(args)
    mesh = _load_mesh(args)
    if args.dry_run:
        cands = len(candidate_planes(mesh, config.search))
        print(f"would search {cands} candidate planes, capacities {config.search.capacities}")
        return EXIT_OK
    result = beam_search(mesh, config.search)
    if not result.terminated:
        raise SearchExhaustedError("no feasible decomposition within the search budget")
    tree = rebuild_sorted(result.tree)
    out = _outdir(args)
    write_json(out / "tree.json", tree_to_dict(tree))
    write_json(out / "order.json", {
        "priority_order": in_order_priority(tree),
        "volumes": {str(l.id): l.volume for l in tree.leaves()},
    })
    write_json(out / "beam_report.json", {
        "terminated": result.terminated,
        "heuristic": result.heuristic,
        "iterations": result.iterations,
        "n_expanded": result.n_expanded,
        "n_candidates": len(result.candidates),
        "used_candidates": list(result.used_candidates),
        "iterations_report": result.report,
    })
    export_chunk_objs(tree, out / "chunks")
    print(f"{tree.n_leaves} chunks, heuristic {result.heuristic:.6g} -> {out}")
    return EXIT_OK


def cmd_slice(args) -> int:
    config = _prepare(args)
    mesh = _load_mesh(args)
    path = slice_chunk(mesh, config.slicer)
    if args.dry_run:
        print(f"would write {len(path)} waypoints ({path.extrude_length:.3g} m extruded)")
        return EXIT_OK
    out = _outdir(args)
    write_json(out / "plan.json", path_to_dict(path))
    (out / "plan.gcode").write_text(serialize_gcode(path))
    print(f"{len(path)} waypoints, {path.extrude_length:.4g} m extruded -> {out}")
    return EXIT_OK


def cmd_plan(args) -> int:
    config = _prepare(args)
    mesh = _load_mesh(args)
    result = beam_search(mesh, config.search)
    if not result.terminated:
        raise SearchExhaustedError("no feasible decomposition within the search budget")
    tree = rebuild_sorted(result.tree)
    chunk_plans = {}
    for leaf in tree.leaves():
        path = slice_chunk(leaf.mesh, config.slicer)
        chunk_plans[str(leaf.id)] = {
            "volume": leaf.volume,
            "waypoints": len(path),
            "extrude_length": path.extrude_length,
            "travel_length": path.travel_length,
        }
    if args.dry_run:
        print(f"would plan {tree.n_leaves} chunks")
        return EXIT_OK
    out = _outdir(args)
    write_json(out / "tree.json", tree_to_dict(tree))
    write_json(out / "order.json", {
        "priority_order": in_order_priority(tree),
        "volumes": {str(l.id): l.volume for l in tree.leaves()},
    })
    write_json(out / "plan.json", chunk_plans)
    print(f"{tree.n_leaves} chunks planned -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _prepare(args)
    mesh = _load_mesh(args)
    if args.dry_run:
        print(
            f"would simulate: capacities {config.search.capacities}, "
            f"dt {config.control.dt}, seed {config.seed}"
        )
        return EXIT_OK
    res = run_mission(
        mesh,
        search=config.search,
        slicer=config.slicer,
        control=config.control,
        model=config.model,
        battery=config.battery,
        marker=config.marker,
        rod_length=config.rod_length,
        rng=np.random.default_rng(config.seed),
        noise_pos=config.noise_pos,
        noise_vel=config.noise_vel,
    )
    out = _outdir(args)
    write_json(out / "tree.json", tree_to_dict(res.tree))
    write_json(out / "order.json", {
        "priority_order": res.stats["priority_order"],
        "volumes": {str(l.id): l.volume for l in res.tree.leaves()},
    })
    write_json(out / "beam_report.json", {
        "terminated": res.search.terminated,
        "heuristic": res.search.heuristic,
        "iterations": res.search.iterations,
        "n_expanded": res.search.n_expanded,
        "n_candidates": len(res.search.candidates),
        "used_candidates": list(res.search.used_candidates),
        "iterations_report": res.search.report,
    })
    write_trace_csv(out / "trace.csv", res.log)
    write_json(out / "markers.json", {
        "radius": config.marker.radius,
        "markers": [[m.x, m.y, m.z, m.t, m.chunk] for m in res.log.markers],
    })
    write_json(out / "stats.json", res.stats)
    write_json(out / "events.json", res.log.events)
    write_json(out / "effective_config.json", {
        **config_to_dict(config),
        "mesh": str(args.mesh),
        "scale": args.scale,
    })
    export_chunk_objs(res.tree, out / "chunks")
    tr = res.stats["tracking"]
    print(
        f"{res.stats['n_chunks']} chunks, {res.stats['n_markers']} markers, "
        f"{res.stats['mission_time']:.1f}s mission, "
        f"steady max err {max(tr['steady_max_error']):.4f} m -> {out}"
    )
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out)
    stats_file = out / "stats.json"
    trace_file = out / "trace.csv"
    if not trace_file.exists():
        print(f"error: no trace.csv in {out}", file=sys.stderr)
        return EXIT_USAGE
    with open(trace_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    data = np.asarray(rows)
    idx = {name: i for i, name in enumerate(header)}
    err = np.abs(
        data[:, [idx["x_px"], idx["x_py"], idx["x_pz"]]]
        - data[:, [idx["r_px"], idx["r_py"], idx["r_pz"]]]
    )
    print(f"samples:        {len(data)}")
    print(f"duration:       {data[-1, idx['t']]:.2f} s")
    print(f"extruding:      {int(data[:, idx['extruding']].sum())} steps")
    for axis, name in enumerate("xyz"):
        print(f"max |err_{name}|:     {err[:, axis].max():.4f} m  "
              f"(mean {err[:, axis].mean():.4f})")
    if stats_file.exists():
        stats = json.loads(stats_file.read_text())
        tr = stats.get("tracking") or {}
        if "steady_max_error" in tr:
            sm = tr["steady_max_error"]
            print(f"steady max err: {max(sm):.4f} m per axis {['%.4f' % v for v in sm]}")
        print(f"chunks:         {stats.get('n_chunks')}  order {stats.get('completed')}")
        print(f"markers:        {stats.get('n_markers')}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeroprint",
        description="Chunk, slice and fly aerial 3D print missions (emulated).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mesh=True):
        if mesh:
            p.add_argument("--mesh", required=True, help="watertight STL file")
            p.add_argument("--scale", type=float, default=1.0,
                           help="uniform scale applied on load")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--dry-run", action="store_true",
                       help="validate inputs and print the plan, write nothing")

    common(sub.add_parser("chunk", help="decompose a mesh into printable chunks"))
    common(sub.add_parser("slice", help="plan a toolpath for one chunk mesh"))
    common(sub.add_parser("plan", help="decompose and slice without flying"))
    common(sub.add_parser("simulate", help="run the full emulated mission"))
    rep = sub.add_parser("report", help="summarise an output directory")
    rep.add_argument("--out", default="out", help="run directory to read")
    return parser


_COMMANDS = {
    "chunk": cmd_chunk,
    "slice": cmd_slice,
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _RUNTIME_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, NonWatertightError, ParseError, UnsupportedCommandError,
            FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
