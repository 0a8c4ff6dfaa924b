"""End-to-end print mission emulation.

Decompose the target mesh, queue the chunks, and fly each one with a
simulated quadrotor: the assigned vehicle rides the carrot reference along
the sliced toolpath and drops a material marker below the nozzle every
control step while extruding.  Chunks are flown strictly one at a time, so
the log is a single timeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bsp_tree import BspTree, rebuild_sorted
from .chunk_search import SearchConfig, SearchExhaustedError, SearchResult, beam_search
from .flight_control import (
    ModelParams,
    NmpcConfig,
    NmpcController,
    PathCompleteError,
    ReferencePath,
    step_euler,
)
from .task_allocation import (
    PrintSchedule,
    UavAgent,
    assign_next,
    build_schedule,
    complete,
)
from .toolpath import PrintPath, SlicerParams, Waypoint, extruder_to_uav, slice_chunk

EXTRUDER_ROD = 0.5  # vehicle body to nozzle tip, metres


class EmptyLogError(ValueError):
    """Statistics requested on a log with no samples."""


@dataclass(frozen=True)
class BatteryPolicy:
    drain_per_meter: float = 0.001
    threshold: float = 0.15


@dataclass(frozen=True)
class MarkerParams:
    radius: float = 0.003
    drop_offset: float = 0.1  # nozzle tip to marker centre


@dataclass(frozen=True)
class DepositedMarker:
    x: float
    y: float
    z: float
    t: float
    chunk: int


class EmulationLog:
    """Column-array record of every control step plus markers and events."""

    COLUMNS = (
        ["t", "agent", "chunk", "segment"]
        + [f"x_{n}" for n in ("px", "py", "pz", "vx", "vy", "vz", "phi", "theta")]
        + [f"r_{n}" for n in ("px", "py", "pz", "vx", "vy", "vz", "phi", "theta")]
        + ["u_thrust", "u_phi", "u_theta", "cost", "ex_px", "ex_py", "ex_pz", "extruding"]
    )

    def __init__(self):
        self._rows: list[tuple] = []
        self.markers: list[DepositedMarker] = []
        self.events: list[dict] = []
        self._arrays = None

    def append(self, t, agent, chunk, segment, state, ref, control, cost, extruder, extruding):
        self._rows.append((t, agent, chunk, segment,
                           tuple(state), tuple(ref), tuple(control),
                           cost, tuple(extruder), extruding))
        self._arrays = None

    def __len__(self):
        return len(self._rows)

    def _build(self):
        if self._arrays is None:
            if not self._rows:
                raise EmptyLogError("no samples logged")
            self._arrays = {
                "t": np.array([r[0] for r in self._rows]),
                "agent": np.array([r[1] for r in self._rows], dtype=np.int32),
                "chunk": np.array([r[2] for r in self._rows], dtype=np.int32),
                "segment": np.array([r[3] for r in self._rows], dtype=np.int32),
                "state": np.array([r[4] for r in self._rows]),
                "ref": np.array([r[5] for r in self._rows]),
                "control": np.array([r[6] for r in self._rows]),
                "cost": np.array([r[7] for r in self._rows]),
                "extruder": np.array([r[8] for r in self._rows]),
                "extruding": np.array([r[9] for r in self._rows], dtype=bool),
            }
        return self._arrays

    def __getattr__(self, name):
        arrays = self._build()
        try:
            return arrays[name]
        except KeyError:
            raise AttributeError(name) from None

    def iter_csv_rows(self):
        for r in self._rows:
            yield (r[0], r[1], r[2], r[3], *r[4], *r[5], *r[6], r[7], *r[8], int(r[9]))


def tracking_stats(log: EmulationLog, transient: float = 1.0) -> dict:
    """Per-axis position tracking error, overall and steady-state.

    Steady state drops every sample within ``transient`` seconds of a
    reference discontinuity (chunk start or waypoint segment change).
    """
    if len(log) == 0:
        raise EmptyLogError("no samples logged")
    err = np.abs(log.state[:, :3] - log.ref[:, :3])
    keys = list(zip(log.agent.tolist(), log.chunk.tolist(), log.segment.tolist()))
    t = log.t
    steady = np.ones(len(log), dtype=bool)
    boundary_t = t[0]
    prev_key = keys[0]
    for i in range(len(log)):
        if keys[i] != prev_key:
            boundary_t = t[i]
            prev_key = keys[i]
        if t[i] - boundary_t < transient:
            steady[i] = False
    out = {
        "max_error": err.max(axis=0).tolist(),
        "mean_error": err.mean(axis=0).tolist(),
        "n_samples": int(len(log)),
        "n_steady": int(steady.sum()),
    }
    if steady.any():
        out["steady_max_error"] = err[steady].max(axis=0).tolist()
        out["steady_mean_error"] = err[steady].mean(axis=0).tolist()
    else:
        out["steady_max_error"] = [math.nan] * 3
        out["steady_mean_error"] = [math.nan] * 3
    return out


# ---------------------------------------------------------------------------
# flying


def fly_path(
    x0,
    controller: NmpcController,
    refpath: ReferencePath,
    *,
    model: ModelParams,
    dt: float,
    rng=None,
    noise_pos: float = 0.0,
    noise_vel: float = 0.0,
    max_steps: int = 400_000,
):
    """Follow one reference path to completion; yields one row per step."""
    x = np.asarray(x0, dtype=np.float64).copy()
    for _ in range(max_steps):
        try:
            xref, seg, extruding = refpath.reference(x[:3])
        except PathCompleteError:
            return x
        u = controller.solve(x, xref)
        x = step_euler(x, np.asarray(u), dt, model)
        if rng is not None and (noise_pos > 0.0 or noise_vel > 0.0):
            x[:3] += rng.normal(0.0, noise_pos, 3)
            x[3:6] += rng.normal(0.0, noise_vel, 3)
        yield x, xref, np.asarray(u), controller.last_cost, seg, extruding
    raise RuntimeError("path follow stalled: step budget exhausted")


@dataclass
class MissionResult:
    tree: BspTree
    search: SearchResult
    schedule: PrintSchedule
    agents: list[UavAgent]
    log: EmulationLog
    stats: dict = field(default_factory=dict)


def run_mission(
    mesh,
    *,
    search: SearchConfig = SearchConfig(),
    slicer: SlicerParams = SlicerParams(),
    control: NmpcConfig = NmpcConfig(),
    model: ModelParams = ModelParams(),
    battery: BatteryPolicy = BatteryPolicy(),
    marker: MarkerParams = MarkerParams(),
    rod_length: float = EXTRUDER_ROD,
    rng=None,
    noise_pos: float = 0.0,
    noise_vel: float = 0.0,
    start_positions=None,
) -> MissionResult:
    """Print ``mesh`` end to end; raises SearchExhaustedError when the
    decomposition search cannot fit every chunk to an agent."""
    result = beam_search(mesh, search)
    if not result.terminated:
        raise SearchExhaustedError(
            f"no decomposition fits capacities {search.capacities} "
            f"within {search.max_iterations} iterations"
        )
    tree = rebuild_sorted(result.tree)
    schedule = build_schedule(tree)
    agents = [UavAgent(i, cap) for i, cap in enumerate(search.capacities)]
    leaves = {leaf.id: leaf for leaf in tree.leaves()}

    lo, _ = mesh.bounds()
    if start_positions is None:
        start_positions = [
            (lo[0] - 0.4 - 0.2 * i, lo[1] - 0.4, rod_length + 0.1) for i in range(len(agents))
        ]
    states = {
        a.id: np.array([*start_positions[i], 0, 0, 0, 0, 0], dtype=np.float64)
        for i, a in enumerate(agents)
    }
    controllers = {a.id: NmpcController(control, model) for a in agents}

    log = EmulationLog()
    t = 0.0
    while True:
        got = assign_next(schedule, agents, t)
        if got is None:
            break
        chunk_id, agent_id = got
        x = states[agent_id]
        tip_path = slice_chunk(leaves[chunk_id].mesh, slicer)
        # nozzle flies one drop height above the layer, so falling material
        # lands exactly on the planned track
        uav_path = extruder_to_uav(tip_path, rod_length + marker.drop_offset)
        # lead-in from wherever the vehicle is, so the carrot never jumps
        flown = PrintPath(
            [Waypoint(x[0], x[1], x[2])] + list(uav_path.waypoints), frame=uav_path.frame
        )
        refpath = ReferencePath.for_path(flown, control)
        n_markers0 = len(log.markers)
        for x, xref, u, cost, seg, extruding in fly_path(
            x, controllers[agent_id], refpath,
            model=model, dt=control.dt, rng=rng,
            noise_pos=noise_pos, noise_vel=noise_vel,
        ):
            t += control.dt
            tip = x[:3] - np.array([0.0, 0.0, rod_length])
            log.append(t, agent_id, chunk_id, seg, x, xref, u, cost, tip, extruding)
            if extruding:
                log.markers.append(
                    DepositedMarker(tip[0], tip[1], tip[2] - marker.drop_offset, t, chunk_id)
                )
        states[agent_id] = x
        schedule.log(
            t, "flown", chunk=chunk_id, agent=agent_id,
            path_length=flown.total_length,
            markers=len(log.markers) - n_markers0,
        )
        complete(
            schedule, agents, agent_id, chunk_id,
            drain=battery.drain_per_meter * flown.total_length,
            t=t, threshold=battery.threshold,
        )

    log.events = list(schedule.events)
    stats = {
        "mission_time": t,
        "n_chunks": tree.n_leaves,
        "completed": list(schedule.completed),
        "priority_order": [leaf.id for leaf in tree.leaves()],
        "root_volume": float(sum(tree.leaf_volumes())),
        "n_markers": len(log.markers),
        "battery": {a.id: a.battery for a in agents},
        "tracking": tracking_stats(log) if len(log) else None,
    }
    return MissionResult(tree, result, schedule, agents, log, stats)
