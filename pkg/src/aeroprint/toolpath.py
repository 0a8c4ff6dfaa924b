"""Print paths: a G-code dialect, a minimal slicer, and frame shifts.

Paths are polylines of waypoints; the ``extrude`` flag on a waypoint says
whether material is deposited on the segment *arriving* at it.  The G-code
reader/writer speaks the common flavour (millimetres, absolute moves,
G0/G1 with X Y Z E F) and refuses anything it cannot represent exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Plane, TriangleMesh, cross_section

MM = 1e-3
FEED = MM / 60.0  # mm/min -> m/s

EXTRUDER_FRAME = "extruder_tip"
UAV_FRAME = "uav_body"


class ParseError(ValueError):
    """Malformed G-code input."""


class UnsupportedCommandError(ValueError):
    """Valid G-code outside the supported subset (arcs, relative mode...)."""


class EmptySliceError(ValueError):
    """Chunk too thin to hold a single layer."""


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    z: float
    extrude: bool = False

    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


class PrintPath:
    """Immutable waypoint sequence in a named frame."""

    __slots__ = ("waypoints", "frame")

    def __init__(self, waypoints, frame: str = EXTRUDER_FRAME):
        wps = tuple(waypoints)
        if frame == EXTRUDER_FRAME:
            for i, w in enumerate(wps):
                if w.z < -1e-9:
                    raise ValueError(f"waypoint {i} below build plate (z={w.z})")
        self.waypoints = wps
        self.frame = frame

    def __len__(self):
        return len(self.waypoints)

    def __iter__(self):
        return iter(self.waypoints)

    def __getitem__(self, i):
        return self.waypoints[i]

    def _segment_lengths(self):
        for prev, cur in zip(self.waypoints, self.waypoints[1:]):
            yield math.dist((prev.x, prev.y, prev.z), (cur.x, cur.y, cur.z)), cur.extrude

    @property
    def total_length(self) -> float:
        return sum(l for l, _ in self._segment_lengths())

    @property
    def extrude_length(self) -> float:
        return sum(l for l, ex in self._segment_lengths() if ex)

    @property
    def travel_length(self) -> float:
        return sum(l for l, ex in self._segment_lengths() if not ex)

    def __repr__(self):
        return f"PrintPath({len(self.waypoints)} wps, {self.frame})"


def extruder_to_uav(path: PrintPath, l_ex: float) -> PrintPath:
    """Lift a nozzle-tip path to the body frame of the carrying vehicle."""
    if path.frame != EXTRUDER_FRAME:
        raise ValueError(f"expected a {EXTRUDER_FRAME} path, got {path.frame}")
    return PrintPath(
        (Waypoint(w.x, w.y, w.z + l_ex, w.extrude) for w in path.waypoints),
        frame=UAV_FRAME,
    )


# ---------------------------------------------------------------------------
# G-code


def _strip_comments(line: str) -> str:
    line = line.split(";", 1)[0]
    while "(" in line:
        start = line.index("(")
        end = line.find(")", start)
        if end < 0:
            line = line[:start]
            break
        line = line[:start] + line[end + 1:]
    return line.strip()


def parse_gcode(text: str) -> PrintPath:
    """Read absolute-millimetre G0/G1 toolpaths into a PrintPath.

    Only ``G1`` moves with growing E deposit material; retractions and
    feed-only lines move nothing.  ``G92 E`` resets the filament counter.
    Arcs, relative mode, inch units and coordinate resets raise
    UnsupportedCommandError.
    """
    x = y = z = 0.0  # mm, absolute
    e = 0.0
    waypoints: list[Waypoint] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comments(raw)
        if not line:
            continue
        words = line.split()
        head = words[0].upper()
        if head.startswith("M"):
            continue
        if not head.startswith("G"):
            raise ParseError(f"line {lineno}: expected a G/M command, got {words[0]!r}")
        try:
            code = int(head[1:])
        except ValueError:
            raise ParseError(f"line {lineno}: bad command {words[0]!r}") from None

        args = {}
        for w in words[1:]:
            letter = w[0].upper()
            try:
                args[letter] = float(w[1:])
            except ValueError:
                raise ParseError(f"line {lineno}: bad word {w!r}") from None

        if code in (21, 28, 90):
            continue  # mm units, homing, absolute mode: already our state
        if code in (2, 3):
            raise UnsupportedCommandError(f"line {lineno}: arc moves (G{code}) not supported")
        if code == 91:
            raise UnsupportedCommandError(f"line {lineno}: relative mode (G91) not supported")
        if code == 20:
            raise UnsupportedCommandError(f"line {lineno}: inch units (G20) not supported")
        if code == 92:
            if any(k in args for k in "XYZ"):
                raise UnsupportedCommandError(
                    f"line {lineno}: G92 position reset not supported"
                )
            if "E" in args:
                e = args["E"]
            continue
        if code not in (0, 1):
            raise UnsupportedCommandError(f"line {lineno}: G{code} not supported")

        bad = set(args) - set("XYZEF")
        if bad:
            raise ParseError(f"line {lineno}: unexpected words {sorted(bad)}")
        nx, ny, nz = args.get("X", x), args.get("Y", y), args.get("Z", z)
        ne = args.get("E", e)
        moved = (nx, ny, nz) != (x, y, z)
        extrude = code == 1 and ne > e and moved
        x, y, z, e = nx, ny, nz, ne
        if moved:
            waypoints.append(Waypoint(x * MM, y * MM, z * MM, extrude))

    return PrintPath(waypoints)


def serialize_gcode(path: PrintPath, feed_mm_min: float | None = None) -> str:
    """Write a PrintPath back out as absolute-millimetre G-code."""
    if path.frame != EXTRUDER_FRAME:
        raise ValueError("only extruder-tip paths serialize to G-code")
    lines = ["G21", "G90", "G92 E0"]
    px = py = pz = 0.0  # mm
    e = 0.0
    first_move = True
    for w in path.waypoints:
        mx, my, mz = float(w.x) / MM, float(w.y) / MM, float(w.z) / MM
        if (mx, my, mz) == (px, py, pz):
            continue
        words = [f"X{mx!r}", f"Y{my!r}", f"Z{mz!r}"]
        if w.extrude:
            e += max(math.dist((mx, my, mz), (px, py, pz)), 1.0)
            words.append(f"E{e!r}")
            cmd = "G1"
        else:
            cmd = "G0"
        if first_move and feed_mm_min is not None:
            words.append(f"F{float(feed_mm_min)!r}")
        first_move = False
        lines.append(" ".join([cmd] + words))
        px, py, pz = mx, my, mz
    return "\n".join(lines) + "\n"


def path_to_dict(path: PrintPath) -> dict:
    return {
        "frame": path.frame,
        "waypoints": [[w.x, w.y, w.z, bool(w.extrude)] for w in path.waypoints],
        "total_length": path.total_length,
        "extrude_length": path.extrude_length,
    }


def path_from_dict(d: dict) -> PrintPath:
    return PrintPath(
        (Waypoint(x, y, z, bool(ex)) for x, y, z, ex in d["waypoints"]),
        frame=d.get("frame", EXTRUDER_FRAME),
    )


# ---------------------------------------------------------------------------
# slicing


@dataclass(frozen=True)
class SlicerParams:
    layer_height: float = 0.125
    infill_spacing: float = 0.15


def slice_chunk(mesh: TriangleMesh, params: SlicerParams = SlicerParams()) -> PrintPath:
    """Plan a perimeter+rectilinear-infill path covering the chunk.

    Layers sit at mid-height of each ``layer_height`` band.  Infill
    scanlines run along x on even layers and along y on odd ones, zigzag
    alternating, with hole-aware even-odd clipping.
    """
    lo, hi = mesh.bounds()
    height = float(hi[2] - lo[2])
    if height < params.layer_height:
        raise EmptySliceError(
            f"chunk height {height:.4g} is under one layer ({params.layer_height:.4g})"
        )
    waypoints: list[Waypoint] = []
    k = 0
    while (k + 0.5) * params.layer_height < height:
        zk = float(lo[2]) + (k + 0.5) * params.layer_height
        loops = cross_section(mesh, Plane((0.0, 0.0, zk), (0.0, 0.0, 1.0)))
        loops2d = [loop[:, :2] for loop in loops if len(loop) >= 3]
        if loops2d:
            _layer_moves(waypoints, loops2d, zk, params.infill_spacing, along_x=(k % 2 == 0))
        k += 1
    if not waypoints:
        raise EmptySliceError("no printable cross sections")
    return PrintPath(waypoints)


def _append(waypoints: list[Waypoint], x: float, y: float, z: float, extrude: bool):
    if waypoints:
        last = waypoints[-1]
        if math.dist((last.x, last.y, last.z), (x, y, z)) < 1e-12:
            return
    waypoints.append(Waypoint(x, y, z, extrude))


def _layer_moves(waypoints, loops2d, zk, spacing, along_x):
    # perimeters: seam at the lexicographically smallest vertex of each loop
    for loop in loops2d:
        seam = min(range(len(loop)), key=lambda i: (loop[i, 0], loop[i, 1]))
        ring = np.vstack([loop[seam:], loop[:seam], loop[seam:seam + 1]])
        _append(waypoints, float(ring[0, 0]), float(ring[0, 1]), zk, False)
        for px, py in ring[1:]:
            _append(waypoints, float(px), float(py), zk, True)

    # rectilinear infill
    allpts = np.vstack(loops2d)
    scan_axis = 1 if along_x else 0  # axis the scanline positions step along
    run_axis = 0 if along_x else 1
    cmin, cmax = float(allpts[:, scan_axis].min()), float(allpts[:, scan_axis].max())
    j = 0
    while cmin + (j + 0.5) * spacing < cmax:
        c = cmin + (j + 0.5) * spacing
        xs = _crossings(loops2d, c, scan_axis)
        segments = [(xs[i], xs[i + 1]) for i in range(0, len(xs) - 1, 2)]
        if j % 2 == 1:
            segments = [(b, a) for a, b in reversed(segments)]
        for a, b in segments:
            if abs(b - a) < 1e-12:
                continue
            start = (a, c) if run_axis == 0 else (c, a)
            end = (b, c) if run_axis == 0 else (c, b)
            _append(waypoints, start[0], start[1], zk, False)
            _append(waypoints, end[0], end[1], zk, True)
        j += 1


def _crossings(loops2d, c, scan_axis):
    run_axis = 1 - scan_axis
    out = []
    for loop in loops2d:
        rolled = np.roll(loop, -1, axis=0)
        for (pa, pb) in zip(loop, rolled):
            s0, s1 = pa[scan_axis], pb[scan_axis]
            if (s0 <= c < s1) or (s1 <= c < s0):
                t = (c - s0) / (s1 - s0)
                out.append(float(pa[run_axis] + t * (pb[run_axis] - pa[run_axis])))
    out.sort()
    return out
