import numpy as np
import pytest

from aeroprint.geometry import make_box
from aeroprint.toolpath import (
    EXTRUDER_FRAME,
    UAV_FRAME,
    EmptySliceError,
    ParseError,
    PrintPath,
    SlicerParams,
    UnsupportedCommandError,
    Waypoint,
    extruder_to_uav,
    parse_gcode,
    path_from_dict,
    path_to_dict,
    serialize_gcode,
    slice_chunk,
)


def test_parse_basic_move():
    path = parse_gcode("G1 X1000 Y0 Z200 E1.5\n")
    assert len(path) == 1
    w = path[0]
    assert (w.x, w.y, w.z) == pytest.approx((1.0, 0.0, 0.2))
    assert w.extrude


def test_parse_modal_coordinates_and_feed():
    path = parse_gcode("G0 X10 Y10 Z5 F9000\nG1 Y20 E1\nG1 F1200\n")
    assert len(path) == 2
    assert not path[0].extrude
    assert path[1].x == pytest.approx(0.010)  # X carried over
    assert path[1].y == pytest.approx(0.020)
    assert path[1].extrude


def test_parse_retraction_and_reset():
    text = "G1 X10 E2\nG1 E1\nG1 X20\nG92 E0\nG1 X30 E0.5\n"
    path = parse_gcode(text)
    assert [w.extrude for w in path] == [True, False, True]


def test_parse_ignores_housekeeping():
    text = "; header\nM104 S200\nG21\nG90\nG28\n(prime) G1 X5 E1 ; go\nG92\n"
    path = parse_gcode(text)
    assert len(path) == 1 and path[0].extrude


@pytest.mark.parametrize(
    "line",
    ["G2 X5 Y5 I1 J0", "G3 X5 Y5 I1 J0", "G91", "G20", "G92 X0 Y0", "G5 X1"],
)
def test_parse_unsupported(line):
    with pytest.raises(UnsupportedCommandError):
        parse_gcode(line)


@pytest.mark.parametrize("line", ["G1 Xabc", "G1 Q5", "T0", "Gone"])
def test_parse_malformed(line):
    with pytest.raises(ParseError):
        parse_gcode(line)


def test_gcode_round_trip():
    rng = np.random.default_rng(7)
    wps = []
    p = rng.uniform(0.05, 0.4, 3)
    for i in range(40):
        p = p + rng.uniform(-0.02, 0.02, 3)
        p[2] = abs(p[2]) + 1e-3
        wps.append(Waypoint(*p, extrude=bool(i % 3)))
    path = PrintPath(wps)
    back = parse_gcode(serialize_gcode(path, feed_mm_min=1800.0))
    assert len(back) == len(path)
    for a, b in zip(path, back):
        assert abs(a.x - b.x) < 1e-12
        assert abs(a.y - b.y) < 1e-12
        assert abs(a.z - b.z) < 1e-12
        assert a.extrude == b.extrude


def test_path_lengths():
    path = PrintPath(
        [Waypoint(0, 0, 0.1), Waypoint(1, 0, 0.1, True), Waypoint(1, 2, 0.1)]
    )
    assert path.total_length == pytest.approx(3.0)
    assert path.extrude_length == pytest.approx(1.0)
    assert path.travel_length == pytest.approx(2.0)


def test_path_rejects_below_plate():
    with pytest.raises(ValueError):
        PrintPath([Waypoint(0, 0, -0.01)])


def test_slice_slab_two_layers():
    slab = make_box((1.0, 1.0, 0.1))
    path = slice_chunk(slab, SlicerParams(layer_height=0.05, infill_spacing=0.5))
    zs = sorted({w.z for w in path})
    assert zs == pytest.approx([0.025, 0.075])
    # per layer: unit-square perimeter (4.0) + two full-width infill lines
    assert path.extrude_length == pytest.approx(12.0, rel=1e-9)
    assert path.frame == EXTRUDER_FRAME


def test_slice_infill_alternates_axis():
    slab = make_box((1.0, 1.0, 0.1))
    path = slice_chunk(slab, SlicerParams(layer_height=0.05, infill_spacing=0.5))
    def interior_lines(z, run_axis):
        # infill lines run across the square at a constant interior offset
        segs = []
        for a, b in zip(path, path.waypoints[1:]):
            if not b.extrude or abs(a.z - z) > 1e-12 or abs(b.z - z) > 1e-12:
                continue
            if run_axis == "x" and abs(a.y - b.y) < 1e-12 and 0.01 < a.y < 0.99:
                segs.append((a, b))
            if run_axis == "y" and abs(a.x - b.x) < 1e-12 and 0.01 < a.x < 0.99:
                segs.append((a, b))
        return segs

    assert len(interior_lines(0.025, "x")) == 2
    assert len(interior_lines(0.075, "y")) == 2


def test_slice_avoids_cavity(hollow_rect):
    path = slice_chunk(hollow_rect, SlicerParams(layer_height=0.25, infill_spacing=0.05))
    inner = 0.9 - 1e-6
    for a, b in zip(path, path.waypoints[1:]):
        if b.extrude:
            mx, my = (a.x + b.x) / 2.0, (a.y + b.y) / 2.0
            assert not (abs(mx) < inner and abs(my) < inner)
    assert path.extrude_length > 8.0  # wall perimeters alone exceed this


def test_slice_too_thin():
    pancake = make_box((1.0, 1.0, 0.1))
    with pytest.raises(EmptySliceError):
        slice_chunk(pancake, SlicerParams(layer_height=0.125))


def test_extruder_to_uav_shift():
    path = PrintPath([Waypoint(0.1, 0.2, 0.0), Waypoint(0.1, 0.3, 0.0, True)])
    lifted = extruder_to_uav(path, 0.5)
    assert lifted.frame == UAV_FRAME
    assert [w.z for w in lifted] == pytest.approx([0.5, 0.5])
    assert [w.extrude for w in lifted] == [False, True]
    assert lifted.total_length == pytest.approx(path.total_length)
    with pytest.raises(ValueError):
        extruder_to_uav(lifted, 0.5)


def test_path_dict_round_trip():
    path = PrintPath([Waypoint(0.1, 0.2, 0.3), Waypoint(0.4, 0.5, 0.6, True)])
    back = path_from_dict(path_to_dict(path))
    assert back.frame == path.frame
    assert list(back) == list(path)
