import numpy as np
import pytest

from aeroprint.geometry import make_box, make_hollow_box


@pytest.fixture
def unit_cube():
    return make_box((1.0, 1.0, 1.0))


@pytest.fixture
def hollow_rect():
    # 2 x 2 footprint, 0.5 tall, 0.1 walls: volume (4 - 1.8^2) * 0.5 = 0.38
    return make_hollow_box((2.0, 2.0), height=0.5, wall=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): acceptance criterion, reported in the summary"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call":
                continue
            marker = rep.keywords.get("acceptance") if hasattr(rep, "keywords") else None
            if "acceptance" not in getattr(rep, "keywords", {}):
                continue
            label = rep.nodeid.split("::")[-1]
            crit = _CRITERION_LABELS.get(label, label)
            lines.append((crit, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for crit, verdict in sorted(lines):
            terminalreporter.write_line(f"{crit}: {verdict}")


_CRITERION_LABELS = {
    "test_volume_conservation_randomized": "AC-1 volume conservation under planar cuts",
    "test_beam_matches_exhaustive_enumeration": "AC-2 beam search vs exhaustive enumeration",
    "test_seed_and_heuristic_exact_values": "AC-3 seed/heuristic exact values",
    "test_end_to_end_mission": "AC-4 end-to-end emulated mission",
    "test_solver_optimality_and_constraints": "AC-5 solver sanity (hover, gradients, constraints)",
    "test_scheduling_invariants_randomized": "AC-6 scheduling invariants",
    "test_deterministic_replay": "AC-7 deterministic replay",
}
