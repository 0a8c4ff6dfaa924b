import numpy as np
import pytest

from aeroprint.bsp_tree import BspTree, apply_cut, rebuild_sorted
from aeroprint.geometry import Plane
from aeroprint.task_allocation import (
    AllocationError,
    NoCapableAgentError,
    NotActiveError,
    PrintSchedule,
    UavAgent,
    assign_next,
    build_schedule,
    complete,
)
from collections import deque


def make_schedule(volumes):
    return PrintSchedule(queue=deque(range(len(volumes))), volumes=dict(enumerate(volumes)))


def test_schedule_from_tree(unit_cube):
    tree = apply_cut(BspTree.from_mesh(unit_cube), Plane((0, 0, 0.5), (0, 0, 1)))
    tree = rebuild_sorted(tree)
    sched = build_schedule(tree)
    assert list(sched.queue) == [0, 1]
    assert sched.volumes[0] == pytest.approx(0.5)
    assert not sched.is_complete


def test_best_fit_smallest_sufficient():
    sched = make_schedule([0.25])
    agents = [UavAgent(0, 0.6), UavAgent(1, 0.3)]
    assert assign_next(sched, agents) == (0, 1)


def test_best_fit_tie_lowest_id():
    sched = make_schedule([0.25])
    agents = [UavAgent(3, 0.3), UavAgent(1, 0.3)]
    assert assign_next(sched, agents) == (0, 1)


def test_capacity_bound_is_strict():
    sched = make_schedule([0.3])
    with pytest.raises(NoCapableAgentError):
        assign_next(sched, [UavAgent(0, 0.3)])


def test_inactive_agents_are_skipped():
    sched = make_schedule([0.1, 0.1])
    agents = [UavAgent(0, 0.2, inactive=True), UavAgent(1, 0.5)]
    assert assign_next(sched, agents) == (0, 1)


def test_serial_mutual_exclusion():
    sched = make_schedule([0.1, 0.1])
    agents = [UavAgent(0, 0.2)]
    assign_next(sched, agents)
    with pytest.raises(AllocationError):
        assign_next(sched, agents)


def test_complete_validates_active_pair():
    sched = make_schedule([0.1])
    agents = [UavAgent(0, 0.2), UavAgent(1, 0.2)]
    assign_next(sched, agents)
    with pytest.raises(NotActiveError):
        complete(sched, agents, agent_id=1, chunk_id=0, drain=0.1)
    with pytest.raises(NotActiveError):
        complete(sched, agents, agent_id=0, chunk_id=5, drain=0.1)
    complete(sched, agents, agent_id=0, chunk_id=0, drain=0.1)
    assert sched.is_complete
    assert sched.completed == [0]


def test_battery_drain_and_cutoff():
    sched = make_schedule([0.1, 0.1, 0.1])
    agents = [UavAgent(0, 0.2, battery=0.4)]
    assign_next(sched, agents)
    complete(sched, agents, 0, 0, drain=0.2)
    assert agents[0].battery == pytest.approx(0.2)
    assert not agents[0].inactive
    assign_next(sched, agents)
    complete(sched, agents, 0, 1, drain=0.1)
    # 0.1 < 0.15 threshold: grounded
    assert agents[0].inactive
    with pytest.raises(NoCapableAgentError):
        assign_next(sched, agents)


def test_empty_queue_returns_none():
    sched = make_schedule([])
    assert assign_next(sched, [UavAgent(0, 1.0)]) is None


def test_randomized_invariants(rng):
    for _ in range(50):
        n_chunks = int(rng.integers(1, 8))
        volumes = rng.uniform(0.01, 0.5, n_chunks)
        sched = make_schedule(volumes)
        agents = [
            UavAgent(i, float(rng.uniform(0.05, 0.7)), battery=float(rng.uniform(0.2, 1.0)))
            for i in range(int(rng.integers(1, 4)))
        ]
        batteries = {a.id: a.battery for a in agents}
        order = []
        while not sched.is_complete:
            try:
                got = assign_next(sched, agents)
            except NoCapableAgentError:
                break
            if got is None:
                break
            chunk, agent_id = got
            agent = next(a for a in agents if a.id == agent_id)
            assert not agent.inactive or agent.battery >= 0.15
            assert agent.capacity > volumes[chunk]
            order.append(chunk)
            complete(sched, agents, agent_id, chunk, drain=float(rng.uniform(0, 0.3)))
            assert agents and all(a.battery <= batteries[a.id] for a in agents)
        # chunks came out in queue order, each at most once
        assert order == sorted(set(order))
