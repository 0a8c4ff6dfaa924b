"""Chunk-to-agent scheduling.

Chunks must be laid down one at a time in priority order (later chunks can
rest against earlier ones), so the schedule is a serial queue with a single
active slot.  Agents refill material between chunks; their capacity is a
per-chunk bound, while battery only drains.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .bsp_tree import BspTree, in_order_priority

BATTERY_INACTIVE_THRESHOLD = 0.15


class AllocationError(RuntimeError):
    pass


class NoCapableAgentError(AllocationError):
    """No active agent can hold the next chunk's material."""


class NotActiveError(AllocationError):
    """Completion reported for a pair that is not currently printing."""


@dataclass
class UavAgent:
    id: int
    capacity: float  # m^3 of material per refill
    battery: float = 1.0
    inactive: bool = False


@dataclass
class PrintSchedule:
    queue: deque[int]
    volumes: dict[int, float]
    active: tuple[int, int] | None = None  # (chunk_id, agent_id)
    completed: list[int] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    @property
    def is_complete(self) -> bool:
        return not self.queue and self.active is None

    def log(self, t: float, event: str, **extra):
        self.events.append({"t": float(t), "event": event, **extra})


def build_schedule(tree: BspTree) -> PrintSchedule:
    leaves = tree.leaves()
    return PrintSchedule(
        queue=deque(in_order_priority(tree)),
        volumes={leaf.id: leaf.volume for leaf in leaves},
    )


def _agent_by_id(agents, agent_id: int) -> UavAgent:
    for a in agents:
        if a.id == agent_id:
            return a
    raise ValueError(f"unknown agent {agent_id}")


def assign_next(schedule: PrintSchedule, agents, t: float = 0.0):
    """Hand the head of the queue to the best-fitting capable agent.

    Returns ``(chunk_id, agent_id)``, or None when the queue is empty.
    Best fit means the smallest capacity that still exceeds the chunk
    volume, ties broken by lowest agent id.
    """
    if schedule.active is not None:
        raise AllocationError(f"chunk {schedule.active[0]} is still printing")
    if not schedule.queue:
        return None
    chunk_id = schedule.queue[0]
    volume = schedule.volumes[chunk_id]
    capable = [a for a in agents if not a.inactive and a.capacity > volume]
    if not capable:
        raise NoCapableAgentError(
            f"chunk {chunk_id} (volume {volume:.4g}) exceeds every available capacity"
        )
    agent = min(capable, key=lambda a: (a.capacity, a.id))
    schedule.queue.popleft()
    schedule.active = (chunk_id, agent.id)
    schedule.log(t, "assign", chunk=chunk_id, agent=agent.id, volume=volume)
    return chunk_id, agent.id


def complete(
    schedule: PrintSchedule,
    agents,
    agent_id: int,
    chunk_id: int,
    drain: float,
    t: float = 0.0,
    threshold: float = BATTERY_INACTIVE_THRESHOLD,
):
    """Mark the active chunk finished and charge the agent's battery."""
    if schedule.active != (chunk_id, agent_id):
        raise NotActiveError(f"chunk {chunk_id} is not active on agent {agent_id}")
    agent = _agent_by_id(agents, agent_id)
    agent.battery = max(0.0, agent.battery - drain)
    schedule.active = None
    schedule.completed.append(chunk_id)
    schedule.log(t, "complete", chunk=chunk_id, agent=agent_id, battery=agent.battery)
    if agent.battery < threshold and not agent.inactive:
        agent.inactive = True
        schedule.log(t, "agent_inactive", agent=agent_id, battery=agent.battery)
