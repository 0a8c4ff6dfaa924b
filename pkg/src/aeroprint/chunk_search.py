"""Beam search for chunk decompositions.

Candidate cut planes are generated once from the root mesh (a fan of
near-vertical normals, each swept through the volume at a fixed spacing).
States are cut trees; expanding a state applies one unused candidate plane.
A state is terminated when every chunk fits inside the largest agent
capacity.  Lower heuristic is better: volume dispersion is penalised,
ground-printable ("seed") chunks and their flat contact interfaces are
rewarded.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bsp_tree import (
    BspTree,
    ChunkRecord,
    NoEffectError,
    UnknownPlaneError,
    apply_cut,
)
from .geometry import (
    DegenerateCutError,
    Plane,
    SNAP_EPS,
    TriangleMesh,
    plane_family,
    sample_normals,
    split_mesh,
)


class EmptyInputError(ValueError):
    """Search was handed an empty mesh, no capacities, or no volumes."""


class SearchExhaustedError(RuntimeError):
    """No decomposition within the iteration budget fits the agents."""


@dataclass(frozen=True)
class SearchConfig:
    """Tuning knobs for candidate generation, scoring, and the beam."""

    capacities: tuple[float, ...] = (0.025, 0.025)  # m^3 per agent
    g_disp: float = 200.0
    g_part: float = 10.0
    g_faces: float = 20.0
    phi_conn_max: float = math.radians(45.0)
    extruder_h: float = 0.15
    extruder_l: float = 0.15
    phi_sample_max: float = math.radians(45.0)
    n_polar: int = 2
    n_azimuth: int = 8
    delta: float = 0.25
    w_inner: int = 4
    w_outer: int = 4
    max_iterations: int = 10
    # Score volume dispersion by variance/mean (default) or std/mean.
    dispersion_sqrt: bool = False
    # Combine the connection and extruder angle limits with max() instead
    # of the safe min().
    combine_literal_max: bool = False


# ---------------------------------------------------------------------------
# scoring


def volume_dispersion(volumes, use_sqrt: bool = False) -> float:
    """Dispersion of chunk volumes around their mean.

    Variance over mean by default; ``use_sqrt`` switches the numerator to
    the standard deviation (the classical coefficient of variation).
    """
    v = np.asarray(volumes, dtype=np.float64)
    if v.size == 0:
        raise EmptyInputError("no volumes")
    mu = float(v.mean())
    if mu <= 0.0:
        raise EmptyInputError("volumes must have positive mean")
    sigma = float(((v - mu) ** 2).mean())
    if use_sqrt:
        sigma = math.sqrt(sigma)
    return sigma / mu


def _distances(chunk: ChunkRecord, plane: Plane) -> np.ndarray:
    return (chunk.mesh.vertices - plane.origin) @ plane.normal


def _chunk_plane_ids(chunk: ChunkRecord) -> list[int]:
    seen: dict[int, None] = {}
    for cf in chunk.cut_faces:
        seen.setdefault(cf.plane_id, None)
    return list(seen)


def is_seed(chunk: ChunkRecord, planes: dict[int, Plane]) -> bool:
    """True when the chunk sits on the non-positive side of all its cuts.

    Such a chunk depends on no neighbour above it and can be printed
    straight away.  A chunk with no cuts is trivially a seed.
    """
    for pid in _chunk_plane_ids(chunk):
        try:
            plane = planes[pid]
        except KeyError:
            raise UnknownPlaneError(pid) from None
        d = _distances(chunk, plane)
        if d.max() > SNAP_EPS or d.min() >= -SNAP_EPS:
            return False
    return True


def planar_contact_count(chunk: ChunkRecord, planes: dict[int, Plane]) -> int:
    """Number of the chunk's cut planes it touches with a whole flat face."""
    count = 0
    for pid in _chunk_plane_ids(chunk):
        try:
            plane = planes[pid]
        except KeyError:
            raise UnknownPlaneError(pid) from None
        on_plane = np.abs(_distances(chunk, plane)) <= SNAP_EPS
        if bool(on_plane[chunk.mesh.faces].all(axis=1).any()):
            count += 1
    return count


def chunk_reward(chunk: ChunkRecord, planes: dict[int, Plane], config: SearchConfig) -> float:
    """Reward for one chunk; zero unless it is a seed."""
    if not is_seed(chunk, planes):
        return 0.0
    return config.g_part + config.g_faces * planar_contact_count(chunk, planes)


def tree_heuristic(tree: BspTree, config: SearchConfig) -> float:
    """Score a decomposition (lower is better)."""
    leaves = tree.leaves()
    planes = tree.planes
    c_v = volume_dispersion([l.volume for l in leaves], use_sqrt=config.dispersion_sqrt)
    reward = sum(chunk_reward(l, planes, config) for l in leaves)
    return config.g_disp * c_v - reward


def is_terminated(tree: BspTree, config: SearchConfig) -> bool:
    """Every chunk fits strictly inside the largest agent capacity."""
    if not config.capacities:
        raise EmptyInputError("no agent capacities")
    cap = max(config.capacities)
    return all(v < cap for v in tree.leaf_volumes())


# ---------------------------------------------------------------------------
# candidate planes


def max_polar_angle(config: SearchConfig) -> float:
    """Largest cut-normal tilt the hardware tolerates.

    Combines the inter-chunk connection limit with the extruder clearance
    angle atan(h/l), then clamps to the sampling cap.
    """
    phi_extr = math.atan2(config.extruder_h, config.extruder_l)
    if config.combine_literal_max:
        combined = max(config.phi_conn_max, phi_extr)
    else:
        combined = min(config.phi_conn_max, phi_extr)
    return min(combined, config.phi_sample_max)


def candidate_planes(mesh: TriangleMesh, config: SearchConfig) -> list[Plane]:
    """Fixed candidate list: every sampled normal swept at ``delta`` spacing."""
    if mesh.is_empty:
        raise EmptyInputError("empty mesh")
    planes: list[Plane] = []
    for normal in sample_normals(max_polar_angle(config), config.n_polar, config.n_azimuth):
        planes.extend(plane_family(normal, mesh, config.delta))
    return planes


# ---------------------------------------------------------------------------
# beam search


@dataclass(frozen=True)
class _Entry:
    tree: BspTree
    used: frozenset[int]
    h: float
    leaves: int
    terminated: bool
    order: int

    @property
    def rank(self):
        return (self.h, self.leaves, self.order)


@dataclass
class SearchResult:
    tree: BspTree
    terminated: bool
    heuristic: float
    iterations: int
    n_expanded: int
    candidates: list[Plane]
    used_candidates: tuple[int, ...]
    report: list[dict] = field(default_factory=list)


def beam_search(mesh: TriangleMesh, config: SearchConfig, candidates=None) -> SearchResult:
    """Search for a terminated decomposition of ``mesh``.

    Returns the best terminated tree found, falling back to the best tree
    overall when the budget runs out first (``result.terminated`` tells the
    caller which happened).  ``candidates`` overrides the generated plane
    list, mainly so small cases can be enumerated exactly in tests.
    """
    if mesh.is_empty:
        raise EmptyInputError("empty mesh")
    if candidates is None:
        candidates = candidate_planes(mesh, config)
    candidates = list(candidates)

    # Split results are memoised per (chunk mesh, candidate); the pins keep
    # every keyed mesh alive so ids are never reused while the cache lives.
    cache: dict[tuple[int, int], tuple] = {}
    pins: dict[int, TriangleMesh] = {}

    def splitter_for(idx: int):
        def split_fn(m, plane):
            key = (id(m), idx)
            hit = cache.get(key)
            if hit is None:
                pins[id(m)] = m
                try:
                    hit = ("ok", split_mesh(m, plane))
                except DegenerateCutError as err:
                    hit = ("degenerate", err)
                cache[key] = hit
            if hit[0] == "degenerate":
                raise hit[1]
            return hit[1]
        return split_fn

    counter = itertools.count()

    def entry_for(tree: BspTree, used: frozenset[int]) -> _Entry:
        return _Entry(
            tree, used, tree_heuristic(tree, config), tree.n_leaves,
            is_terminated(tree, config), next(counter),
        )

    root = entry_for(BspTree.from_mesh(mesh), frozenset())
    beam = [root]
    seen = {()}
    best = root
    best_terminated = root if root.terminated else None
    report: list[dict] = []
    n_expanded = 0
    iterations = 0

    while iterations < config.max_iterations and not beam[0].terminated:
        children: list[_Entry] = []
        expanded = 0
        for entry in beam:
            if entry.terminated:
                continue
            expanded += 1
            kids: list[_Entry] = []
            for idx in range(len(candidates)):
                if idx in entry.used:
                    continue
                key = tuple(sorted(entry.used | {idx}))
                if key in seen:
                    continue
                try:
                    child_tree = apply_cut(entry.tree, candidates[idx], split_fn=splitter_for(idx))
                except (NoEffectError, DegenerateCutError):
                    continue
                seen.add(key)
                kids.append(entry_for(child_tree, entry.used | {idx}))
            kids.sort(key=lambda e: e.rank)
            children.extend(kids[: config.w_inner])
        if expanded == 0 or not children:
            break
        n_expanded += expanded
        iterations += 1
        pool = children + [e for e in beam if e.terminated]
        pool.sort(key=lambda e: e.rank)
        beam = pool[: config.w_outer]
        for e in children:
            if e.rank < best.rank:
                best = e
            if e.terminated and (best_terminated is None or e.rank < best_terminated.rank):
                best_terminated = e
        report.append({
            "iteration": iterations,
            "expanded": expanded,
            "children": len(children),
            "best_h": beam[0].h,
            "beam": [
                {"h": e.h, "leaves": e.leaves, "cuts": e.tree.n_cuts, "terminated": e.terminated}
                for e in beam
            ],
        })

    final = best_terminated if best_terminated is not None else best
    return SearchResult(
        tree=final.tree,
        terminated=final.terminated,
        heuristic=final.h,
        iterations=iterations,
        n_expanded=n_expanded,
        candidates=candidates,
        used_candidates=tuple(sorted(final.used)),
        report=report,
    )
