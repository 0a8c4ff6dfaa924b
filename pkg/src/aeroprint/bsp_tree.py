"""Binary space partitioning bookkeeping for chunk decompositions.

A tree starts as a single leaf holding the whole mesh.  Applying a cut plane
replaces every leaf the plane actually intersects with an internal node whose
left child is the negative-side piece and right child the positive-side piece.
Trees are immutable values: apply_cut returns a new tree and shares untouched
subtrees with its parent, which the search exploits heavily.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import mesh_io
from .geometry import (
    DegenerateCutError,
    Plane,
    SNAP_EPS,
    TriangleMesh,
    mesh_volume,
    split_mesh,
)

NEGATIVE = "negative"
POSITIVE = "positive"


class NoEffectError(ValueError):
    """The cut plane does not intersect the interior of any leaf."""


class UnknownPlaneError(KeyError):
    """A cut-face references a plane id missing from the registry."""


@dataclass(frozen=True)
class CutFace:
    """Provenance of one planar cut on a chunk: which plane, which side."""

    plane_id: int
    side: str

    def __post_init__(self):
        if self.side not in (NEGATIVE, POSITIVE):
            raise ValueError(f"side must be '{NEGATIVE}' or '{POSITIVE}'")


@dataclass(frozen=True)
class ChunkRecord:
    """A leaf of the tree: a printable piece of the original mesh."""

    id: int
    mesh: TriangleMesh
    cut_faces: tuple[CutFace, ...]
    volume: float


@dataclass(frozen=True)
class _Node:
    plane_id: int
    left: "object"   # _Node | ChunkRecord (negative side)
    right: "object"  # _Node | ChunkRecord (positive side)


class BspTree:
    """Immutable cut tree over a root mesh."""

    __slots__ = ("root_mesh", "_root", "_planes", "_next_plane", "_next_chunk")

    def __init__(self, root_mesh, root, planes, next_plane, next_chunk):
        self.root_mesh = root_mesh
        self._root = root
        self._planes = planes
        self._next_plane = next_plane
        self._next_chunk = next_chunk

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "BspTree":
        chunk = ChunkRecord(0, mesh, (), mesh_volume(mesh))
        return cls(mesh, chunk, {}, 0, 1)

    # -- queries ----------------------------------------------------------

    @property
    def planes(self) -> dict[int, Plane]:
        return dict(self._planes)

    def plane(self, plane_id: int) -> Plane:
        try:
            return self._planes[plane_id]
        except KeyError:
            raise UnknownPlaneError(plane_id) from None

    def leaves(self) -> list[ChunkRecord]:
        """Leaf chunks in in-order (left-to-right) position."""
        out: list[ChunkRecord] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if isinstance(node, ChunkRecord):
                out.append(node)
            else:
                stack.append(node.right)
                stack.append(node.left)
        return out

    def leaf_volumes(self) -> list[float]:
        return [leaf.volume for leaf in self.leaves()]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    @property
    def n_cuts(self) -> int:
        return len(self._planes)

    def __repr__(self):
        return f"BspTree({self.n_cuts} planes, {self.n_leaves} chunks)"


def apply_cut(tree: BspTree, plane: Plane, split_fn=split_mesh) -> BspTree:
    """Cut every leaf the plane intersects; returns a new tree.

    Raises NoEffectError when no leaf is split, and propagates
    DegenerateCutError when a split would produce a sliver (callers treat
    both as "discard this candidate").  ``split_fn`` exists so the search
    can inject a memoised splitter.
    """
    plane_id = tree._next_plane
    next_chunk = [tree._next_chunk]
    changed = [False]

    def descend(node):
        if isinstance(node, _Node):
            left = descend(node.left)
            right = descend(node.right)
            if left is node.left and right is node.right:
                return node
            return _Node(node.plane_id, left, right)
        d = (node.mesh.vertices - plane.origin) @ plane.normal
        if (d >= -SNAP_EPS).all() or (d <= SNAP_EPS).all():
            return node  # leaf entirely on one side
        neg_mesh, pos_mesh = split_fn(node.mesh, plane)
        if neg_mesh.is_empty or pos_mesh.is_empty:
            return node
        neg = ChunkRecord(
            next_chunk[0], neg_mesh, node.cut_faces + (CutFace(plane_id, NEGATIVE),),
            mesh_volume(neg_mesh),
        )
        pos = ChunkRecord(
            next_chunk[0] + 1, pos_mesh, node.cut_faces + (CutFace(plane_id, POSITIVE),),
            mesh_volume(pos_mesh),
        )
        next_chunk[0] += 2
        changed[0] = True
        return _Node(plane_id, neg, pos)

    root = descend(tree._root)
    if not changed[0]:
        raise NoEffectError("plane does not cut any leaf")
    planes = dict(tree._planes)
    planes[plane_id] = plane
    return BspTree(tree.root_mesh, root, planes, plane_id + 1, next_chunk[0])


def in_order_priority(tree: BspTree) -> list[int]:
    """Print order: chunk ids from the in-order traversal (negative first)."""
    return [leaf.id for leaf in tree.leaves()]


def rebuild_sorted(tree: BspTree) -> BspTree:
    """Re-apply all planes in ascending origin-z order (ties by plane id).

    The leaf cells of a cut arrangement do not depend on insertion order, so
    the rebuilt tree has the same chunks but a deterministic shape; leaves are
    renumbered 0..n-1 in priority order and planes 0..k-1 in application
    order, which keeps every export stable.
    """
    order = sorted(tree._planes.items(), key=lambda kv: (float(kv[1].origin[2]), kv[0]))
    rebuilt = BspTree.from_mesh(tree.root_mesh)
    for _, plane in order:
        try:
            rebuilt = apply_cut(rebuilt, plane)
        except NoEffectError:
            continue
    return _renumber(rebuilt)


def _renumber(tree: BspTree) -> BspTree:
    counter = [0]

    def descend(node):
        if isinstance(node, ChunkRecord):
            new = replace(node, id=counter[0])
            counter[0] += 1
            return new
        return _Node(node.plane_id, descend(node.left), descend(node.right))

    root = descend(tree._root)
    return BspTree(tree.root_mesh, root, dict(tree._planes), tree._next_plane, counter[0])


# ---------------------------------------------------------------------------
# export


def tree_to_dict(tree: BspTree) -> dict:
    def node_dict(node):
        if isinstance(node, ChunkRecord):
            return {
                "chunk": node.id,
                "volume": node.volume,
                "cut_faces": [[cf.plane_id, cf.side] for cf in node.cut_faces],
                "n_faces": node.mesh.n_faces,
            }
        return {
            "plane": node.plane_id,
            "left": node_dict(node.left),
            "right": node_dict(node.right),
        }

    return {
        "planes": {
            str(pid): {"origin": list(map(float, pl.origin)), "normal": list(map(float, pl.normal))}
            for pid, pl in sorted(tree._planes.items())
        },
        "root": node_dict(tree._root),
        "priority_order": in_order_priority(tree),
        "total_volume": float(sum(tree.leaf_volumes())),
    }


def save_tree_json(tree: BspTree, path) -> None:
    Path(path).write_text(json.dumps(tree_to_dict(tree), indent=2) + "\n")


def export_chunk_objs(tree: BspTree, directory) -> list[Path]:
    """One OBJ per leaf chunk, named by chunk id."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for leaf in tree.leaves():
        p = directory / f"chunk_{leaf.id:03d}.obj"
        mesh_io.save_obj(p, leaf.mesh)
        paths.append(p)
    return paths
