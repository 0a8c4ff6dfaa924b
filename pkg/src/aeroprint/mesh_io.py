"""STL loading and OBJ/STL export for triangle meshes.

STL files are triangle soup; on load identical vertex coordinates are merged
so the result can be checked for watertightness and used for cutting.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .geometry import TriangleMesh


def load_stl(path) -> TriangleMesh:
    """Read a binary or ASCII STL file (auto-detected)."""
    data = Path(path).read_bytes()
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            return _from_soup(_parse_binary(data, count))
    return _from_soup(_parse_ascii(data))


def _parse_binary(data: bytes, count: int) -> np.ndarray:
    rec = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    rec = rec.reshape(count, 50)
    floats = rec[:, :48].copy().view("<f4").reshape(count, 4, 3)
    return floats[:, 1:, :].astype(np.float64)  # drop the normal row


def _parse_ascii(data: bytes) -> np.ndarray:
    tris = []
    cur = []
    for raw in data.decode("ascii", errors="replace").splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "vertex":
            if len(parts) != 4:
                raise ValueError(f"malformed STL vertex line: {raw.strip()!r}")
            cur.append([float(parts[1]), float(parts[2]), float(parts[3])])
            if len(cur) == 3:
                tris.append(cur)
                cur = []
    if cur:
        raise ValueError("ASCII STL ended mid-facet")
    if not tris:
        raise ValueError("no facets found in STL file")
    return np.array(tris, dtype=np.float64)


def _from_soup(tris: np.ndarray) -> TriangleMesh:
    """Merge exactly-equal vertices and drop degenerate facets."""
    flat = tris.reshape(-1, 3)
    verts, inverse = np.unique(flat, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 2] != faces[:, 0])
    return TriangleMesh(verts, faces[ok])


def save_stl(path, mesh: TriangleMesh) -> None:
    """Write a binary STL file."""
    v = mesh.vertices
    f = mesh.faces
    n = len(f)
    buf = bytearray(struct.pack("<80sI", b"aeroprint", n))
    a = v[f[:, 0]]
    b = v[f[:, 1]]
    c = v[f[:, 2]]
    normals = np.cross(b - a, c - a)
    lens = np.linalg.norm(normals, axis=1)
    lens[lens == 0] = 1.0
    normals /= lens[:, None]
    for i in range(n):
        buf += struct.pack(
            "<12fH",
            *normals[i].astype(np.float32),
            *a[i].astype(np.float32),
            *b[i].astype(np.float32),
            *c[i].astype(np.float32),
            0,
        )
    Path(path).write_bytes(bytes(buf))


def save_obj(path, mesh: TriangleMesh) -> None:
    """Write a Wavefront OBJ file (vertices + triangular faces)."""
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.12g} {y:.12g} {z:.12g}")
    for a, b, c in mesh.faces + 1:  # OBJ indices are 1-based
        lines.append(f"f {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")
