"""Triangle-mesh primitives and planar-cut geometry.

Everything here is plain numpy: vertices are float64 ``(n, 3)`` arrays, faces
are integer ``(m, 3)`` index triples wound counter-clockwise when seen from
outside the solid.  All lengths are metres, volumes cubic metres.

The one non-trivial algorithm is :func:`split_mesh`, which clips a watertight
mesh against a plane and closes both halves with triangulated caps (including
caps with holes, e.g. the square-frame cross-section of a hollow box).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Vertices closer than this to a cut plane are treated as lying on it.
SNAP_EPS = 1e-9
# Split outputs with |volume| below this are slivers.
VOLUME_EPS = 1e-9


class NonWatertightError(ValueError):
    """Mesh is not a closed, consistently oriented 2-manifold."""


class DegenerateCutError(ValueError):
    """A planar cut produced a sliver (non-empty output below VOLUME_EPS)."""


class InvalidAngleError(ValueError):
    """Polar sampling angle outside (0, pi/2]."""


# ---------------------------------------------------------------------------
# basic types


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


@dataclass(frozen=True)
class Plane:
    """Oriented plane through ``origin`` with unit ``normal``.

    Signed distance is positive on the side the normal points into.
    """

    origin: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(normal))
        if not np.isfinite(norm) or norm < 1e-12:
            raise ValueError("plane normal must be non-zero and finite")
        normal = normal / norm
        if not np.all(np.isfinite(origin)):
            raise ValueError("plane origin must be finite")
        origin.setflags(write=False)
        normal.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "normal", normal)

    def flipped(self) -> "Plane":
        return Plane(self.origin, -self.normal)

    def offset(self) -> float:
        """Distance of the plane from the coordinate origin along its normal."""
        return float(self.origin @ self.normal)


def signed_distance(plane: Plane, point) -> float:
    """Signed distance of a point from a plane (positive along the normal)."""
    p = np.asarray(point, dtype=np.float64).reshape(3)
    return float((p - plane.origin) @ plane.normal)


def _vertex_distances(plane: Plane, vertices: np.ndarray) -> np.ndarray:
    """Snapped signed distances of every vertex from the plane."""
    d = (vertices - plane.origin) @ plane.normal
    d[np.abs(d) < SNAP_EPS] = 0.0
    return d


class TriangleMesh:
    """Immutable indexed triangle mesh."""

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face indices out of range")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex coordinates")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f

    # -- queries ----------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if not len(self.vertices):
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def centroid(self) -> np.ndarray:
        """Vertex-mean centroid (used as the plane-family axis anchor)."""
        return self.vertices.mean(axis=0)

    def __repr__(self):
        return f"TriangleMesh({self.n_vertices} vertices, {self.n_faces} faces)"


EMPTY_MESH = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def translate(mesh: TriangleMesh, offset) -> TriangleMesh:
    off = np.asarray(offset, dtype=np.float64).reshape(3)
    return TriangleMesh(mesh.vertices + off, mesh.faces)


def scale(mesh: TriangleMesh, factor: float) -> TriangleMesh:
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    return TriangleMesh(mesh.vertices * float(factor), mesh.faces)


# ---------------------------------------------------------------------------
# volume / watertightness


def validate_watertight(mesh: TriangleMesh) -> None:
    """Raise NonWatertightError unless the mesh is a closed oriented manifold.

    Closed + consistently wound means every directed edge appears exactly once
    and its reverse appears exactly once (a flipped face breaks the second
    condition even though the undirected edge counts still look fine).
    """
    if mesh.is_empty:
        return
    f = mesh.faces
    if np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) or np.any(f[:, 2] == f[:, 0]):
        raise NonWatertightError("mesh contains a degenerate face (repeated index)")
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    seen = set()
    for a, b in edges:
        key = (int(a), int(b))
        if key in seen:
            raise NonWatertightError(f"directed edge {key} used more than once")
        seen.add(key)
    for a, b in seen:
        if (b, a) not in seen:
            raise NonWatertightError(f"boundary or inconsistently wound edge ({a}, {b})")


def _raw_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    """Signed volume from the divergence theorem (sum of signed tetrahedra)."""
    if not len(faces):
        return 0.0
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def mesh_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume of a watertight mesh.

    Raises NonWatertightError for open or inconsistently oriented meshes.
    """
    validate_watertight(mesh)
    return _raw_volume(mesh.vertices, mesh.faces)


def face_normals(mesh: TriangleMesh) -> np.ndarray:
    v = mesh.vertices
    f = mesh.faces
    n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    lengths = np.linalg.norm(n, axis=1)
    lengths[lengths == 0] = 1.0
    return n / lengths[:, None]


# ---------------------------------------------------------------------------
# primitive builders (used by tests and the CLI demo scenario)


_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],   # bottom (-z)
        [4, 5, 6], [4, 6, 7],   # top (+z)
        [0, 1, 5], [0, 5, 4],   # -y
        [1, 2, 6], [1, 6, 5],   # +x
        [2, 3, 7], [2, 7, 6],   # +y
        [3, 0, 4], [3, 4, 7],   # -x
    ],
    dtype=np.int64,
)


def make_box(extents=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned solid box with min corner at ``origin``."""
    ex, ey, ez = (float(e) for e in extents)
    ox, oy, oz = (float(o) for o in origin)
    corners = np.array(
        [
            [ox, oy, oz], [ox + ex, oy, oz], [ox + ex, oy + ey, oz], [ox, oy + ey, oz],
            [ox, oy, oz + ez], [ox + ex, oy, oz + ez],
            [ox + ex, oy + ey, oz + ez], [ox, oy + ey, oz + ez],
        ]
    )
    return TriangleMesh(corners, _BOX_FACES)


def make_hollow_box(outer=(2.0, 2.0), height=0.5, wall=0.1) -> TriangleMesh:
    """Rectangular wall structure: outer footprint minus the inner cavity.

    Centred on the origin in x/y, base at z=0.  With the defaults the solid
    volume is (2*2 - 1.8*1.8) * 0.5 = 0.38.
    """
    hx, hy = outer[0] / 2.0, outer[1] / 2.0
    if wall <= 0 or wall >= min(hx, hy):
        raise ValueError("wall thickness must be in (0, min(outer)/2)")
    ix, iy = hx - wall, hy - wall
    ring_o = [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)]
    ring_i = [(-ix, -iy), (ix, -iy), (ix, iy), (-ix, iy)]
    verts = []
    for z in (0.0, float(height)):
        verts += [(x, y, z) for x, y in ring_o]
        verts += [(x, y, z) for x, y in ring_i]
    # index helpers: bottom outer 0-3, bottom inner 4-7, top outer 8-11, top inner 12-15
    OB, IB, OT, IT = 0, 4, 8, 12
    faces = []
    for i in range(4):
        j = (i + 1) % 4
        # outer wall, outward normal away from the centre
        faces += [(OB + i, OB + j, OT + j), (OB + i, OT + j, OT + i)]
        # inner wall, outward normal into the cavity
        faces += [(IB + j, IB + i, IT + i), (IB + j, IT + i, IT + j)]
        # bottom frame (-z) and top frame (+z)
        faces += [(OB + i, IB + i, IB + j), (OB + i, IB + j, OB + j)]
        faces += [(OT + i, IT + j, IT + i), (OT + i, OT + j, IT + j)]
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64))


# ---------------------------------------------------------------------------
# plane sampling


def sample_normals(phi_max: float, n_polar: int = 2, n_azimuth: int = 8) -> list[np.ndarray]:
    """Candidate cut normals: straight up plus rings of tilted directions.

    Ring k (k = 1..n_polar) sits at polar angle k*phi_max/n_polar with
    n_azimuth evenly spaced azimuths.  phi_max must lie in (0, pi/2].
    """
    if not (0.0 < phi_max <= math.pi / 2 + 1e-12):
        raise InvalidAngleError(f"phi_max must be in (0, pi/2], got {phi_max}")
    if n_polar < 1 or n_azimuth < 1:
        raise ValueError("n_polar and n_azimuth must be >= 1")
    normals = [vec3(0.0, 0.0, 1.0)]
    for k in range(1, n_polar + 1):
        polar = k * phi_max / n_polar
        sp, cp = math.sin(polar), math.cos(polar)
        for m in range(n_azimuth):
            az = 2.0 * math.pi * m / n_azimuth
            normals.append(vec3(sp * math.cos(az), sp * math.sin(az), cp))
    return normals


def plane_family(normal, mesh: TriangleMesh, delta: float) -> list[Plane]:
    """Planes perpendicular to ``normal`` spaced ``delta`` apart, interior only.

    Offsets run d_min + k*delta for k >= 1, strictly below d_max, so the
    extreme support planes (which would produce empty cuts) are excluded.
    Origins sit on the normal axis through the mesh centroid.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    n = n / np.linalg.norm(n)
    if mesh.is_empty:
        return []
    d = mesh.vertices @ n
    d_min, d_max = float(d.min()), float(d.max())
    c = mesh.centroid()
    c_proj = float(c @ n)
    planes = []
    k = 1
    # keep a hair away from the far support plane to avoid an empty cut
    while d_min + k * delta < d_max - SNAP_EPS:
        off = d_min + k * delta
        planes.append(Plane(c + (off - c_proj) * n, n))
        k += 1
    return planes


# ---------------------------------------------------------------------------
# planar split with caps


def split_mesh(mesh: TriangleMesh, plane: Plane) -> tuple[TriangleMesh, TriangleMesh]:
    """Split a watertight mesh by a plane into (negative, positive) halves.

    Both outputs are watertight: the open cross-section of each half is closed
    with a triangulated cap lying exactly on the plane.  A side the plane does
    not reach comes back as an empty mesh.  Raises DegenerateCutError when a
    non-empty output is a sliver (volume < VOLUME_EPS).
    """
    d = _vertex_distances(plane, mesh.vertices)
    negative = _clip_half(mesh, plane, d)
    positive = _clip_half(mesh, plane.flipped(), -d)
    for part in (negative, positive):
        if not part.is_empty and abs(_raw_volume(part.vertices, part.faces)) < VOLUME_EPS:
            raise DegenerateCutError("planar cut produced a sliver")
    return negative, positive


def cross_section(mesh: TriangleMesh, plane: Plane) -> list[np.ndarray]:
    """Closed intersection loops of the mesh surface with a plane.

    Returns a list of (k, 3) arrays; consecutive points are loop edges, the
    last point connects back to the first.
    """
    d = _vertex_distances(plane, mesh.vertices)
    pool, _, loops = _clip_faces(mesh, plane, d)
    out = []
    for loop in loops:
        out.append(np.array([pool[i] for i in loop]))
    return out


def _clip_half(mesh: TriangleMesh, plane: Plane, d: np.ndarray) -> TriangleMesh:
    """Keep the sub-volume where d <= 0 and cap the cut."""
    pool, faces, loops = _clip_faces(mesh, plane, d)
    if not faces and not loops:
        return EMPTY_MESH
    if loops:
        pts = np.array(pool)
        faces = faces + _triangulate_caps(pts, loops, plane.normal)
    return TriangleMesh(np.array(pool), np.array(faces, dtype=np.int64))


def _clip_faces(mesh: TriangleMesh, plane: Plane, d: np.ndarray):
    """Clip faces against d <= 0; return (vertex pool, faces, boundary loops).

    Intersection points are keyed by the undirected parent edge so both
    halves of a split (and every face sharing the edge) get bit-identical
    coordinates - this is what keeps the outputs watertight and volumes
    conserved.
    """
    verts = mesh.vertices
    fd = d[mesh.faces]
    any_neg = (fd < 0).any(axis=1)
    any_pos = (fd > 0).any(axis=1)

    pool: list[np.ndarray] = []
    vmap: dict[int, int] = {}
    emap: dict[tuple[int, int], int] = {}

    def old_vertex(i: int) -> int:
        j = vmap.get(i)
        if j is None:
            j = len(pool)
            pool.append(verts[i])
            vmap[i] = j
        return j

    def edge_vertex(i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        k = emap.get(key)
        if k is None:
            a, b = key
            t = d[a] / (d[a] - d[b])
            p = verts[a] + t * (verts[b] - verts[a])
            k = len(pool)
            pool.append(p)
            emap[key] = k
        return k

    out_faces: list[tuple[int, int, int]] = []
    for fi, face in enumerate(mesh.faces):
        if not any_pos[fi]:
            if not any_neg[fi]:
                # face lies in the plane: keep it when it is the ceiling of
                # the material below (outward normal along +n)
                a, b, c = (verts[i] for i in face)
                if np.cross(b - a, c - a) @ plane.normal > 0:
                    out_faces.append(tuple(old_vertex(int(i)) for i in face))
                continue
            out_faces.append(tuple(old_vertex(int(i)) for i in face))
            continue
        if not any_neg[fi]:
            continue  # entirely on the discarded side
        # crossing face: Sutherland-Hodgman against the half-space d <= 0
        poly: list[int] = []
        ids = [int(i) for i in face]
        for k in range(3):
            a, b = ids[k], ids[(k + 1) % 3]
            if d[a] <= 0:
                poly.append(old_vertex(a))
            if (d[a] < 0 < d[b]) or (d[b] < 0 < d[a]):
                poly.append(edge_vertex(a, b))
        if len(poly) < 3:
            continue
        for k in range(1, len(poly) - 1):
            out_faces.append((poly[0], poly[k], poly[k + 1]))

    loops = _boundary_loops(out_faces)
    return pool, out_faces, loops


def _boundary_loops(faces: list[tuple[int, int, int]]) -> list[list[int]]:
    """Closed loops of directed edges used exactly once (the open cut rim)."""
    count: dict[tuple[int, int], int] = {}
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            key = (e[0], e[1]) if e[0] < e[1] else (e[1], e[0])
            count[key] = count.get(key, 0) + 1
    succ: dict[int, list[int]] = {}
    n_boundary = 0
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            key = (e[0], e[1]) if e[0] < e[1] else (e[1], e[0])
            if count[key] == 1:
                succ.setdefault(e[0], []).append(e[1])
                n_boundary += 1
    loops = []
    used = 0
    for start in sorted(succ):
        while succ.get(start):
            loop = [start]
            cur = succ[start].pop()
            used += 1
            while cur != start:
                loop.append(cur)
                nxt = succ.get(cur)
                if not nxt:
                    raise DegenerateCutError("open boundary chain in planar cut")
                cur = nxt.pop()
                used += 1
            if len(loop) >= 3:
                loops.append(loop)
    if used != n_boundary:
        raise DegenerateCutError("boundary edges left over after loop chaining")
    return loops


# -- cap triangulation -------------------------------------------------------


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed in-plane basis (u, v) with u x v = normal."""
    n = normal
    axis = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[axis] = 1.0
    u = np.cross(e, n)
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


def _ring_area(pts: np.ndarray, ring: list[int]) -> float:
    """Signed shoelace area (positive = counter-clockwise)."""
    x = pts[ring, 0]
    y = pts[ring, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _point_in_ring(pts: np.ndarray, ring: list[int], p: np.ndarray) -> bool:
    """Even-odd crossing test."""
    inside = False
    px, py = p
    for k in range(len(ring)):
        ax, ay = pts[ring[k]]
        bx, by = pts[ring[(k + 1) % len(ring)]]
        if (ay <= py) != (by <= py):
            x = ax + (py - ay) * (bx - ax) / (by - ay)
            if x > px:
                inside = not inside
    return inside


def _triangulate_caps(points: np.ndarray, loops: list[list[int]], normal: np.ndarray):
    """Triangulate the planar region bounded by the cut loops.

    Loops are grouped into outer rings and their holes by containment depth,
    holes are bridged into their parent ring, and each resulting simple
    polygon is ear-clipped.  Output triangles are wound so their normal points
    along +normal (outward for the d <= 0 half).
    """
    u, v = _plane_basis(normal)
    pts2 = np.column_stack([points @ u, points @ v])

    depth = []
    for i, loop in enumerate(loops):
        probe = pts2[loop[0]]
        depth.append(sum(1 for j, other in enumerate(loops) if j != i and _point_in_ring(pts2, other, probe)))

    outers = [i for i, dep in enumerate(depth) if dep % 2 == 0]
    tris: list[tuple[int, int, int]] = []
    for oi in outers:
        outer = list(loops[oi])
        if _ring_area(pts2, outer) < 0:
            outer.reverse()
        holes = []
        for hi, dep in enumerate(depth):
            if dep % 2 == 1 and dep == depth[oi] + 1 and _point_in_ring(pts2, loops[oi], pts2[loops[hi][0]]):
                hole = list(loops[hi])
                if _ring_area(pts2, hole) > 0:
                    hole.reverse()
                holes.append(hole)
        ring = outer
        # bridge holes right-to-left so bridges cannot cross each other
        for hole in sorted(holes, key=lambda h: -pts2[h, 0].max()):
            ring = _bridge_hole(pts2, ring, hole)
        tris.extend(_ear_clip(pts2, ring))
    return tris


def _bridge_hole(pts2: np.ndarray, outer: list[int], hole: list[int]) -> list[int]:
    """Join a hole ring into the outer ring with a zero-width bridge."""
    hx = pts2[hole, 0]
    mi = int(np.lexsort((pts2[hole, 1], -hx))[0])  # max x, ties by min y
    m = pts2[hole[mi]]

    # closest strict +x crossing of the outer ring with the ray from m
    best_t = math.inf
    best_edge = -1
    n = len(outer)
    for k in range(n):
        a = pts2[outer[k]]
        b = pts2[outer[(k + 1) % n]]
        if (a[1] <= m[1]) == (b[1] <= m[1]):
            continue
        x = a[0] + (m[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        if x >= m[0] - 1e-15 and x - m[0] < best_t:
            best_t = x - m[0]
            best_edge = k
    if best_edge < 0:
        raise DegenerateCutError("hole bridge: no visible outer edge")

    a_idx, b_idx = best_edge, (best_edge + 1) % n
    # candidate connection vertex: the struck edge endpoint lying right of m
    cand = a_idx if pts2[outer[a_idx], 0] > pts2[outer[b_idx], 0] else b_idx
    inter = np.array([m[0] + best_t, m[1]])
    # any reflex outer vertex inside triangle (m, inter, cand) is a better,
    # closer connection (classic visibility fix-up)
    best = cand
    best_metric = None
    tri = (m, inter, pts2[outer[cand]])
    for k in range(n):
        if k == cand:
            continue
        p = pts2[outer[k]]
        if _point_in_triangle(p, *tri):
            metric = (abs(p[1] - m[1]), np.hypot(*(p - m)))
            if best_metric is None or metric < best_metric:
                best = k
                best_metric = metric
    k = best
    return outer[: k + 1] + hole[mi:] + hole[: mi + 1] + outer[k:]


def _point_in_triangle(p, a, b, c, eps=1e-12) -> bool:
    d1 = (p[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (p[1] - b[1])
    d2 = (p[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (p[1] - c[1])
    d3 = (p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])
    has_neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
    has_pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
    return not (has_neg and has_pos)


def _ear_clip(pts2: np.ndarray, ring: list[int]) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a (weakly) simple CCW polygon.

    Collinear vertices are common here (cut rims pass through mid-edge mesh
    vertices), so flat corners are never clipped directly; they become convex
    once a neighbouring ear is removed.  Clipping only strictly convex ears
    also guarantees the cap contains no zero-area triangles, which would make
    the kept-side test ambiguous if the same plane is ever cut again.
    """
    idx = list(ring)
    span = pts2[ring].max(axis=0) - pts2[ring].min(axis=0)
    area_eps = 1e-12 * max(float(span @ span), 1e-30)
    dist_eps = 1e-9 * max(float(np.hypot(*span)), 1e-15)
    tris: list[tuple[int, int, int]] = []

    def is_ear(k: int) -> bool:
        a = pts2[idx[k - 1]]
        b = pts2[idx[k]]
        c = pts2[idx[(k + 1) % len(idx)]]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross <= area_eps:
            return False
        ids = {idx[k - 1], idx[k], idx[(k + 1) % len(idx)]}
        for j in idx:
            if j in ids:
                continue
            p = pts2[j]
            if _point_in_triangle_strict(p, a, b, c, area_eps):
                return False
            # a vertex sitting exactly on the chord a-c would end up on a
            # triangle edge, leaving a flat remainder polygon behind
            if _on_open_segment(p, a, c, dist_eps):
                return False
        return True

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10000:
            raise DegenerateCutError("ear clipping did not terminate")
        for k in range(len(idx)):
            if is_ear(k):
                tris.append((idx[k - 1], idx[k], idx[(k + 1) % len(idx)]))
                del idx[k]
                break
        else:
            raise DegenerateCutError("cap triangulation failed (no ear found)")
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def _on_open_segment(p, a, c, dist_eps) -> bool:
    ac = c - a
    length2 = float(ac @ ac)
    if length2 <= dist_eps * dist_eps:
        return False
    cross = ac[0] * (p[1] - a[1]) - ac[1] * (p[0] - a[0])
    if abs(cross) > dist_eps * math.sqrt(length2):
        return False
    t = float((p - a) @ ac) / length2
    return 1e-9 < t < 1.0 - 1e-9


def _point_in_triangle_strict(p, a, b, c, area_eps) -> bool:
    d1 = (p[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (p[1] - b[1])
    d2 = (p[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (p[1] - c[1])
    d3 = (p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])
    eps = math.sqrt(max(area_eps, 0.0)) * 1e-3 + 1e-15
    return (d1 > eps and d2 > eps and d3 > eps) or (d1 < -eps and d2 < -eps and d3 < -eps)
