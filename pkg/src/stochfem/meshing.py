"""Polyhedral computational domains.

Icosphere triangulations of S^2 (edge-midpoint subdivision with radial
re-projection), hexagon-fan triangulations of the unit disk whose boundary
polygon inscribes S^1, and the piecewise lift from the discrete disk onto
the curved one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutsideTriangle

MAX_ICOSPHERE_LEVEL = 8
MAX_DISK_LEVEL = 9


@dataclass(frozen=True)
class SurfaceMesh:
    """Closed triangulated surface with all vertices on |x| = 1."""

    vertices: np.ndarray        # (nv, 3)
    triangles: np.ndarray       # (nt, 3) int, outward-oriented
    facet_normals: np.ndarray = field(default=None)  # (nt, 3), outward
    h_max: float = 0.0

    @staticmethod
    def from_arrays(vertices, triangles) -> "SurfaceMesh":
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        v0 = vertices[triangles[:, 0]]
        e1 = vertices[triangles[:, 1]] - v0
        e2 = vertices[triangles[:, 2]] - v0
        n = np.cross(e1, e2)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        # orient outward (centroid direction)
        cent = (v0 + vertices[triangles[:, 1]] + vertices[triangles[:, 2]]) / 3.0
        flip = np.sum(n * cent, axis=1) < 0.0
        triangles = triangles.copy()
        triangles[flip, 1], triangles[flip, 2] = triangles[flip, 2], triangles[flip, 1]
        n[flip] *= -1.0
        return SurfaceMesh(vertices, triangles, n, _max_edge(vertices, triangles))

    @property
    def facet_areas(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(
            np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1
        )


@dataclass(frozen=True)
class BulkMesh:
    """Triangulated polygonal disk; boundary vertices lie on |x| = 1."""

    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) int, CCW
    boundary_edges: np.ndarray    # (ne, 2) int, CCW ordered loop
    boundary_vertex_flags: np.ndarray   # (nv,) bool
    is_boundary_simplex: np.ndarray     # (nt,) bool: >= 2 vertices on S^1
    h_max: float = 0.0

    @property
    def facet_areas(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        d1, d2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _max_edge(vertices, triangles) -> float:
    v = vertices[triangles]
    e = np.stack(
        [v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1
    )
    return float(np.linalg.norm(e, axis=2).max())


def _min_edge(vertices, triangles) -> float:
    v = vertices[triangles]
    e = np.stack(
        [v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1
    )
    return float(np.linalg.norm(e, axis=2).min())


def mesh_size(mesh) -> float:
    """Maximum Euclidean edge length of the mesh."""
    return _max_edge(mesh.vertices, mesh.triangles)


def quasi_uniformity_ratio(mesh) -> float:
    return _max_edge(mesh.vertices, mesh.triangles) / _min_edge(
        mesh.vertices, mesh.triangles
    )


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    tris = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    return verts, tris


def _subdivide(vertices, triangles, project_midpoint):
    """One round of 4-way edge-midpoint subdivision.

    project_midpoint(i, j, mid) may move the new midpoint (e.g. radial
    re-projection); it receives the endpoint indices so boundary edges can
    be treated differently from interior ones.
    """
    verts = list(map(tuple, vertices))
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            mid = 0.5 * (np.asarray(verts[i]) + np.asarray(verts[j]))
            mid = project_midpoint(i, j, mid)
            cache[key] = len(verts)
            verts.append(tuple(mid))
        return cache[key]

    new_tris = []
    for a, b, c in triangles:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(verts, dtype=float), np.array(new_tris, dtype=np.int64)


def build_icosphere(level: int) -> SurfaceMesh:
    """Icosahedron refined `level` times with radial re-projection.

    Produces 20 * 4^level triangles and 10 * 4^level + 2 vertices, all on
    the unit sphere.
    """
    if not 0 <= level <= MAX_ICOSPHERE_LEVEL:
        raise ValueError(f"icosphere level must be in [0, {MAX_ICOSPHERE_LEVEL}]")
    verts, tris = _icosahedron()
    for _ in range(level):
        verts, tris = _subdivide(
            verts, tris, lambda i, j, m: m / np.linalg.norm(m)
        )
    return SurfaceMesh.from_arrays(verts, tris)


def build_disk_mesh(level: int) -> BulkMesh:
    """Hexagon fan around the origin, refined `level` times.

    Midpoints of boundary edges are radially projected onto the unit circle;
    all other midpoints stay put.  By construction no triangle ever acquires
    three boundary vertices.
    """
    if not 0 <= level <= MAX_DISK_LEVEL:
        raise ValueError(f"disk mesh level must be in [0, {MAX_DISK_LEVEL}]")
    ang = np.arange(6) * np.pi / 3.0
    verts = np.vstack([[0.0, 0.0], np.stack([np.cos(ang), np.sin(ang)], axis=1)])
    tris = np.array([(0, 1 + i, 1 + (i + 1) % 6) for i in range(6)], dtype=np.int64)
    on_bnd = {1, 2, 3, 4, 5, 6}
    for _ in range(level):
        bnd = set(on_bnd)

        def project(i, j, mid, bnd=bnd):
            if i in bnd and j in bnd:
                # midpoints of interior chords between two boundary vertices
                # never occur: no triangle has 3 boundary vertices, so a
                # boundary-boundary edge is always a boundary edge
                return mid / np.linalg.norm(mid)
            return mid

        nv_before = len(verts)
        verts, tris = _subdivide(verts, tris, project)
        on_bnd = bnd | {
            k
            for k in range(nv_before, len(verts))
            if abs(np.linalg.norm(verts[k]) - 1.0) < 1e-12
        }

    flags = np.zeros(len(verts), dtype=bool)
    flags[list(on_bnd)] = True
    # CCW boundary loop: sort boundary vertices by angle
    bidx = np.flatnonzero(flags)
    order = bidx[np.argsort(np.arctan2(verts[bidx, 1], verts[bidx, 0]))]
    edges = np.stack([order, np.roll(order, -1)], axis=1)

    nb = flags[tris].sum(axis=1)
    if np.any(nb > 2):
        raise AssertionError("construction produced a triangle with 3 boundary vertices")

    # enforce CCW orientation
    v = verts[tris]
    d1, d2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    cw = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0.0
    tris[cw, 1], tris[cw, 2] = tris[cw, 2], tris[cw, 1]

    return BulkMesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=edges,
        boundary_vertex_flags=flags,
        is_boundary_simplex=nb >= 2,
        h_max=_max_edge(verts, tris),
    )


def _boundary_local_roles(mesh: BulkMesh, t: int):
    """(opposite vertex, edge vertex 1, edge vertex 2) of a boundary triangle."""
    tri = mesh.triangles[t]
    on = mesh.boundary_vertex_flags[tri]
    (off_pos,) = np.flatnonzero(~on)
    order = [off_pos, (off_pos + 1) % 3, (off_pos + 2) % 3]
    return tri[order[0]], tri[order[1]], tri[order[2]]


def bulk_lift_barycentric(lam, v0, v1, v2):
    """Lift of the point with barycentric coords lam in triangle (v0, v1, v2).

    v1, v2 are the boundary-edge vertices (on S^1), v0 the opposite vertex.
    Linear blend: identity on the straight edges, chord-to-arc on the
    boundary edge.  Vectorised over leading axes of lam.
    """
    lam = np.asarray(lam, dtype=float)
    x = lam[..., 0:1] * v0 + lam[..., 1:2] * v1 + lam[..., 2:3] * v2
    s = lam[..., 1] + lam[..., 2]
    safe = np.maximum(s, 1e-12)[..., None]
    pe = (lam[..., 1:2] * v1 + lam[..., 2:3] * v2) / safe
    r = np.maximum(np.linalg.norm(pe, axis=-1, keepdims=True), 1e-300)
    lifted = x + (s[..., None]) * (pe / r - pe)
    return np.where(s[..., None] < 1e-12, x, lifted)


def bulk_lift(mesh: BulkMesh, t: int, x) -> np.ndarray:
    """Map a point of boundary triangle t onto the curved unit disk."""
    if not mesh.is_boundary_simplex[t]:
        return np.asarray(x, dtype=float)
    i0, i1, i2 = _boundary_local_roles(mesh, t)
    v0, v1, v2 = mesh.vertices[i0], mesh.vertices[i1], mesh.vertices[i2]
    x = np.asarray(x, dtype=float)
    mat = np.column_stack([v1 - v0, v2 - v0])
    l12 = np.linalg.solve(mat, x - v0)
    lam = np.array([1.0 - l12.sum(), l12[0], l12[1]])
    if lam.min() < -1e-10:
        raise OutsideTriangle(f"barycentric coordinates {lam} outside triangle {t}")
    return bulk_lift_barycentric(lam, v0, v1, v2)
