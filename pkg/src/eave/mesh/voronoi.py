"""Voronoi tessellations of the unit square.

Cells are clipped by reflecting every seed across the four sides: in the
Voronoi diagram of the seeds plus their mirror images, the cell of an
original seed is exactly its Voronoi cell intersected with the square.
Each vertex of such a cell is the circumcenter of a Delaunay triangle of
the reflected point set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

from .polymesh import MeshError, PolygonalMesh

__all__ = [
    "circumcenters",
    "triangle_angles",
    "mirrored_delaunay",
    "lloyd",
    "cell_area_cv",
    "VoronoiResult",
    "clipped_voronoi",
]

SNAP_TOL = 1e-12
MERGE_TOL = 1e-12


def circumcenters(pts, tris) -> np.ndarray:
    a = pts[tris[:, 0]]
    b = pts[tris[:, 1]] - a
    c = pts[tris[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    b2 = (b * b).sum(1)
    c2 = (c * c).sum(1)
    ux = (c[:, 1] * b2 - b[:, 1] * c2) / d
    uy = (b[:, 0] * c2 - c[:, 0] * b2) / d
    return a + np.stack([ux, uy], axis=1)


def triangle_angles(pts, tris) -> np.ndarray:
    """Interior angles, ``(T, 3)``; column ``k`` is the angle at vertex ``k``."""
    p = pts[tris]
    out = np.empty((len(tris), 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        out[:, k] = np.arctan2(cross, (u * v).sum(1))
    return out


def _reflect(seeds) -> np.ndarray:
    x, y = seeds[:, 0], seeds[:, 1]
    return np.concatenate(
        [
            seeds,
            np.stack([-x, y], 1),
            np.stack([2.0 - x, y], 1),
            np.stack([x, -y], 1),
            np.stack([x, 2.0 - y], 1),
        ]
    )


def mirrored_delaunay(seeds):
    """Delaunay triangles of seeds plus reflections, and their circumcenters."""
    seeds = np.asarray(seeds, dtype=float)
    if len(seeds) < 1:
        raise MeshError("need at least one seed")
    if np.any((seeds <= 0.0) | (seeds >= 1.0)):
        raise MeshError("seeds must lie strictly inside the unit square")
    pts = _reflect(seeds)
    tris = Delaunay(pts).simplices.astype(np.int64)
    cc = circumcenters(pts, tris)
    return pts, tris, cc


def _fans(n, tris, cc, seeds):
    """For every seed, incident triangles sorted counterclockwise."""
    t_id = np.repeat(np.arange(len(tris)), 3)
    v_id = tris.ravel()
    keep = v_id < n
    t_id, v_id = t_id[keep], v_id[keep]
    d = cc[t_id] - seeds[v_id]
    ang = np.arctan2(d[:, 1], d[:, 0])
    order = np.lexsort((ang, v_id))
    t_id, v_id = t_id[order], v_id[order]
    counts = np.bincount(v_id, minlength=n)
    ptr = np.concatenate([[0], np.cumsum(counts)])
    return t_id, ptr


def _fan_centroids_areas(seeds, cc, t_id, ptr):
    n = len(seeds)
    nxt = np.arange(len(t_id)) + 1
    nxt[ptr[1:] - 1] = ptr[:-1]
    owner = np.repeat(np.arange(n), np.diff(ptr))
    p = seeds[owner]
    a = cc[t_id] - p
    b = cc[t_id[nxt]] - p
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    area = 0.5 * np.bincount(owner, cross, minlength=n)
    mx = np.bincount(owner, cross * (a[:, 0] + b[:, 0]), minlength=n) / 6.0
    my = np.bincount(owner, cross * (a[:, 1] + b[:, 1]), minlength=n) / 6.0
    cen = seeds + np.stack([mx, my], 1) / area[:, None]
    return cen, area


def lloyd(seeds, iters: int, history: list | None = None) -> np.ndarray:
    """Move each seed to the centroid of its clipped cell, ``iters`` times.

    If ``history`` is a list, the cell-area coefficient of variation before
    each step and after the last one is appended to it.
    """
    P = np.array(seeds, dtype=float)
    n = len(P)
    for it in range(iters + 1):
        pts, tris, cc = mirrored_delaunay(P)
        t_id, ptr = _fans(n, tris, cc, P)
        cen, area = _fan_centroids_areas(P, cc, t_id, ptr)
        if history is not None:
            history.append(float(area.std() / area.mean()))
        if it == iters:
            break
        P = np.clip(cen, 1e-12, 1.0 - 1e-12)
    return P


def cell_area_cv(seeds) -> float:
    hist: list = []
    lloyd(seeds, 0, hist)
    return hist[0]


@dataclass
class VoronoiResult:
    mesh: PolygonalMesh
    seeds: np.ndarray
    triangles: np.ndarray  # interior Delaunay triangles over seed indices
    triangle_vertex: np.ndarray  # primary vertex at each triangle's circumcenter


def clipped_voronoi(seeds) -> VoronoiResult:
    """Voronoi mesh of ``seeds`` clipped to the unit square.

    Cell ``k`` belongs to seed ``k``.  Also returns the Delaunay triangles
    whose three vertices are seeds; their circumcenters are exactly the
    interior Voronoi vertices.
    """
    seeds = np.array(seeds, dtype=float)
    n = len(seeds)
    pts, tris, cc = mirrored_delaunay(seeds)
    t_id, ptr = _fans(n, tris, cc, seeds)

    used = np.unique(t_id)
    xy = cc[used].copy()
    for side in (0.0, 1.0):
        xy[np.abs(xy - side) < SNAP_TOL] = side
    if np.any((xy < 0.0) | (xy > 1.0)):
        raise MeshError("Voronoi vertex outside the square")

    # merge coincident circumcenters from cocircular seed configurations
    pairs = cKDTree(xy).query_pairs(MERGE_TOL, output_type="ndarray")
    m = len(xy)
    if len(pairs):
        g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
        _, label = connected_components(g, directed=False)
    else:
        label = np.arange(m)
    rep = np.full(label.max() + 1, -1)
    for i in range(m):
        if rep[label[i]] < 0:
            rep[label[i]] = i
    tri_to_local = np.full(len(tris), -1)
    tri_to_local[used] = np.arange(m)

    vid_of_label = np.full(len(rep), -1)
    verts: list = []
    cells = []
    for k in range(n):
        ring = label[tri_to_local[t_id[ptr[k] : ptr[k + 1]]]]
        keep = ring != np.roll(ring, 1)
        ring = ring[keep] if keep.any() else ring[:1]
        if len(ring) < 3:
            raise MeshError(f"degenerate Voronoi cell for seed {k}")
        cell = []
        for lab in ring:
            if vid_of_label[lab] < 0:
                vid_of_label[lab] = len(verts)
                verts.append(xy[rep[lab]])
            cell.append(vid_of_label[lab])
        cells.append(cell)
    mesh = PolygonalMesh(np.array(verts), cells)

    inner = np.all(tris < n, axis=1)
    inside = np.all((cc > SNAP_TOL) & (cc < 1.0 - SNAP_TOL), axis=1)
    sel = np.flatnonzero(inner & inside)
    tri_vertex = vid_of_label[label[tri_to_local[sel]]]
    return VoronoiResult(mesh=mesh, seeds=seeds, triangles=tris[sel], triangle_vertex=tri_vertex)
