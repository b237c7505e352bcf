"""Structured and random mesh families on the unit square."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .polymesh import PolygonalMesh
from .voronoi import clipped_voronoi, lloyd

__all__ = [
    "TRIANGLE_KINDS",
    "NCVX_DENT",
    "generate_triangle_mesh",
    "generate_voronoi",
    "generate_ncvx",
    "ncvx_y_lines",
]

TRIANGLE_KINDS = ("uniform-right", "equilateral", "perturbed")
# interior vertex displacement of the perturbed kind, in units of the spacing
PERTURB_AMPLITUDE = 0.2
# depth of the dent in an ncvx macro cell, as a fraction of the cell size
NCVX_DENT = 0.25


def _uniform_right(n):
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g)
    verts = np.stack([X.ravel(), Y.ravel()], 1)
    vid = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # vid[row, col]
    tris = []
    for r in range(n):
        for c in range(n):
            a, b = vid[r, c], vid[r, c + 1]
            d, e = vid[r + 1, c], vid[r + 1, c + 1]
            tris.append((a, b, e))
            tris.append((a, e, d))
    return verts, tris


def _zip_rows(lower, upper, xl, xu):
    """Triangulate the strip between two rows of vertices sorted by x."""
    tris = []
    i = j = 0
    while i < len(lower) - 1 or j < len(upper) - 1:
        if j == len(upper) - 1 or (i < len(lower) - 1 and xl[i + 1] <= xu[j + 1]):
            tris.append((lower[i], lower[i + 1], upper[j]))
            i += 1
        else:
            tris.append((lower[i], upper[j + 1], upper[j]))
            j += 1
    return tris


def _equilateral(n):
    m = max(1, int(round(2 * n / np.sqrt(3.0))))
    verts = []
    rows = []
    for k in range(m + 1):
        if k % 2 == 0:
            xs = np.arange(n + 1) / n
        else:
            xs = np.concatenate([[0.0], (np.arange(n) + 0.5) / n, [1.0]])
        ids = list(range(len(verts), len(verts) + len(xs)))
        verts.extend((x, k / m) for x in xs)
        rows.append((ids, xs))
    tris = []
    for k in range(m):
        (lo, xl), (up, xu) = rows[k], rows[k + 1]
        tris.extend(_zip_rows(lo, up, xl, xu))
    return np.array(verts), tris


def _perturbed(n, seed):
    verts, _ = _uniform_right(n)
    verts = verts.copy()
    inner = np.all((verts > 0.0) & (verts < 1.0), axis=1)
    rng = np.random.default_rng(seed)
    verts[inner] += rng.uniform(-PERTURB_AMPLITUDE, PERTURB_AMPLITUDE, (inner.sum(), 2)) / n
    tris = Delaunay(verts).simplices
    p = verts[tris]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    # flat hull triangles along the collinear boundary points carry no area
    return verts, [tuple(t) for t in tris[np.abs(area2) > 1e-14]]


def generate_triangle_mesh(n: int, kind: str = "uniform-right", seed: int = 0) -> PolygonalMesh:
    """Triangulation of the unit square with spacing ``1/n``.

    ``uniform-right`` splits every grid square along its ``/`` diagonal.
    ``equilateral`` stacks rows ``y = k/m`` with ``m = round(2n/sqrt(3))``;
    odd rows are shifted by half a spacing, so interior triangles are
    near-equilateral and only triangles touching the left or right side
    have a right angle.  ``perturbed`` moves the interior grid points by up
    to ``PERTURB_AMPLITUDE / n`` per coordinate (seeded) and takes their
    Delaunay triangulation: a generic unstructured mesh without grid lines
    aligned to the flow.
    """
    if n < 1:
        raise ValueError("triangle mesh needs n >= 1")
    if kind == "uniform-right":
        verts, tris = _uniform_right(n)
    elif kind == "equilateral":
        verts, tris = _equilateral(n)
    elif kind == "perturbed":
        verts, tris = _perturbed(n, seed)
    else:
        raise ValueError(f"unknown triangle mesh kind {kind!r}; choose from {TRIANGLE_KINDS}")
    verts = np.asarray(verts, dtype=float)
    out = []
    for t in tris:
        p = verts[list(t)]
        cross = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
        out.append(t if cross > 0 else (t[0], t[2], t[1]))
    return PolygonalMesh(verts, out)


def generate_voronoi(n: int, lloyd_iters: int = 0, seed: int = 0, *, return_seeds: bool = False):
    """Voronoi mesh of ``n`` uniform random seeds after ``lloyd_iters`` Lloyd steps."""
    if n < 1:
        raise ValueError("need at least one seed")
    if lloyd_iters < 0:
        raise ValueError("lloyd_iters must be nonnegative")
    rng = np.random.default_rng(seed)
    P = lloyd(rng.uniform(size=(n, 2)), lloyd_iters)
    vr = clipped_voronoi(P)
    if return_seeds:
        return vr.mesh, vr.seeds
    return vr.mesh


def ncvx_y_lines(n: int) -> np.ndarray:
    """All y-coordinates used by :func:`generate_ncvx`: ``k / (2n)``."""
    return np.arange(2 * n + 1) / (2 * n)


def generate_ncvx(n: int, dent: float = NCVX_DENT) -> PolygonalMesh:
    """Non-convex structured mesh on an ``n x n`` macro grid.

    Each macro cell ``[x, x+h] x [y, y+h]`` holds one octagon

        (x, y), (x+h/2, y), (x+h, y), (x+h-dent*h, y+h/2), (x+h, y+h),
        (x+h/2, y+h), (x, y+h), (x, y+h/2)

    whose right-edge midpoint is pushed inward into a reflex vertex, and
    the two triangles filling the notch up to ``(x+h, y+h/2)``.  Every
    vertex lies on one of the horizontal lines ``y = k h / 2``.

    Pushing the top or bottom midpoint instead puts all vertices on
    lines where the scheme reproduces the boundary-layer solution of the
    benchmark exactly, which hides the convergence behaviour.
    """
    if n < 2:
        raise ValueError("ncvx needs n >= 2")
    if not 0.0 < dent < 0.5:
        raise ValueError("dent must lie in (0, 1/2)")
    h = 1.0 / n
    m = 2 * n
    # half-grid vertices first, then one dent vertex per macro cell
    grid = np.arange((m + 1) ** 2).reshape(m + 1, m + 1)  # grid[iy, ix]
    gx, gy = np.meshgrid(np.arange(m + 1) / m, np.arange(m + 1) / m)
    used = np.zeros((m + 1, m + 1), dtype=bool)
    used[::2, :] = True
    used[1::2, ::2] = True
    coords = list(zip(gx[used], gy[used]))
    vid = np.full(grid.shape, -1)
    vid[used] = np.arange(used.sum())
    cells = []
    for r in range(n):
        for c in range(n):
            X, Y = 2 * c, 2 * r
            d = len(coords)
            coords.append(((c + 1 - dent) * h, (r + 0.5) * h))
            c00, mb, c10 = vid[Y, X], vid[Y, X + 1], vid[Y, X + 2]
            mr, c11, mt = vid[Y + 1, X + 2], vid[Y + 2, X + 2], vid[Y + 2, X + 1]
            c01, ml = vid[Y + 2, X], vid[Y + 1, X]
            cells.append([c00, mb, c10, d, c11, mt, c01, ml])
            cells.append([d, c10, mr])
            cells.append([d, mr, c11])
    return PolygonalMesh(np.array(coords, dtype=float), cells)
