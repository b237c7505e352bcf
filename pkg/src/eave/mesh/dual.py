"""Voronoi meshes bound to their dual Delaunay triangulations.

Every primary edge ``E`` gets a dual edge ``E*``.  For an interior edge
``E*`` joins the seeds of the two adjacent cells; for a boundary edge it
runs from the seed of the single cell to the foot of the perpendicular
on ``E``.  The patch ``D_E`` is the union of the triangles spanned by
``E`` and the seed(s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .polymesh import BOUNDARY, MeshError, PolygonalMesh
from .voronoi import circumcenters, clipped_voronoi, lloyd, mirrored_delaunay, triangle_angles

__all__ = [
    "DualityViolation",
    "AcutenessFailure",
    "EdgePatch",
    "DualMeshPair",
    "build_dual_pairing",
    "hexagonal_seeds",
    "generate_hexa_dual",
    "generate_voro_dual",
]

GEOM_TOL = 1e-10
PATCH_RTOL = 1e-12
# voro-dual accepts a configuration only if every interior dual angle is
# at most pi/2 - ACUTE_MARGIN, which keeps Voronoi edges away from zero length.
ACUTE_MARGIN = 1e-3


class DualityViolation(MeshError):
    def __init__(self, message: str, edge: int | None = None, triangle: int | None = None):
        self.edge = edge
        self.triangle = triangle
        super().__init__(message)


class AcutenessFailure(MeshError):
    def __init__(self, message: str, n_obtuse: int):
        self.n_obtuse = n_obtuse
        super().__init__(message)


@dataclass(frozen=True)
class EdgePatch:
    edge: int
    area: float
    dual_length: float


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class DualMeshPair:
    """A Voronoi mesh, its seeds and the interior dual triangles.

    Built by :func:`build_dual_pairing`, which verifies every duality
    invariant.  Per-edge arrays (indexed by primary edge id):

    ``dual_length``   ``|E*|``
    ``seed_distance`` ``(n_edges, 2)`` distance from the left/right seed to
                      ``E``; the parts of ``E*`` inside each cell (0 on the
                      missing side of boundary edges)
    ``intersection``  ``E ∩ E*``; the midpoint of ``E*`` for interior edges
    ``patch_area``    ``|D_E|``
    """

    def __init__(self, primary, seeds, dual_triangles, vertex_to_triangle, arrays):
        self.primary: PolygonalMesh = primary
        self.seeds = seeds
        self.dual_triangles = dual_triangles
        self.vertex_to_triangle = vertex_to_triangle
        self.triangle_to_vertex = np.empty(len(dual_triangles), dtype=np.int64)
        mask = vertex_to_triangle >= 0
        self.triangle_to_vertex[vertex_to_triangle[mask]] = np.flatnonzero(mask)
        self.dual_length = arrays["dual_length"]
        self.seed_distance = arrays["seed_distance"]
        self.intersection = arrays["intersection"]
        self.patch_area = arrays["patch_area"]
        for a in (
            self.seeds,
            self.dual_triangles,
            self.vertex_to_triangle,
            self.triangle_to_vertex,
            self.dual_length,
            self.seed_distance,
            self.intersection,
            self.patch_area,
        ):
            a.setflags(write=False)

    @property
    def n_triangles(self) -> int:
        return len(self.dual_triangles)

    @property
    def pairing(self) -> dict:
        """Interior edge id -> ``(|E*|, midpoint of E*)``."""
        return {
            int(e): (float(self.dual_length[e]), self.intersection[e])
            for e in self.primary.interior_edges
        }

    def patch(self, e: int) -> EdgePatch:
        return EdgePatch(int(e), float(self.patch_area[e]), float(self.dual_length[e]))

    def omega(self) -> np.ndarray:
        """Weights ``|E* ∩ K| / |E|`` per edge and side, shape ``(n_edges, 2)``.

        For interior edges both entries equal ``|E*| / (2|E|)``.
        """
        return self.seed_distance / self.primary.edge_lengths[:, None]

    def triangle_areas(self) -> np.ndarray:
        p = self.seeds[self.dual_triangles]
        return 0.5 * np.abs(_cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))

    def __eq__(self, other):
        if not isinstance(other, DualMeshPair):
            return NotImplemented
        return (
            self.primary == other.primary
            and np.array_equal(self.seeds, other.seeds)
            and np.array_equal(self.dual_triangles, other.dual_triangles)
        )

    __hash__ = None

    def __repr__(self):
        return f"DualMeshPair({self.primary!r}, triangles={self.n_triangles})"


def build_dual_pairing(primary: PolygonalMesh, seeds, triangles, tol: float = GEOM_TOL) -> DualMeshPair:
    """Bind ``primary`` to the Delaunay triangles over ``seeds`` and verify.

    Checks, raising :class:`DualityViolation` on the first failure:
    one seed per cell lying inside it, circumcenters of the triangles are
    exactly the interior vertices (a bijection), the three cells around
    each interior vertex are the triangle's seeds, every triangle is
    strictly acute, ``E`` is orthogonal to ``E*``, ``E ∩ E*`` is the
    midpoint of ``E*``, boundary feet lie on ``E`` and ``|E*||E| = 2|D_E|``.
    """
    seeds = np.array(seeds, dtype=float)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    V = primary.vertices
    nv, nc = primary.n_vertices, primary.n_cells
    if seeds.shape != (nc, 2):
        raise DualityViolation(f"expected {nc} seeds, got {len(seeds)}")
    if len(triangles) and (triangles.min() < 0 or triangles.max() >= nc):
        raise DualityViolation("triangle references a missing seed")

    # orient triangles counterclockwise
    p = seeds[triangles]
    area2 = _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if np.any(area2 == 0.0):
        t = int(np.flatnonzero(area2 == 0.0)[0])
        raise DualityViolation(f"dual triangle {t} is degenerate", triangle=t)
    triangles = np.where((area2 < 0)[:, None], triangles[:, [0, 2, 1]], triangles)

    # acuteness: every angle strictly below pi/2
    p = seeds[triangles]
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        w = p[:, (k + 2) % 3] - p[:, k]
        bad = np.flatnonzero(~((u * w).sum(1) > 0.0))
        if bad.size:
            t = int(bad[0])
            raise DualityViolation(f"dual triangle {t} is not acute", triangle=t)

    # circumcenters <-> interior vertices
    interior = np.flatnonzero(~primary.boundary_flags)
    if len(interior) != len(triangles):
        raise DualityViolation(
            f"{len(triangles)} dual triangles for {len(interior)} interior vertices"
        )
    vertex_to_triangle = np.full(nv, -1, dtype=np.int64)
    if len(triangles):
        cc = circumcenters(seeds, triangles)
        dist, idx = cKDTree(V[interior]).query(cc)
        far = np.flatnonzero(dist > tol)
        if far.size:
            t = int(far[0])
            raise DualityViolation(
                f"circumcenter of dual triangle {t} is {dist[t]:.3e} from the nearest interior vertex",
                triangle=t,
            )
        if len(np.unique(idx)) != len(idx):
            raise DualityViolation("two dual triangles share a circumcenter")
        vertex_to_triangle[interior[idx]] = np.arange(len(triangles))
        vc = primary.vertex_cells()
        for t, v in enumerate(interior[idx]):
            if sorted(vc[v]) != sorted(triangles[t].tolist()):
                raise DualityViolation(
                    f"cells around vertex {v} do not match dual triangle {t}", triangle=t
                )

    # per-edge checks
    E = primary.edges
    xi, xj = V[E[:, 0]], V[E[:, 1]]
    tau = xj - xi
    lenE = np.hypot(tau[:, 0], tau[:, 1])
    left, right = primary.edge_cells[:, 0], primary.edge_cells[:, 1]
    inner = right != BOUNDARY
    sL = seeds[left]
    sR = np.where(inner[:, None], seeds[np.where(inner, right, 0)], 0.0)

    # signed distance of the left seed to the line of E (left cell is on the left)
    dL = _cross(tau, sL - xi) / lenE
    dR = np.where(inner, -_cross(tau, sR - xi) / lenE, 0.0)
    bad = np.flatnonzero(~(dL > 0.0) | (inner & ~(dR > 0.0)))
    if bad.size:
        e = int(bad[0])
        raise DualityViolation(f"seed on the wrong side of edge {e}", edge=e)

    foot = sL - dL[:, None] * np.stack([-tau[:, 1], tau[:, 0]], 1) / lenE[:, None]
    tstar = np.where(inner[:, None], sR - sL, foot - sL)
    lenS = np.hypot(tstar[:, 0], tstar[:, 1])
    orth = np.abs((tau * tstar).sum(1))
    bad = np.flatnonzero(~(orth < tol * lenE * lenS))
    if bad.size:
        e = int(bad[0])
        raise DualityViolation(
            f"edge {e} is not orthogonal to its dual edge ({orth[e] / (lenE[e] * lenS[e]):.3e})",
            edge=e,
        )

    mid = np.where(inner[:, None], 0.5 * (sL + sR), foot)
    off_line = np.abs(_cross(tau, mid - xi)) / lenE
    t_par = ((mid - xi) * tau).sum(1) / lenE**2
    bad = np.flatnonzero(~(off_line < tol) | (t_par < -tol) | (t_par > 1.0 + tol))
    if bad.size:
        e = int(bad[0])
        raise DualityViolation(
            f"dual edge of edge {e} does not cross it at its midpoint (offset {off_line[e]:.3e})",
            edge=e,
        )
    bnd = np.flatnonzero(~inner)
    on_side = np.zeros(len(bnd), dtype=bool)
    for c in (0.0, 1.0):
        for ax in (0, 1):
            on_side |= (xi[bnd, ax] == c) & (xj[bnd, ax] == c)
    if not np.all(on_side):
        e = int(bnd[np.flatnonzero(~on_side)[0]])
        raise DualityViolation(f"boundary edge {e} is not on the boundary of the square", edge=e)

    patch = 0.5 * lenE * (dL + dR)
    # |D_E| from the sub-triangles directly, compared with |E*||E|/2
    direct = 0.5 * (np.abs(_cross(tau, sL - xi)) + np.where(inner, np.abs(_cross(tau, sR - xi)), 0.0))
    dual_len = np.where(inner, lenS, np.abs(dL))
    rel = np.abs(dual_len * lenE - 2.0 * direct) / (dual_len * lenE)
    bad = np.flatnonzero(inner & ~(rel <= PATCH_RTOL))
    if bad.size:
        e = int(bad[0])
        raise DualityViolation(f"|E*||E| != 2|D_E| on edge {e} (rel {rel[e]:.3e})", edge=e)

    arrays = {
        "dual_length": dual_len,
        "seed_distance": np.stack([dL, dR], 1),
        "intersection": mid,
        "patch_area": patch,
    }
    return DualMeshPair(primary, seeds, triangles, vertex_to_triangle, arrays)


def hexagonal_seeds(n: int) -> np.ndarray:
    """Staggered rows of seeds, ``n`` per even row, ``n - 1`` per odd row.

    Row count ``m = floor(2n / sqrt(3))`` makes the row spacing slightly
    larger than the equilateral value, so every interior dual triangle is
    an acute isosceles triangle and no Voronoi vertex sits on a side.
    """
    m = int(np.floor(2 * n / np.sqrt(3.0)))
    rows = []
    for k in range(m):
        y = (k + 0.5) / m
        if k % 2 == 0:
            x = (np.arange(n) + 0.5) / n
        else:
            x = np.arange(1, n) / n
        rows.append(np.stack([x, np.full_like(x, y)], 1))
    return np.concatenate(rows)


def generate_hexa_dual(n: int) -> DualMeshPair:
    """Hexagonal Voronoi mesh with an acute dual, ``n`` cells across."""
    if n < 2:
        raise ValueError("hexa-dual needs n >= 2")
    vr = clipped_voronoi(hexagonal_seeds(n))
    return build_dual_pairing(vr.mesh, vr.seeds, vr.triangles)


def _obtuse_triangles(P, margin):
    """Seed triples of the dual triangles that spoil the pairing.

    Interior triangles must be acute.  A triangle that reaches a mirror
    seed must have an acute angle opposite each edge joining two real
    seeds or a seed and its own reflection, otherwise the midpoint of
    that edge (the foot on the side, in the second case) falls outside
    its clipped Voronoi edge.  Mirror seeds are mapped to their originals.
    """
    n = len(P)
    pts, tris, cc = mirrored_delaunay(P)
    orig = tris < n
    inner = orig.all(axis=1) & np.all((cc > 0.0) & (cc < 1.0), axis=1)
    big = triangle_angles(pts, tris) > 0.5 * np.pi - margin
    # edge opposite vertex k joins vertices k+1 and k+2
    a, b = tris[:, [1, 2, 0]], tris[:, [2, 0, 1]]
    oa, ob = orig[:, [1, 2, 0]], orig[:, [2, 0, 1]]
    real_edge = (oa & ob) | ((oa | ob) & (a % n == b % n))
    bad = (inner & big.any(axis=1)) | (~inner & (big & real_edge).any(axis=1))
    return tris[bad] % n


def generate_voro_dual(
    n: int,
    seed: int = 0,
    lloyd_iters: int = 60,
    max_rounds: int = 300,
    step: float = 0.1,
) -> DualMeshPair:
    """Unstructured Voronoi mesh with ``n`` cells and an acute dual.

    Uniform random seeds are smoothed by Lloyd iterations.  The seeds of
    the remaining non-acute triangles are then moved by Gaussian steps of
    ``step`` times the mean spacing; a move is kept when it lowers the
    number of bad triangles touching that seed.  Raises
    :class:`AcutenessFailure` after ``max_rounds`` unsuccessful rounds.
    """
    if n < 4:
        raise ValueError("voro-dual needs n >= 4")
    rng = np.random.default_rng(seed)
    s = 1.0 / np.sqrt(n)
    P = lloyd(rng.uniform(size=(n, 2)), lloyd_iters)
    lo, hi = 1e-3 * s, 1.0 - 1e-3 * s
    bad = _obtuse_triangles(P, ACUTE_MARGIN)
    for _ in range(max_rounds):
        if len(bad) == 0:
            break
        ids = np.unique(bad)
        Q = P.copy()
        Q[ids] = np.clip(Q[ids] + rng.normal(scale=step * s, size=(len(ids), 2)), lo, hi)
        before = np.bincount(bad.ravel(), minlength=n)[ids]
        after = np.bincount(_obtuse_triangles(Q, ACUTE_MARGIN).ravel(), minlength=n)[ids]
        accept = ids[after < before]
        if accept.size == 0:
            accept = ids[rng.uniform(size=len(ids)) < 0.2]
        P = P.copy()
        P[accept] = Q[accept]
        bad = _obtuse_triangles(P, ACUTE_MARGIN)
    if len(bad):
        raise AcutenessFailure(
            f"{len(bad)} non-acute dual triangles remain after {max_rounds} rounds", len(bad)
        )
    vr = clipped_voronoi(P)
    return build_dual_pairing(vr.mesh, vr.seeds, vr.triangles)
