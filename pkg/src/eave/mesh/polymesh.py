from __future__ import annotations

import numpy as np

__all__ = [
    "BOUNDARY",
    "MeshError",
    "MeshValidationError",
    "PolygonalMesh",
    "signed_area",
    "polygon_centroid",
    "polygon_diameter",
]

BOUNDARY = -1


class MeshError(ValueError):
    pass


class MeshValidationError(MeshError):
    pass


def signed_area(xy) -> float:
    xy = np.asarray(xy, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    # shift for accuracy on small cells far from the origin
    o = xy[0]
    p = xy - o
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    a = 0.5 * cross.sum()
    c = ((p + q) * cross[:, None]).sum(axis=0) / (6.0 * a)
    return c + o


def polygon_diameter(xy) -> float:
    xy = np.asarray(xy, dtype=float)
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d * d).sum(-1).max()))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


class PolygonalMesh:
    """Conforming polygonal mesh with counterclockwise cells.

    ``edges[e] = (i, j)`` carries the global orientation
    ``tau_E = x_j - x_i``.  ``edge_cells[e] = (left, right)``: the left
    cell traverses the edge from ``i`` to ``j``; ``right`` is
    :data:`BOUNDARY` for boundary edges.  Interior edges are stored with
    ``i < j``.
    """

    def __init__(self, vertices, cells, *, check: bool = True):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2:
            raise MeshError("vertices must be an (N, 2) array")
        if not np.all(np.isfinite(V)):
            raise MeshError("non-finite vertex coordinates")
        V.setflags(write=False)
        self.vertices = V
        cl = []
        for k, c in enumerate(cells):
            c = np.array(c, dtype=np.int64)
            if c.ndim != 1 or len(c) < 3:
                raise MeshValidationError(f"cell {k} has fewer than 3 vertices")
            if c.min() < 0 or c.max() >= len(V):
                raise MeshValidationError(f"cell {k} references a missing vertex")
            if len(np.unique(c)) != len(c):
                raise MeshValidationError(f"cell {k} repeats a vertex")
            c.setflags(write=False)
            cl.append(c)
        self.cells = tuple(cl)
        self.cell_ptr = np.concatenate([[0], np.cumsum([len(c) for c in cl])]).astype(np.int64)
        self.cell_idx = np.concatenate(cl) if cl else np.zeros(0, dtype=np.int64)

        self.areas = np.array([signed_area(V[c]) for c in cl])
        if check:
            bad = np.flatnonzero(~(self.areas > 0.0))
            if bad.size:
                k = int(bad[0])
                raise MeshValidationError(
                    f"cell {k} is not counterclockwise (signed area {self.areas[k]:.3e})"
                )
        self._build_edges()

    # -- topology -------------------------------------------------------
    def _build_edges(self):
        n_cells = len(self.cells)
        nloc = np.diff(self.cell_ptr)
        a = self.cell_idx
        nxt = np.arange(len(a)) + 1
        ends = self.cell_ptr[1:] - 1
        nxt[ends] = self.cell_ptr[:-1]
        b = a[nxt]
        owner = np.repeat(np.arange(n_cells), nloc)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = np.stack([lo, hi], axis=1)
        uniq, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if np.any(counts > 2):
            e = int(np.flatnonzero(counts > 2)[0])
            raise MeshValidationError(f"edge {tuple(uniq[e])} is shared by more than two cells")
        n_edges = len(uniq)
        forward = a < b
        edges = np.empty((n_edges, 2), dtype=np.int64)
        edge_cells = np.full((n_edges, 2), BOUNDARY, dtype=np.int64)
        # half-edges sorted by edge id
        order = np.argsort(inv, kind="stable")
        first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        h1 = order[first]
        interior = counts == 2
        h2 = np.where(interior, order[np.minimum(first + 1, len(order) - 1)], -1)

        # boundary edges keep the orientation of their single cell
        bnd = ~interior
        edges[bnd, 0] = a[h1[bnd]]
        edges[bnd, 1] = b[h1[bnd]]
        edge_cells[bnd, 0] = owner[h1[bnd]]

        ie = np.flatnonzero(interior)
        f1 = forward[h1[ie]]
        f2 = forward[h2[ie]]
        if np.any(f1 == f2):
            e = int(ie[np.flatnonzero(f1 == f2)[0]])
            raise MeshValidationError(
                f"cells {owner[h1[e]]} and {owner[h2[e]]} traverse edge {tuple(uniq[e])} in the same direction"
            )
        edges[ie] = uniq[ie]
        left = np.where(f1, owner[h1[ie]], owner[h2[ie]])
        right = np.where(f1, owner[h2[ie]], owner[h1[ie]])
        edge_cells[ie, 0] = left
        edge_cells[ie, 1] = right

        self.edges = edges
        self.edge_cells = edge_cells
        # per half-edge: edge id and sign (+1 when the local direction is global)
        self.halfedge_edge = inv
        self.halfedge_sign = np.where(a == edges[inv, 0], 1, -1)
        self.boundary_edges = np.flatnonzero(edge_cells[:, 1] == BOUNDARY)
        self.interior_edges = np.flatnonzero(edge_cells[:, 1] != BOUNDARY)
        flags = np.zeros(len(self.vertices), dtype=bool)
        flags[edges[self.boundary_edges].ravel()] = True
        self.boundary_flags = flags
        for arr in (self.edges, self.edge_cells, self.boundary_flags):
            arr.setflags(write=False)

    # -- geometry -------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_vertices(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]

    @property
    def tangents(self) -> np.ndarray:
        return self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.hypot(*self.tangents.T)

    @property
    def centroids(self) -> np.ndarray:
        if not hasattr(self, "_centroids"):
            self._centroids = np.array([polygon_centroid(self.vertices[c]) for c in self.cells])
        return self._centroids

    @property
    def diameters(self) -> np.ndarray:
        if not hasattr(self, "_diameters"):
            self._diameters = np.array([polygon_diameter(self.vertices[c]) for c in self.cells])
        return self._diameters

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_flags)

    def cells_by_size(self):
        """Group cell ids by vertex count: ``{n: (ids, (M, n) index array)}``."""
        nloc = np.diff(self.cell_ptr)
        groups = {}
        for n in np.unique(nloc):
            ids = np.flatnonzero(nloc == n)
            idx = self.cell_idx[self.cell_ptr[ids][:, None] + np.arange(n)[None, :]]
            groups[int(n)] = (ids, idx)
        return groups

    def vertex_cells(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for k, c in enumerate(self.cells):
            for v in c:
                out[int(v)].append(k)
        return out

    # -- validation -----------------------------------------------------
    def validate(self, domain_area: float | None = 1.0, area_tol: float = 1e-10) -> None:
        """Full check: simple CCW cells, manifold edges, optional tiling."""
        for k, c in enumerate(self.cells):
            xy = self.vertices[c]
            if not self.areas[k] > 0.0:
                raise MeshValidationError(f"cell {k} is not counterclockwise")
            n = len(c)
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    if _segments_cross(xy[i], xy[(i + 1) % n], xy[j], xy[(j + 1) % n]):
                        raise MeshValidationError(f"cell {k} is self-intersecting")
        if domain_area is not None:
            total = float(self.areas.sum())
            if abs(total - domain_area) > area_tol:
                raise MeshValidationError(
                    f"cell areas sum to {total!r}, expected {domain_area!r}"
                )

    def __eq__(self, other):
        if not isinstance(other, PolygonalMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and len(self.cells) == len(other.cells)
            and all(np.array_equal(a, b) for a, b in zip(self.cells, other.cells))
        )

    __hash__ = None

    def __repr__(self):
        return f"PolygonalMesh(vertices={self.n_vertices}, cells={self.n_cells}, edges={self.n_edges})"
