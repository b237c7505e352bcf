"""Global assembly for convection-diffusion ``-div(alpha grad u + beta u) = f``.

All schemes produce a full vertex-indexed operator first; Dirichlet
values are then eliminated by :func:`apply_dirichlet`, leaving a square
system over the interior vertices.

Edge-averaged schemes share one stencil: a vertex pair ``(i, j)`` with
weight ``w`` and edge coefficients ``c_ij, c_ji`` contributes the flux
``F = c_ij u_j - c_ji u_i`` tested with ``v_j - v_i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .flux import NonpositiveDiffusion, batch_edge_coefficients
from .linalg import from_triplets, solve_sparse
from .mesh.dual import DualMeshPair
from .mesh.polymesh import PolygonalMesh
from .vem import StabChoice, fvm_local_batch, poisson_local_batch

__all__ = [
    "ProblemSpec",
    "LinearSystem",
    "SchemeKind",
    "supg_parameter",
    "rhs_fh",
    "rhs_dual",
    "apply_dirichlet",
    "assemble_fe",
    "assemble_supg",
    "assemble_eafe",
    "assemble_eave",
    "assemble_meave",
    "assemble_vem_poisson",
    "assemble_fvm_poisson",
    "p1_stiffness",
    "assemble",
    "solve",
]


def _scalar_field(v):
    if callable(v):
        return v
    c = float(v)
    return lambda x: np.full(len(x), c)


def _vector_field(v):
    if callable(v):
        return v
    c = np.broadcast_to(np.asarray(v, dtype=float), (2,)).copy()
    return lambda x: np.tile(c, (len(x), 1))


@dataclass
class ProblemSpec:
    """Coefficients, source and Dirichlet data; callables act on ``(N, 2)`` arrays.

    Constants are accepted anywhere and wrapped.  ``epsilon`` is set when
    ``alpha`` is the constant ``epsilon``.
    """

    alpha: Callable
    beta: Callable
    f: Callable
    g: Callable
    epsilon: float | None = None

    def __post_init__(self):
        if self.epsilon is None and not callable(self.alpha):
            self.epsilon = float(self.alpha)
        self.alpha = _scalar_field(self.alpha)
        self.beta = _vector_field(self.beta)
        self.f = _scalar_field(self.f)
        self.g = _scalar_field(self.g)

    @classmethod
    def constant(cls, epsilon: float, beta=(0.0, 0.0), f=0.0, g=0.0) -> "ProblemSpec":
        if not epsilon > 0.0:
            raise NonpositiveDiffusion(f"epsilon = {epsilon!r} must be positive")
        return cls(alpha=float(epsilon), beta=beta, f=f, g=g, epsilon=float(epsilon))

    def check_alpha(self, points) -> None:
        a = np.asarray(self.alpha(np.asarray(points, dtype=float)))
        if a.size and not np.all(a > 0.0):
            raise NonpositiveDiffusion(f"alpha has minimum {a.min()!r} on sample points")


class SchemeKind(enum.Enum):
    FE = "fe"
    SUPG = "supg"
    EAFE = "eafe"
    EAVE = "eave"
    MEAVE = "meave"

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "")
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scheme {value!r}; choose from {names}") from None

    @property
    def needs_triangles(self) -> bool:
        return self in (SchemeKind.FE, SchemeKind.SUPG, SchemeKind.EAFE)


@dataclass
class LinearSystem:
    """Reduced system over free vertices plus the data to undo the reduction."""

    A: sp.csr_matrix
    b: np.ndarray
    free: np.ndarray  # vertex id of each unknown
    boundary: np.ndarray  # vertex ids with prescribed values
    boundary_values: np.ndarray
    n_vertices: int
    A_full: sp.csr_matrix | None = None
    b_full: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def dof_map(self) -> np.ndarray:
        """Vertex id -> unknown index, ``-1`` on Dirichlet vertices."""
        m = np.full(self.n_vertices, -1, dtype=np.int64)
        m[self.free] = np.arange(len(self.free))
        return m

    def expand(self, x) -> np.ndarray:
        u = np.empty(self.n_vertices)
        u[self.free] = x
        u[self.boundary] = self.boundary_values
        return u


def apply_dirichlet(A_full, b_full, mesh: PolygonalMesh, g) -> LinearSystem:
    """Eliminate boundary vertices: fix ``u = g`` there and move their columns to the right."""
    g = _scalar_field(g)
    A_full = sp.csr_matrix(A_full)
    bnd = np.flatnonzero(mesh.boundary_flags)
    free = np.flatnonzero(~mesh.boundary_flags)
    ub = np.asarray(g(mesh.vertices[bnd]), dtype=float)
    rows = A_full[free]
    b = np.asarray(b_full, dtype=float)[free] - rows[:, bnd] @ ub
    A = rows[:, free].tocsr()
    A.sort_indices()
    return LinearSystem(
        A=A,
        b=b,
        free=free,
        boundary=bnd,
        boundary_values=ub,
        n_vertices=mesh.n_vertices,
        A_full=A_full,
        b_full=np.asarray(b_full, dtype=float),
    )


# -- right-hand sides --------------------------------------------------------
def rhs_fh(mesh: PolygonalMesh, f) -> np.ndarray:
    """``|K| f(centroid) / N_V`` added to every vertex of each cell."""
    f = _scalar_field(f)
    nloc = np.diff(mesh.cell_ptr)
    load = mesh.areas * np.asarray(f(mesh.centroids), dtype=float) / nloc
    return np.bincount(mesh.cell_idx, weights=np.repeat(load, nloc), minlength=mesh.n_vertices)


def rhs_dual(pair: DualMeshPair, f) -> np.ndarray:
    """Lumped dual-triangle loads ``|T|/3 (f(x*_1) + f(x*_2) + f(x*_3))``.

    Returned per primary vertex (the circumcenter of ``T``); zero on
    boundary vertices.
    """
    f = _scalar_field(f)
    fs = np.asarray(f(pair.seeds), dtype=float)
    load = pair.triangle_areas() / 3.0 * fs[pair.dual_triangles].sum(1)
    out = np.zeros(pair.primary.n_vertices)
    out[pair.triangle_to_vertex] = load
    return out


# -- shared edge stencil -------------------------------------------------------
def _edge_triplets(I, J, W, cij, cji):
    rows = np.concatenate([J, J, I, I])
    cols = np.concatenate([J, I, J, I])
    vals = np.concatenate([W * cij, -W * cji, -W * cij, W * cji])
    return rows, cols, vals


def _merge_pairs(I, J, W, n):
    """Sum weights of unordered vertex pairs; drop exact zeros."""
    lo, hi = np.minimum(I, J), np.maximum(I, J)
    key = lo * n + hi
    uk, inv = np.unique(key, return_inverse=True)
    Wsum = np.bincount(inv.ravel(), weights=W, minlength=len(uk))
    keep = Wsum != 0.0
    return uk[keep] // n, uk[keep] % n, Wsum[keep]


def _stencil_matrix(V, I, J, W, spec: ProblemSpec, rule: str, n: int, rows_keep=None):
    cij, cji = batch_edge_coefficients(spec.alpha, spec.beta, V[I], V[J], rule)
    r, c, v = _edge_triplets(I, J, W, cij, cji)
    if rows_keep is not None:
        m = rows_keep[r]
        r, c, v = r[m], c[m], v[m]
    return from_triplets(r, c, v, (n, n))


# -- triangle schemes ------------------------------------------------------------
def _triangles(mesh: PolygonalMesh) -> np.ndarray:
    nloc = np.diff(mesh.cell_ptr)
    if np.any(nloc != 3):
        raise ValueError("this scheme needs a triangle mesh")
    return mesh.cell_idx.reshape(-1, 3)


def _p1_gradients(V, T):
    p = V[T]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    G = np.empty((len(T), 3, 2))
    for a in range(3):
        q1, q2 = p[:, (a + 1) % 3], p[:, (a + 2) % 3]
        G[:, a, 0] = (q1[:, 1] - q2[:, 1]) / area2
        G[:, a, 1] = (q2[:, 0] - q1[:, 0]) / area2
    return 0.5 * area2, G


def p1_stiffness(mesh: PolygonalMesh, alpha=1.0) -> sp.csr_matrix:
    """P1 stiffness ``int alpha grad phi_j . grad phi_i`` with alpha at centroids."""
    T = _triangles(mesh)
    V = mesh.vertices
    area, G = _p1_gradients(V, T)
    a = np.asarray(_scalar_field(alpha)(V[T].mean(1)), dtype=float)
    K = (a * area)[:, None, None] * (G @ np.swapaxes(G, 1, 2))
    return _scatter(T, K, mesh.n_vertices)


def _scatter(T, K, n):
    N = T.shape[1]
    rows = np.repeat(T, N, axis=1).ravel()
    cols = np.tile(T, (1, N)).ravel()
    return from_triplets(rows, cols, K.ravel(), (n, n))


def supg_parameter(beta_T, h_T, eps):
    """Streamline parameter ``0.25 h^2/(eps Pe) (1 - 1/Pe)``, clamped at 0 for ``Pe <= 1``."""
    beta_T = np.asarray(beta_T, dtype=float)
    h_T = np.asarray(h_T, dtype=float)
    eps = np.asarray(eps, dtype=float)
    Pe = beta_T * h_T / (2.0 * eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 0.25 * h_T**2 / (eps * Pe) * (1.0 - 1.0 / Pe)
    s = np.where(Pe > 1.0, s, 0.0)
    return float(s) if s.ndim == 0 else s


def _fe_parts(mesh, spec):
    T = _triangles(mesh)
    V = mesh.vertices
    area, G = _p1_gradients(V, T)
    cen = V[T].mean(1)
    spec.check_alpha(cen)
    a = np.asarray(spec.alpha(cen), dtype=float)
    bvec = np.asarray(spec.beta(cen), dtype=float).reshape(-1, 2)
    # K[t, i, j]: test function i, trial function j
    K = (a * area)[:, None, None] * (G @ np.swapaxes(G, 1, 2))
    bG = np.einsum("td,tid->ti", bvec, G)
    K += (area / 3.0)[:, None, None] * bG[:, :, None]
    return T, V, area, G, cen, bvec, bG, K


def assemble_fe(mesh: PolygonalMesh, spec: ProblemSpec) -> LinearSystem:
    """Galerkin P1 for ``int (alpha grad u + beta u) . grad v = F_h(v)``."""
    T, V, area, G, cen, bvec, bG, K = _fe_parts(mesh, spec)
    A = _scatter(T, K, mesh.n_vertices)
    return apply_dirichlet(A, rhs_fh(mesh, spec.f), mesh, spec.g)


def assemble_supg(mesh: PolygonalMesh, spec: ProblemSpec) -> LinearSystem:
    """P1 plus the streamline term ``s (beta.grad u, beta.grad v)_T``.

    The strong residual of a linear function on a triangle with frozen
    coefficients is ``-beta.grad u - f``; consistency moves
    ``-s f (beta.grad v)`` to the right-hand side.
    """
    T, V, area, G, cen, bvec, bG, K = _fe_parts(mesh, spec)
    pts = np.concatenate([V[T], cen[:, None, :]], axis=1).reshape(-1, 2)
    bmag = np.hypot(*np.asarray(spec.beta(pts), dtype=float).reshape(-1, 2).T).reshape(-1, 4)
    beta_T = bmag.max(1)
    eps = np.asarray(spec.alpha(cen), dtype=float)
    s = supg_parameter(beta_T, np.sqrt(area), eps)
    K = K + (s * area)[:, None, None] * (bG[:, :, None] * bG[:, None, :])
    A = _scatter(T, K, mesh.n_vertices)
    b = rhs_fh(mesh, spec.f)
    fc = np.asarray(spec.f(cen), dtype=float)
    corr = -(s * area * fc)[:, None] * bG
    b = b + np.bincount(T.ravel(), weights=corr.ravel(), minlength=mesh.n_vertices)
    sysm = apply_dirichlet(A, b, mesh, spec.g)
    sysm.info["supg_s"] = s
    return sysm


def eafe_weights(mesh: PolygonalMesh):
    """Per-triangle ``(I, J, w)`` with ``w = cot(theta)/2`` of the opposite angle."""
    T = _triangles(mesh)
    V = mesh.vertices
    I, J, W = [], [], []
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        u = V[T[:, a]] - V[T[:, c]]
        v = V[T[:, b]] - V[T[:, c]]
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        I.append(T[:, a])
        J.append(T[:, b])
        W.append(0.5 * (u * v).sum(1) / cross)
    return np.concatenate(I), np.concatenate(J), np.concatenate(W)


def assemble_eafe(mesh: PolygonalMesh, spec: ProblemSpec, rule: str = "average") -> LinearSystem:
    I, J, W = eafe_weights(mesh)
    I, J, W = _merge_pairs(I, J, W, mesh.n_vertices)
    A = _stencil_matrix(mesh.vertices, I, J, W, spec, rule, mesh.n_vertices)
    return apply_dirichlet(A, rhs_fh(mesh, spec.f), mesh, spec.g)


# -- polygonal schemes ------------------------------------------------------------
def _local_poisson_groups(mesh: PolygonalMesh, stab):
    for n, (ids, idx) in sorted(mesh.cells_by_size().items()):
        yield ids, idx, poisson_local_batch(mesh.vertices[idx], stab)


def assemble_vem_poisson(mesh: PolygonalMesh, stab=StabChoice.SV) -> sp.csr_matrix:
    """Global stabilised Poisson matrix ``sum_K a_h^K`` over all vertices."""
    stab = StabChoice.parse(stab)
    rows, cols, vals = [], [], []
    for ids, idx, A in _local_poisson_groups(mesh, stab):
        N = idx.shape[1]
        rows.append(np.repeat(idx, N, axis=1).ravel())
        cols.append(np.tile(idx, (1, N)).ravel())
        vals.append(A.ravel())
    n = mesh.n_vertices
    return from_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, n))


def eave_weights(mesh: PolygonalMesh, stab=StabChoice.SV):
    """Merged pair weights ``sum_K -a_h^K(phi_i, phi_j)`` over all vertex pairs of each cell."""
    stab = StabChoice.parse(stab)
    I, J, W = [], [], []
    for ids, idx, A in _local_poisson_groups(mesh, stab):
        N = idx.shape[1]
        a, b = np.triu_indices(N, k=1)
        I.append(idx[:, a].ravel())
        J.append(idx[:, b].ravel())
        W.append(-A[:, a, b].ravel())
    return _merge_pairs(np.concatenate(I), np.concatenate(J), np.concatenate(W), mesh.n_vertices)


def assemble_eave(
    mesh: PolygonalMesh, spec: ProblemSpec, stab=StabChoice.SV, rule: str = "average"
) -> LinearSystem:
    I, J, W = eave_weights(mesh, stab)
    A = _stencil_matrix(mesh.vertices, I, J, W, spec, rule, mesh.n_vertices)
    sysm = apply_dirichlet(A, rhs_fh(mesh, spec.f), mesh, spec.g)
    sysm.info["n_pairs"] = len(W)
    return sysm


def assemble_fvm_poisson(pair: DualMeshPair) -> sp.csr_matrix:
    """Galerkin dual-mesh Poisson matrix ``sum_K sum_E w_E^K delta_E delta_E^T``."""
    mesh = pair.primary
    rows, cols, vals = [], [], []
    for n, (ids, idx) in sorted(mesh.cells_by_size().items()):
        A = fvm_local_batch(mesh.vertices[idx], pair.seeds[ids])
        rows.append(np.repeat(idx, n, axis=1).ravel())
        cols.append(np.tile(idx, (1, n)).ravel())
        vals.append(A.ravel())
    nv = mesh.n_vertices
    return from_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (nv, nv))


def assemble_meave(pair: DualMeshPair, spec: ProblemSpec, rule: str = "average") -> LinearSystem:
    """Petrov-Galerkin scheme tested with dual-triangle indicators.

    Row ``v`` is the balance over the dual triangle whose circumcenter is
    the interior vertex ``v``; every interior primary edge couples its two
    endpoints with weight ``|E*| / |E|``.
    """
    mesh = pair.primary
    e = mesh.interior_edges
    I, J = mesh.edges[e, 0], mesh.edges[e, 1]
    W = pair.dual_length[e] / mesh.edge_lengths[e]
    interior_rows = ~mesh.boundary_flags
    A = _stencil_matrix(mesh.vertices, I, J, W, spec, rule, mesh.n_vertices, rows_keep=interior_rows)
    sysm = apply_dirichlet(A, rhs_dual(pair, spec.f), mesh, spec.g)
    sysm.info["triangle_of_row"] = pair.vertex_to_triangle[sysm.free]
    return sysm


def assemble(kind, mesh, spec: ProblemSpec, stab=StabChoice.SV, rule: str = "average") -> LinearSystem:
    """Dispatch on :class:`SchemeKind`; ``mesh`` is a DualMeshPair for M-EAVE."""
    kind = SchemeKind.parse(kind)
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    spec.check_alpha(prim.vertices)
    if kind is SchemeKind.MEAVE:
        if not isinstance(mesh, DualMeshPair):
            raise TypeError("M-EAVE needs a Voronoi mesh with its dual pairing")
        return assemble_meave(mesh, spec, rule)
    if kind is SchemeKind.EAVE:
        return assemble_eave(prim, spec, stab, rule)
    if kind is SchemeKind.EAFE:
        return assemble_eafe(prim, spec, rule)
    if kind is SchemeKind.SUPG:
        return assemble_supg(prim, spec)
    return assemble_fe(prim, spec)


def solve(system: LinearSystem, tol: float = 1e-10) -> np.ndarray:
    """Solve and return values at every vertex (boundary values included)."""
    x = solve_sparse(system.A, system.b, tol=tol)
    return system.expand(x)
