"""Discrete error norms and the dual-mesh flux error."""

from __future__ import annotations

import numpy as np

from ..mesh.dual import DualMeshPair
from ..mesh.polymesh import BOUNDARY, PolygonalMesh
from ..schemes import SchemeKind, assemble_fvm_poisson, assemble_vem_poisson
from ..vem import StabChoice

__all__ = ["interpolant", "energy_matrix", "a_norm", "inf_norm", "flux_error", "TRIANGLE_RULE"]

# symmetric 6-point rule, exact for degree 4: (barycentric a, a, 1-2a), weight
TRIANGLE_RULE = (
    (0.445948490915965, 0.223381589678011),
    (0.091576213509771, 0.109951743655322),
)


def interpolant(u, mesh) -> np.ndarray:
    """Nodal values ``u(x_i)`` at every vertex."""
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    return np.asarray(u(prim.vertices), dtype=float)


def energy_matrix(mesh, stab=StabChoice.SV, scheme=None):
    """Global matrix defining the A-norm of a scheme.

    M-EAVE is measured in the stabilisation-free dual-mesh form, every
    other scheme in the VEM Poisson form (on triangles this is the P1
    stiffness matrix whatever the stabilisation).
    """
    kind = SchemeKind.parse(scheme) if scheme is not None else None
    if kind is SchemeKind.MEAVE or (kind is None and isinstance(mesh, DualMeshPair)):
        if not isinstance(mesh, DualMeshPair):
            raise TypeError("the dual-mesh form needs a DualMeshPair")
        return assemble_fvm_poisson(mesh)
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    return assemble_vem_poisson(prim, stab)


def a_norm(e, mesh, stab=StabChoice.SV, scheme=None, matrix=None) -> float:
    """``sqrt(sum_K a_h^K(e, e))`` over the full vertex vector ``e``."""
    A = energy_matrix(mesh, stab, scheme) if matrix is None else matrix
    e = np.asarray(e, dtype=float)
    # round-off can push a tiny energy below zero
    return float(np.sqrt(max(float(e @ (A @ e)), 0.0)))


def inf_norm(e) -> float:
    e = np.asarray(e, dtype=float)
    return float(np.abs(e).max()) if e.size else 0.0


def _triangle_points():
    pts, wts = [], []
    for a, w in TRIANGLE_RULE:
        b = 1.0 - 2.0 * a
        for lam in ((a, a, b), (a, b, a), (b, a, a)):
            pts.append(lam)
            wts.append(w)
    return np.array(pts), np.array(wts)


def flux_error(pair: DualMeshPair, u_h, grad_u) -> float:
    """``(sum_E ||grad u . n_E* - delta_E(u_h)/|E| ||^2_{L2(D_E)})^{1/2}``.

    ``D_E`` is the union of the triangles spanned by ``E`` and the seeds
    of its adjacent cells (one triangle on boundary edges).  ``n_E*`` is
    the unit vector along ``E``, which is the direction of ``E*``.
    """
    mesh: PolygonalMesh = pair.primary
    u_h = np.asarray(u_h, dtype=float)
    E = mesh.edges
    L = mesh.edge_lengths
    t = mesh.tangents / L[:, None]
    g_h = (u_h[E[:, 1]] - u_h[E[:, 0]]) / L
    lam, w = _triangle_points()
    a, b = mesh.vertices[E[:, 0]], mesh.vertices[E[:, 1]]
    total = 0.0
    for side in (0, 1):
        cell = mesh.edge_cells[:, side]
        ok = cell != BOUNDARY
        s = pair.seeds[cell[ok]]
        p0, p1 = a[ok], b[ok]
        area = 0.5 * np.abs(
            (p1[:, 0] - p0[:, 0]) * (s[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (s[:, 0] - p0[:, 0])
        )
        for (l0, l1, l2), wq in zip(lam, w):
            q = l0 * p0 + l1 * p1 + l2 * s
            d = (grad_u(q) * t[ok]).sum(1) - g_h[ok]
            total += float(np.sum(wq * area * d * d))
    return float(np.sqrt(total))
