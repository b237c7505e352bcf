"""Lowest-order virtual element kernels on single polygons.

Local degrees of freedom are vertex values in counterclockwise order.
The elliptic projection onto linear polynomials is expressed in the
scaled monomials ``m0 = 1``, ``m1 = (x - xc)/h``, ``m2 = (y - yc)/h``
with ``xc`` the centroid and ``h`` the diameter.  Every kernel has a
batched form working on ``(M, N, 2)`` stacks of polygons with the same
vertex count; the single-polygon functions are thin wrappers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mesh.polymesh import PolygonalMesh

__all__ = [
    "AREA_MIN",
    "DegeneratePolygon",
    "MissingPairing",
    "StabChoice",
    "LocalElement",
    "pi_nabla",
    "pi_nabla_affine",
    "stab_matrix",
    "poisson_local",
    "fvm_poisson_local",
    "fvm_weights",
    "fvm_flux",
    "ProjectionData",
    "projection_batch",
    "poisson_local_batch",
    "fvm_local_batch",
]

AREA_MIN = 1e-14


class DegeneratePolygon(ValueError):
    pass


class MissingPairing(ValueError):
    pass


class StabChoice(enum.Enum):
    """Stabilisation of the Poisson form.

    ``SV``: dof-dof inner product ``sum_i u(x_i) v(x_i)``.
    ``SE``: edge differences ``sum_E delta_E(u) delta_E(v)``.
    ``NONE``: no stabilisation (only meaningful for the dual-mesh form).
    """

    SV = "sv"
    SE = "se"
    NONE = "none"

    @classmethod
    def parse(cls, value) -> "StabChoice":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown stabilisation {value!r}; choose sv or se") from None


@dataclass(frozen=True)
class LocalElement:
    cell: int
    xy: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: PolygonalMesh, k: int) -> "LocalElement":
        return cls(int(k), mesh.cell_vertices(k))

    @property
    def n(self) -> int:
        return len(self.xy)

    @property
    def tangents(self) -> np.ndarray:
        return np.roll(self.xy, -1, axis=0) - self.xy


@dataclass
class ProjectionData:
    area: np.ndarray  # (M,)
    centroid: np.ndarray  # (M, 2)
    diameter: np.ndarray  # (M,)
    D: np.ndarray  # (M, N, 3) monomials at vertices
    B: np.ndarray  # (M, 3, N)
    pi_star: np.ndarray  # (M, 3, N) dofs -> monomial coefficients
    pi: np.ndarray  # (M, N, N) dofs -> dofs of the projection


def _geometry(xy):
    p = xy - xy[:, :1, :]
    q = np.roll(p, -1, axis=1)
    cross = p[..., 0] * q[..., 1] - q[..., 0] * p[..., 1]
    area = 0.5 * cross.sum(1)
    bad = np.flatnonzero(~(area >= AREA_MIN))
    if bad.size:
        raise DegeneratePolygon(f"polygon {int(bad[0])} has area {area[bad[0]]:.3e} below {AREA_MIN:g}")
    cen = ((p + q) * cross[..., None]).sum(1) / (6.0 * area[:, None]) + xy[:, 0, :]
    d = xy[:, :, None, :] - xy[:, None, :, :]
    diam = np.sqrt((d * d).sum(-1).max(axis=(1, 2)))
    return area, cen, diam


def projection_batch(xy) -> ProjectionData:
    """Elliptic projection data for a stack of polygons ``(M, N, 2)``."""
    xy = np.asarray(xy, dtype=float)
    M, N, _ = xy.shape
    area, cen, h = _geometry(xy)
    D = np.empty((M, N, 3))
    D[..., 0] = 1.0
    D[..., 1:] = (xy - cen[:, None, :]) / h[:, None, None]
    t = np.roll(xy, -1, axis=1) - xy
    # outward normal times edge length for a counterclockwise polygon
    nl = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    B = np.empty((M, 3, N))
    B[:, 0, :] = 1.0 / N
    B[:, 1:, :] = np.swapaxes(nl + np.roll(nl, 1, axis=1), 1, 2) / (2.0 * h[:, None, None])
    G = B @ D
    pi_star = np.linalg.solve(G, B)
    pi = D @ pi_star
    return ProjectionData(area, cen, h, D, B, pi_star, pi)


def _edge_difference(N):
    Dd = -np.eye(N)
    Dd[np.arange(N), (np.arange(N) + 1) % N] = 1.0
    return Dd


def _stab_from(pd: ProjectionData, choice: StabChoice):
    N = pd.pi.shape[1]
    R = np.eye(N)[None] - pd.pi
    if choice is StabChoice.SV:
        return np.swapaxes(R, 1, 2) @ R
    if choice is StabChoice.SE:
        Dd = _edge_difference(N)
        DR = Dd[None] @ R
        return np.swapaxes(DR, 1, 2) @ DR
    if choice is StabChoice.NONE:
        return np.zeros_like(R)
    raise ValueError(f"unknown stabilisation {choice!r}")


def poisson_local_batch(xy, choice=StabChoice.SV, pd: ProjectionData | None = None) -> np.ndarray:
    """Stabilised local Poisson matrices ``(M, N, N)``."""
    choice = StabChoice.parse(choice)
    if pd is None:
        pd = projection_batch(xy)
    P = pd.pi_star[:, 1:, :]
    scale = (pd.area / pd.diameter**2)[:, None, None]
    Kc = scale * (np.swapaxes(P, 1, 2) @ P)
    A = Kc + _stab_from(pd, choice)
    return 0.5 * (A + np.swapaxes(A, 1, 2))


def fvm_local_batch(xy, seeds) -> np.ndarray:
    """Local dual-mesh Poisson matrices ``sum_E w_E delta_E delta_E^T``.

    ``w_E`` is the signed distance from the seed to the line of ``E``
    divided by ``|E|``; for a Voronoi cell this is ``|E* ∩ K| / |E|``.
    """
    w = fvm_weights(xy, seeds)
    M, N = w.shape
    Dd = _edge_difference(N)
    return np.einsum("ek,mk,kf->mef", Dd.T, w, Dd)


def fvm_weights(xy, seeds) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    seeds = np.asarray(seeds, dtype=float)
    t = np.roll(xy, -1, axis=1) - xy
    r = seeds[:, None, :] - xy
    return (t[..., 0] * r[..., 1] - t[..., 1] * r[..., 0]) / (t * t).sum(-1)


# -- single-polygon API ---------------------------------------------------
def _xy(K):
    xy = K.xy if isinstance(K, LocalElement) else K
    xy = np.asarray(xy, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 3:
        raise ValueError("a polygon needs at least three (x, y) vertices")
    return xy[None]


def pi_nabla(K) -> np.ndarray:
    """``3 x N`` matrix taking vertex values to scaled-monomial coefficients."""
    return projection_batch(_xy(K)).pi_star[0]


def pi_nabla_affine(K, dofs) -> np.ndarray:
    """Projection of ``dofs`` as ``(c, gx, gy)`` with ``p = c + gx x + gy y``."""
    pd = projection_batch(_xy(K))
    a = pd.pi_star[0] @ np.asarray(dofs, dtype=float)
    h = pd.diameter[0]
    gx, gy = a[1] / h, a[2] / h
    xc, yc = pd.centroid[0]
    return np.array([a[0] - gx * xc - gy * yc, gx, gy])


def stab_matrix(K, choice=StabChoice.SV) -> np.ndarray:
    """``S(phi_i - Pi phi_i, phi_j - Pi phi_j)`` as an ``N x N`` matrix."""
    return _stab_from(projection_batch(_xy(K)), StabChoice.parse(choice))[0]


def poisson_local(K, choice=StabChoice.SV) -> np.ndarray:
    choice = StabChoice.parse(choice)
    if choice is StabChoice.NONE:
        raise ValueError("the Poisson form needs a stabilisation (sv or se)")
    return poisson_local_batch(_xy(K), choice)[0]


def fvm_poisson_local(K, seed) -> np.ndarray:
    """Dual-mesh Poisson matrix of one cell with seed ``x*_K``."""
    return fvm_local_batch(_xy(K), np.asarray(seed, dtype=float)[None])[0]


def fvm_flux(u, pair) -> np.ndarray:
    """Normal flux ``delta_E(u) / |E|`` on each edge patch.

    ``u`` holds values at all primary vertices.  Entries for boundary
    edges are included; interior ones carry the scheme's flux.
    """
    if np.any(~np.isfinite(pair.dual_length)):
        e = int(np.flatnonzero(~np.isfinite(pair.dual_length))[0])
        raise MissingPairing(f"edge {e} has no dual edge")
    mesh = pair.primary
    u = np.asarray(u, dtype=float)
    E = mesh.edges
    return (u[E[:, 1]] - u[E[:, 0]]) / mesh.edge_lengths
