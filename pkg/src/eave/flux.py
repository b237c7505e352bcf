"""Exponential-fitting primitives shared by every edge-averaged scheme.

Along an edge from ``x_i`` to ``x_j`` with constant ``alpha_E`` and
``beta_E`` the convective-diffusive flux is written as a pure diffusion
flux of ``exp(psi_E) u`` with coefficient ``alpha_E exp(-psi_E)``.  Its
harmonic average along the edge has a closed form in terms of the
Bernoulli function ``B(z) = z / (exp(z) - 1)``, which gives the two
positive multipliers returned by :func:`edge_coefficients`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NonpositiveDiffusion",
    "EdgeData",
    "EdgeCoefficients",
    "EdgePotential",
    "bernoulli",
    "edge_potential",
    "harmonic_average",
    "edge_flux",
    "edge_coefficients",
    "edge_average_coefficients",
    "batch_edge_coefficients",
]

# Below this |z| the truncated series is exact to machine precision.
SERIES_THRESHOLD = 1e-4
# exp(z) overflows near 709.78.
OVERFLOW_THRESHOLD = 700.0


class NonpositiveDiffusion(ValueError):
    """The averaged diffusion coefficient on an edge is not positive."""


def bernoulli(z):
    """Bernoulli function ``z / (exp(z) - 1)`` with ``B(0) = 1``.

    Accepts scalars or arrays.  Small arguments use the series
    ``1 - z/2 + z**2/12 - z**4/720``; large positive arguments use
    ``z exp(-z) / (1 - exp(-z))`` so nothing overflows.  For very large
    ``z`` the result underflows to zero, never to NaN.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_THRESHOLD
    big = z > OVERFLOW_THRESHOLD
    mid = ~(small | big)

    zs = z[small]
    z2 = zs * zs
    out[small] = 1.0 - 0.5 * zs + z2 / 12.0 - z2 * z2 / 720.0

    zm = z[mid]
    out[mid] = zm / np.expm1(zm)

    zb = z[big]
    with np.errstate(under="ignore"):
        out[big] = zb * np.exp(-zb) / -np.expm1(-zb)

    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class EdgeData:
    """Endpoints of an edge plus the constant coefficients frozen on it."""

    xi: tuple[float, float]
    xj: tuple[float, float]
    alpha: float
    beta: tuple[float, float]

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise NonpositiveDiffusion(f"alpha_E = {self.alpha!r} must be positive")
        if tuple(self.xi) == tuple(self.xj):
            raise ValueError("edge endpoints coincide")

    @property
    def tangent(self) -> np.ndarray:
        return np.asarray(self.xj, dtype=float) - np.asarray(self.xi, dtype=float)


@dataclass(frozen=True)
class EdgeCoefficients:
    """``kbar * delta(exp(psi) u) = c_ij * u(x_j) - c_ji * u(x_i)``."""

    c_ij: float
    c_ji: float


@dataclass(frozen=True)
class EdgePotential:
    """Linear potential ``psi(x) = grad . (x - ref) + shift``."""

    grad: np.ndarray
    ref: np.ndarray
    shift: float = 0.0

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.grad @ (x - self.ref)) + self.shift


def edge_potential(edge: EdgeData, shift: float = 0.0) -> EdgePotential:
    """``psi_E(x) = alpha_E^{-1} beta_E . x`` up to the additive constant.

    The reference point is ``x_i``, so with ``shift=0`` the potential
    vanishes at the first endpoint.
    """
    grad = np.asarray(edge.beta, dtype=float) / edge.alpha
    return EdgePotential(grad=grad, ref=np.asarray(edge.xi, dtype=float), shift=shift)


def harmonic_average(edge: EdgeData, psi: EdgePotential | None = None) -> float:
    """Harmonic average of ``alpha_E exp(-psi_E)`` along the edge.

    For a linear potential, ``(|E|^{-1} int_E exp(psi)/alpha ds)^{-1}``
    equals ``alpha_E B(b) exp(-psi(x_i))`` with
    ``b = psi(x_j) - psi(x_i)``.
    """
    if psi is None:
        psi = edge_potential(edge)
    psi_i = psi(edge.xi)
    b = psi(edge.xj) - psi_i
    return edge.alpha * bernoulli(b) * np.exp(-psi_i)


def edge_flux(edge: EdgeData, ui: float, uj: float, psi: EdgePotential | None = None) -> float:
    """``kbar_E * delta_E(exp(psi_E) u)`` evaluated directly from its definition."""
    if psi is None:
        psi = edge_potential(edge)
    kbar = harmonic_average(edge, psi)
    return kbar * (np.exp(psi(edge.xj)) * uj - np.exp(psi(edge.xi)) * ui)


def edge_coefficients(edge: EdgeData) -> EdgeCoefficients:
    b = float(np.asarray(edge.beta, dtype=float) @ edge.tangent) / edge.alpha
    return EdgeCoefficients(
        c_ij=edge.alpha * bernoulli(-b),
        c_ji=edge.alpha * bernoulli(b),
    )


def edge_average_coefficients(alpha, beta, xi, xj, rule: str = "average") -> EdgeData:
    """Freeze ``alpha`` and ``beta`` on the edge ``x_i x_j``.

    ``rule="average"`` takes the mean of the endpoint values;
    ``rule="midpoint"`` evaluates at the edge midpoint.  ``alpha`` and
    ``beta`` are callables on ``(N, 2)`` point arrays.
    """
    pts = np.array([xi, xj], dtype=float)
    a, b = _frozen(alpha, beta, pts[None, 0], pts[None, 1], rule)
    a = float(a[0])
    if not a > 0.0:
        raise NonpositiveDiffusion(f"edge average of alpha is {a!r}")
    return EdgeData(xi=tuple(pts[0]), xj=tuple(pts[1]), alpha=a, beta=tuple(b[0]))


def _frozen(alpha, beta, xi, xj, rule):
    if rule == "average":
        a = 0.5 * (alpha(xi) + alpha(xj))
        b = 0.5 * (beta(xi) + beta(xj))
    elif rule == "midpoint":
        mid = 0.5 * (xi + xj)
        a = alpha(mid)
        b = beta(mid)
    else:
        raise ValueError(f"unknown coefficient rule {rule!r}")
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def batch_edge_coefficients(alpha, beta, xi, xj, rule: str = "average"):
    """Vectorised :func:`edge_coefficients` over arrays of edges.

    ``xi`` and ``xj`` are ``(M, 2)``.  Returns ``(c_ij, c_ji)`` arrays.
    """
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    a, b = _frozen(alpha, beta, xi, xj, rule)
    a = np.broadcast_to(a, (len(xi),))
    if np.any(~(a > 0.0)):
        raise NonpositiveDiffusion("edge average of alpha is not positive")
    b = np.broadcast_to(b, xi.shape)
    z = np.einsum("ij,ij->i", b, xj - xi) / a
    return a * bernoulli(-z), a * bernoulli(z)
