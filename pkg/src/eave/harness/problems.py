"""Benchmark problems with closed-form solutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..schemes import ProblemSpec

__all__ = ["Problem", "exact_solution_ex1", "example1", "sine_problem", "PROBLEMS", "make_problem"]


@dataclass(frozen=True)
class Problem:
    name: str
    spec: ProblemSpec
    u: Callable  # (N, 2) -> (N,)
    grad: Callable | None = None  # (N, 2) -> (N, 2)


def exact_solution_ex1(epsilon: float):
    """Boundary-layer solution ``x (1 - e^{(y-1)/eps}) / (1 - e^{-2/eps})``.

    Returns ``(u, g)``; the Dirichlet data is the trace of ``u`` so both
    are the same callable.  Only non-positive exponents are evaluated.
    """
    eps = float(epsilon)
    if not eps > 0.0:
        raise ValueError(f"epsilon = {epsilon!r} must be positive")
    denom = -np.expm1(-2.0 / eps)

    def u(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        x, y = p[:, 0], p[:, 1]
        return x * -np.expm1(np.minimum(y - 1.0, 0.0) / eps) / denom

    return u, u


def example1(epsilon: float) -> Problem:
    """``-div(eps grad u + beta u) = 0`` with ``beta = (0, -1)``."""
    u, g = exact_solution_ex1(epsilon)
    spec = ProblemSpec.constant(epsilon, beta=(0.0, -1.0), f=0.0, g=g)
    return Problem("ex1", spec, u)


def sine_problem(epsilon: float = 1.0) -> Problem:
    """Pure diffusion with ``u = sin(pi x) sin(pi y)`` and homogeneous data."""
    eps = float(epsilon)
    pi = np.pi

    def u(p):
        p = np.atleast_2d(p)
        return np.sin(pi * p[:, 0]) * np.sin(pi * p[:, 1])

    def grad(p):
        p = np.atleast_2d(p)
        sx, sy = np.sin(pi * p[:, 0]), np.sin(pi * p[:, 1])
        cx, cy = np.cos(pi * p[:, 0]), np.cos(pi * p[:, 1])
        return pi * np.stack([cx * sy, sx * cy], axis=1)

    spec = ProblemSpec.constant(eps, f=lambda p: 2.0 * pi**2 * eps * u(p), g=0.0)
    return Problem("sine", spec, u, grad)


PROBLEMS = {"ex1": example1, "sine": sine_problem}


def make_problem(name: str, epsilon: float) -> Problem:
    try:
        return PROBLEMS[name](epsilon)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
