"""Refinement studies, epsilon sweeps and monotonicity audits."""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..linalg import m_matrix_check
from ..mesh.dual import DualMeshPair, generate_hexa_dual, generate_voro_dual
from ..mesh.generators import generate_ncvx, generate_triangle_mesh, generate_voronoi
from ..schemes import SchemeKind, assemble, solve
from ..vem import StabChoice
from .norms import a_norm, energy_matrix, inf_norm, interpolant
from .problems import PROBLEMS, example1, make_problem

__all__ = [
    "FAMILIES",
    "OPTI_LLOYD_ITERS",
    "ConfigError",
    "ExperimentConfig",
    "ConvergenceRow",
    "ConvergenceReport",
    "SweepRow",
    "SweepReport",
    "AuditRow",
    "AuditReport",
    "make_mesh",
    "observed_order",
    "run_refinement",
    "run_epsilon_sweep",
    "run_monotonicity_audit",
]

FAMILIES = ("tri", "hexa-dual", "voro-dual", "voro", "opti", "ncvx")
DUAL_FAMILIES = ("hexa-dual", "voro-dual")
RANDOM_FAMILIES = ("voro-dual", "voro", "opti")
OPTI_LLOYD_ITERS = 100


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One refinement study.

    ``resolutions`` are inverse nominal mesh sizes ``1/h``.  Structured
    families use ``1/h`` cells per side; random families use ``(1/h)^2``
    cells.
    """

    scheme: SchemeKind
    family: str
    resolutions: list
    epsilons: list = field(default_factory=lambda: [1e-2])
    stab: StabChoice = StabChoice.SV
    rule: str = "average"
    out_dir: Path = Path("out")
    seed: int = 0
    tri_kind: str = "uniform-right"
    problem: str = "ex1"
    deterministic: bool = False

    def __post_init__(self):
        try:
            self.scheme = SchemeKind.parse(self.scheme)
            self.stab = StabChoice.parse(self.stab)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown mesh family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.scheme.needs_triangles and self.family != "tri":
            raise ConfigError(f"{self.scheme.value} runs on the tri family only")
        if self.scheme is SchemeKind.MEAVE and self.family not in DUAL_FAMILIES:
            raise ConfigError("meave needs hexa-dual or voro-dual meshes")
        if self.stab is StabChoice.NONE:
            raise ConfigError("stab must be sv or se")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        self.resolutions = [int(r) for r in self.resolutions]
        if not self.resolutions:
            raise ConfigError("at least one resolution is needed")
        if any(r < 2 for r in self.resolutions):
            raise ConfigError("resolutions must be at least 2")
        if any(b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            raise ConfigError("resolutions must be strictly increasing")
        self.epsilons = [float(e) for e in self.epsilons]
        if not self.epsilons or not all(e > 0.0 and math.isfinite(e) for e in self.epsilons):
            raise ConfigError("epsilon values must be positive")
        self.out_dir = Path(self.out_dir)


@functools.lru_cache(maxsize=32)
def make_mesh(family: str, resolution: int, seed: int = 0, tri_kind: str = "uniform-right"):
    """Mesh of nominal size ``1/resolution``; dual families return a DualMeshPair.

    Results are cached: meshes are immutable and generation is pure.
    """
    r = int(resolution)
    if family == "tri":
        return generate_triangle_mesh(r, tri_kind, seed=seed)
    if family == "hexa-dual":
        return generate_hexa_dual(r)
    if family == "voro-dual":
        return generate_voro_dual(r * r, seed=seed)
    if family == "voro":
        return generate_voronoi(r * r, 0, seed=seed)
    if family == "opti":
        return generate_voronoi(r * r, OPTI_LLOYD_ITERS, seed=seed)
    if family == "ncvx":
        return generate_ncvx(r)
    raise ValueError(f"unknown mesh family {family!r}")


def observed_order(e1: float, e2: float, h1: float, h2: float) -> float:
    """``log(e1/e2) / log(h1/h2)``; NaN when either error is not positive."""
    if not (e1 > 0.0 and e2 > 0.0) or h1 == h2:
        return float("nan")
    return math.log(e1 / e2) / math.log(h1 / h2)


# -- refinement ---------------------------------------------------------------
@dataclass
class ConvergenceRow:
    h: float
    dofs: int = 0
    err_A: float = float("nan")
    order_A: float = float("nan")
    err_inf: float = float("nan")
    order_inf: float = float("nan")
    assemble_ms: float = 0.0
    solve_ms: float = 0.0
    m_matrix: bool | None = None
    failed: bool = False
    message: str = ""
    h_measured: float = float("nan")


@dataclass
class ConvergenceReport:
    name: str
    rows: list
    epsilon: float | None = None
    description: str = ""

    columns = ("h", "dofs", "err_A", "order_A", "err_inf", "order_inf", "assemble_ms", "solve_ms", "m_matrix")
    column_doc = (
        "h: nominal mesh size 1/resolution",
        "dofs: number of unknowns after eliminating Dirichlet vertices",
        "err_A: A-norm of u_I - u_h",
        "order_A: observed order against the previous row",
        "err_inf: max nodal |u_I - u_h|",
        "order_inf: observed order against the previous row",
        "assemble_ms, solve_ms: wall-clock times (0 in deterministic mode)",
        "m_matrix: column M-matrix test of the reduced matrix",
    )

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.rows)

    def orders(self, which: str = "A") -> list:
        return [getattr(r, f"order_{which}") for r in self.rows]

    def records(self):
        for r in self.rows:
            if r.failed:
                yield [r.h, "FAILED", "", "", "", "", "", "", r.message.replace(",", ";")]
                continue
            yield [r.h, r.dofs, r.err_A, r.order_A, r.err_inf, r.order_inf, r.assemble_ms, r.solve_ms, r.m_matrix]


def _fill_orders(rows):
    prev = None
    for r in rows:
        if r.failed:
            prev = None
            continue
        if prev is not None:
            r.order_A = observed_order(prev.err_A, r.err_A, prev.h, r.h)
            r.order_inf = observed_order(prev.err_inf, r.err_inf, prev.h, r.h)
        prev = r


def _scheme_mesh(kind, mesh):
    if kind is SchemeKind.MEAVE or not isinstance(mesh, DualMeshPair):
        return mesh
    return mesh.primary


def run_refinement(config: ExperimentConfig, epsilon: float | None = None, seed: int | None = None):
    """Errors of ``u_h`` against the nodal interpolant on each resolution.

    A row whose mesh generation, assembly or solve raises is marked
    FAILED and the study continues with the next resolution.
    """
    eps = config.epsilons[0] if epsilon is None else float(epsilon)
    seed = config.seed if seed is None else seed
    prob = make_problem(config.problem, eps)
    rows = []
    for r in config.resolutions:
        row = ConvergenceRow(h=1.0 / r)
        try:
            mesh = make_mesh(config.family, r, seed, config.tri_kind)
            mesh = _scheme_mesh(config.scheme, mesh)
            t0 = time.perf_counter()
            system = assemble(config.scheme, mesh, prob.spec, config.stab, config.rule)
            t1 = time.perf_counter()
            u_h = solve(system)
            t2 = time.perf_counter()
            e = interpolant(prob.u, mesh) - u_h
            row.dofs = len(system.free)
            row.m_matrix = m_matrix_check(system.A).is_m_matrix
            row.err_A = a_norm(e, mesh, config.stab, config.scheme)
            row.err_inf = inf_norm(e)
            prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
            row.h_measured = prim.h
            if not config.deterministic:
                row.assemble_ms = 1e3 * (t1 - t0)
                row.solve_ms = 1e3 * (t2 - t1)
        except Exception as exc:  # noqa: BLE001 - any failure marks the row
            row.failed = True
            row.message = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    _fill_orders(rows)
    name = f"{config.scheme.value}_{config.family}_eps{eps:g}"
    desc = f"scheme={config.scheme.value} family={config.family} stab={config.stab.value} epsilon={eps:g} seed={seed}"
    return ConvergenceReport(name, rows, eps, desc)


# -- epsilon sweep ------------------------------------------------------------
SWEEP_SCHEMES = ("fe", "supg", "eafe", "eave", "meave")


@dataclass
class SweepRow:
    scheme: str
    epsilon: float
    err_inf: float
    u_max: float
    u_min: float


@dataclass
class SweepReport:
    name: str
    rows: list
    description: str = ""

    columns = ("scheme", "epsilon", "err_inf", "u_max", "u_min")
    column_doc = (
        "scheme: fe, supg, eafe (triangles) or eave, meave (hexa-dual)",
        "epsilon: diffusion coefficient",
        "err_inf: max nodal |u_I - u_h|",
        "u_max, u_min: extreme nodal values of u_h",
    )

    def errors(self, scheme: str) -> np.ndarray:
        return np.array([r.err_inf for r in self.rows if r.scheme == scheme])

    def records(self):
        for r in self.rows:
            yield [r.scheme, r.epsilon, r.err_inf, r.u_max, r.u_min]


def run_epsilon_sweep(
    epsilons,
    schemes=SWEEP_SCHEMES,
    resolution: int = 8,
    tri_kind: str = "perturbed",
    seed: int = 0,
    stab=StabChoice.SV,
    rule: str = "average",
) -> SweepReport:
    """Nodal errors of the boundary-layer problem at a fixed mesh size for each epsilon.

    Triangle schemes run on the ``tri_kind`` triangulation, the polygonal
    schemes on ``hexa-dual``, both with ``resolution`` cells per side.
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons or not all(e > 0.0 for e in epsilons):
        raise ConfigError("epsilon values must be positive")
    rows = []
    for name in schemes:
        kind = SchemeKind.parse(name)
        if kind.needs_triangles:
            mesh = make_mesh("tri", resolution, seed, tri_kind)
        else:
            mesh = _scheme_mesh(kind, make_mesh("hexa-dual", resolution))
        for eps in epsilons:
            prob = example1(eps)
            u_h = solve(assemble(kind, mesh, prob.spec, stab, rule))
            e = interpolant(prob.u, mesh) - u_h
            rows.append(SweepRow(kind.value, eps, inf_norm(e), float(u_h.max()), float(u_h.min())))
    desc = f"resolution={resolution} tri_kind={tri_kind} seed={seed} stab={StabChoice.parse(stab).value}"
    return SweepReport(f"sweep_h{resolution}", rows, desc)


# -- monotonicity audit -------------------------------------------------------
@dataclass
class AuditRow:
    scheme: str
    mesh: str
    epsilon: float
    m_matrix: bool
    poisson_m_matrix: bool
    dmp_ok: bool
    u_min: float
    u_max: float
    g_min: float
    g_max: float
    detail: str = ""


@dataclass
class AuditReport:
    name: str
    rows: list
    description: str = ""

    columns = ("scheme", "mesh", "epsilon", "m_matrix", "poisson_m_matrix", "dmp_ok", "u_min", "u_max", "g_min", "g_max")
    column_doc = (
        "m_matrix: column M-matrix test of the reduced scheme matrix",
        "poisson_m_matrix: same test for the scheme's Poisson matrix (beta = 0)",
        "dmp_ok: min g - tol <= u_h <= max g + tol for the boundary-layer problem (f = 0)",
        "u_min, u_max, g_min, g_max: extreme values of u_h and of the boundary data",
    )

    @property
    def violations(self) -> list:
        """Rows whose matrix passed the M-matrix test but whose solution breaks the DMP."""
        return [r for r in self.rows if r.m_matrix and not r.dmp_ok]

    def records(self):
        for r in self.rows:
            yield [r.scheme, r.mesh, r.epsilon, r.m_matrix, r.poisson_m_matrix, r.dmp_ok, r.u_min, r.u_max, r.g_min, r.g_max]


def poisson_m_matrix(kind, mesh, stab=StabChoice.SV) -> bool:
    """M-matrix test of the Poisson matrix of a scheme restricted to interior vertices."""
    kind = SchemeKind.parse(kind)
    A = energy_matrix(mesh, stab, kind)
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    free = np.flatnonzero(~prim.boundary_flags)
    return m_matrix_check(A[free][:, free]).is_m_matrix


def run_monotonicity_audit(
    schemes, meshes, epsilons, stab=StabChoice.SV, rule: str = "average", dmp_tol: float = 1e-10
) -> AuditReport:
    """M-matrix and discrete maximum principle checks.

    ``meshes`` maps a label to a mesh (a DualMeshPair is required for
    M-EAVE).  Schemes that do not apply to a mesh are skipped.
    """
    rows = []
    for label, mesh in meshes.items():
        for name in schemes:
            kind = SchemeKind.parse(name)
            is_pair = isinstance(mesh, DualMeshPair)
            prim = mesh.primary if is_pair else mesh
            if kind is SchemeKind.MEAVE and not is_pair:
                continue
            if kind.needs_triangles and np.any(np.diff(prim.cell_ptr) != 3):
                continue
            m = _scheme_mesh(kind, mesh)
            pm = poisson_m_matrix(kind, m, stab)
            for eps in epsilons:
                prob = example1(float(eps))
                system = assemble(kind, m, prob.spec, stab, rule)
                rep = m_matrix_check(system.A)
                u_h = solve(system)
                gb = system.boundary_values
                ok = bool(u_h.min() >= gb.min() - dmp_tol and u_h.max() <= gb.max() + dmp_tol)
                rows.append(
                    AuditRow(
                        kind.value, label, float(eps), rep.is_m_matrix, pm, ok,
                        float(u_h.min()), float(u_h.max()), float(gb.min()), float(gb.max()),
                        "" if rep.is_m_matrix else rep.summary(),
                    )
                )
    return AuditReport("audit", rows)
