"""Command line interface: ``eave {mesh-gen,solve,convergence,audit,sweep}``.

Exit codes: 0 on success, 2 when a report contains a FAILED row (or the
audit finds a DMP violation on an M-matrix), 3 on bad arguments,
configuration or input files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .harness.config import load_config
from .harness.experiments import (
    FAMILIES,
    OPTI_LLOYD_ITERS,
    ConfigError,
    run_epsilon_sweep,
    run_monotonicity_audit,
    run_refinement,
)
from .harness.norms import a_norm, inf_norm, interpolant
from .harness.output import emit_plots, format_value
from .harness.problems import make_problem
from .linalg import dump_coordinate, m_matrix_check
from .mesh import (
    DualMeshPair,
    MeshError,
    generate_hexa_dual,
    generate_ncvx,
    generate_triangle_mesh,
    generate_voro_dual,
    generate_voronoi,
    read_mesh,
    write_mesh,
)
from .mesh.generators import TRIANGLE_KINDS
from .schemes import SchemeKind, assemble, solve

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or not all(v > 0.0 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _name_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _generate(family, n, seed, tri_kind):
    if family == "tri":
        return generate_triangle_mesh(n, tri_kind, seed=seed)
    if family == "hexa-dual":
        return generate_hexa_dual(n)
    if family == "voro-dual":
        return generate_voro_dual(n, seed=seed)
    if family == "voro":
        return generate_voronoi(n, 0, seed=seed)
    if family == "opti":
        return generate_voronoi(n, OPTI_LLOYD_ITERS, seed=seed)
    return generate_ncvx(n)


def cmd_mesh_gen(args):
    mesh = _generate(args.family, args.n, args.seed, args.tri_kind)
    write_mesh(mesh, args.out)
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    print(f"{args.family}: {prim.n_cells} cells, {prim.n_vertices} vertices, h = {prim.h:.4e} -> {args.out}")
    return EXIT_OK


def _scheme_mesh(kind, mesh):
    if isinstance(mesh, DualMeshPair) and kind is not SchemeKind.MEAVE:
        return mesh.primary
    return mesh


def cmd_solve(args):
    kind = SchemeKind.parse(args.scheme)
    mesh = _scheme_mesh(kind, read_mesh(args.mesh))
    prob = make_problem(args.problem, args.epsilon)
    system = assemble(kind, mesh, prob.spec, args.stab, args.rule)
    u_h = solve(system)
    u_i = interpolant(prob.u, mesh)
    prim = mesh.primary if isinstance(mesh, DualMeshPair) else mesh
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# x,y: vertex; u_h: discrete solution; u_I: exact solution at the vertex", "x,y,u_h,u_I"]
    for (x, y), a, b in zip(prim.vertices, u_h, u_i):
        lines.append(",".join(format_value(float(v)) for v in (x, y, a, b)))
    Path(f"{prefix}.csv").write_text("\n".join(lines) + "\n")
    if args.dump_matrix:
        dump_coordinate(system.A, f"{prefix}.mtx")
    e = u_i - u_h
    mm = m_matrix_check(system.A)
    print(f"scheme={kind.value} dofs={len(system.free)} m_matrix={str(mm.is_m_matrix).lower()}")
    print(f"err_A={a_norm(e, mesh, args.stab, kind):.6e} err_inf={inf_norm(e):.6e}")
    return EXIT_OK


def cmd_convergence(args):
    cfg = load_config(args.config)
    if args.deterministic:
        cfg.deterministic = True
    if args.out is not None:
        cfg.out_dir = Path(args.out)
    reports = [run_refinement(cfg, eps) for eps in cfg.epsilons]
    paths = emit_plots(reports, cfg.out_dir)
    status = EXIT_OK
    for rep in reports:
        print(f"# {rep.description}")
        for row in rep.rows:
            if row.failed:
                print(f"h={row.h:.4e} FAILED {row.message}")
                status = EXIT_FAILED
            else:
                print(
                    f"h={row.h:.4e} dofs={row.dofs} err_A={row.err_A:.4e} order_A={format_value(row.order_A) or '-'} "
                    f"err_inf={row.err_inf:.4e} order_inf={format_value(row.order_inf) or '-'} "
                    f"m_matrix={str(row.m_matrix).lower()}"
                )
    for p in paths:
        print(f"wrote {p}")
    return status


def cmd_audit(args):
    meshes = {str(p): read_mesh(p) for p in args.mesh}
    rep = run_monotonicity_audit(args.scheme, meshes, args.epsilon, args.stab, args.rule)
    for r in rep.rows:
        print(
            f"{r.scheme:6s} {r.mesh} eps={r.epsilon:g} m_matrix={str(r.m_matrix).lower()} "
            f"poisson_m_matrix={str(r.poisson_m_matrix).lower()} dmp={str(r.dmp_ok).lower()} "
            f"u in [{r.u_min:.4e}, {r.u_max:.4e}]"
        )
    if args.out is not None:
        for p in emit_plots([rep], args.out):
            print(f"wrote {p}")
    return EXIT_FAILED if rep.violations else EXIT_OK


def cmd_sweep(args):
    rep = run_epsilon_sweep(args.epsilons, args.schemes, args.n, args.tri_kind, args.seed, args.stab, args.rule)
    for r in rep.rows:
        print(f"{r.scheme:6s} eps={r.epsilon:g} err_inf={r.err_inf:.4e}")
    if args.out is not None:
        for p in emit_plots([rep], args.out):
            print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eave", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    schemes = [k.value for k in SchemeKind]

    def common(q):
        q.add_argument("--stab", choices=["sv", "se"], default="sv")
        q.add_argument("--rule", choices=["average", "midpoint"], default="average",
                       help="edge average of beta for the Bernoulli argument")

    q = sub.add_parser("mesh-gen", help="generate a mesh file")
    q.add_argument("--family", choices=FAMILIES, required=True)
    q.add_argument("--n", type=int, required=True,
                   help="cells per side (tri, hexa-dual, ncvx) or number of cells (voro, opti, voro-dual)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--tri-kind", choices=TRIANGLE_KINDS, default="uniform-right")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_mesh_gen)

    q = sub.add_parser("solve", help="solve a benchmark problem on a mesh file")
    q.add_argument("--scheme", choices=schemes, required=True)
    q.add_argument("--mesh", required=True)
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--problem", choices=["ex1", "sine"], default="ex1")
    q.add_argument("--out", required=True, help="output prefix")
    q.add_argument("--dump-matrix", action="store_true", help="also write PREFIX.mtx")
    common(q)
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("convergence", help="run a refinement study from a TOML config")
    q.add_argument("--config", required=True)
    q.add_argument("--out", default=None, help="override the output directory")
    q.add_argument("--deterministic", action="store_true", help="write zero timings")
    q.set_defaults(func=cmd_convergence)

    q = sub.add_parser("audit", help="M-matrix and maximum principle checks")
    q.add_argument("--scheme", type=_name_list, required=True, help="comma-separated schemes")
    q.add_argument("--mesh", nargs="+", required=True)
    q.add_argument("--epsilon", type=_float_list, default=[1e-2, 1e-6])
    q.add_argument("--out", default=None)
    common(q)
    q.set_defaults(func=cmd_audit)

    q = sub.add_parser("sweep", help="nodal errors of the boundary-layer problem over epsilon at fixed h")
    q.add_argument("--epsilons", type=_float_list, required=True)
    q.add_argument("--schemes", type=_name_list, default=["fe", "supg", "eafe", "eave", "meave"])
    q.add_argument("--n", type=int, default=8)
    q.add_argument("--tri-kind", choices=TRIANGLE_KINDS, default="perturbed")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default=None)
    common(q)
    q.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MeshError, OSError, TypeError, ValueError) as exc:
        print(f"eave: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
