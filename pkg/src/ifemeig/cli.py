"""Command line: ``ifemeig {solve,converge,oracle,export}``."""

from __future__ import annotations

import argparse
import os
import sys
import warnings

from .assembly import assemble_system
from .basis import build_bases
from .eigsolve import solve_gevp
from .exceptions import IFEMError
from .export import export_field
from .mesh import load_mesh
from .oracle import CircularProblem, circular_modes
from .study import StudyConfig, kappa_sweep, run_convergence


def _config(args):
    cfg = StudyConfig.load(args.config) if args.config else StudyConfig()
    over = {}
    if getattr(args, "k", None) is not None:
        over["k"] = args.k
    if getattr(args, "levels", None):
        over["levels"] = tuple(args.levels)
    if getattr(args, "sizes", None):
        over["sizes"] = tuple(args.sizes)
    if getattr(args, "out", None):
        over["out"] = args.out
    kap = getattr(args, "kappa", None)
    if isinstance(kap, float):
        over["kappa"] = kap
    elif kap and len(kap) == 1:
        over["kappa"] = kap[0]
    return cfg.with_overrides(**over)


def _mesh_and_bases(cfg, args):
    if getattr(args, "mesh", None):
        with open(args.mesh) as fh:
            mesh = load_mesh(fh.read())
    else:
        size = args.size if getattr(args, "size", None) else cfg.level_sizes()[0]
        mesh = cfg.make_mesh(size)
    return mesh, build_bases(mesh, cfg.make_interface(), on_multiple=cfg.on_multiple)


def _solve(cfg, args):
    mesh, bases = _mesh_and_bases(cfg, args)
    A, M, dofmap = assemble_system(bases, cfg.kappa)
    sol = solve_gevp(A, M, min(cfg.k, dofmap.n_dofs), tol=cfg.tol)
    return mesh, bases, dofmap, sol


def cmd_solve(args):
    cfg = _config(args)
    mesh, _, dofmap, sol = _solve(cfg, args)
    print(f"# {mesh!r} dof={dofmap.n_dofs} kappa={cfg.kappa:g} method={sol.method}")
    print("index,lambda,residual")
    lines = [f"{i + 1},{lam:.12f},{r:.3e}"
             for i, (lam, r) in enumerate(zip(sol.eigenvalues, sol.residuals))]
    print("\n".join(lines))
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "eigenvalues.csv"), "w") as fh:
            fh.write("index,lambda,residual\n" + "\n".join(lines) + "\n")
    return 0


def cmd_converge(args):
    cfg = _config(args)
    kappas = args.kappa if args.kappa and len(args.kappa) > 1 else None
    if kappas is None:
        reports = {cfg.kappa: run_convergence(cfg, args.parallel)}
    else:
        reports = kappa_sweep(cfg, kappas, args.parallel)
    for kap, rep in reports.items():
        print(f"# kappa = {kap:g}")
        print(rep.table())
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            name = "report.csv" if kappas is None else f"report_kappa_{kap:g}.csv"
            with open(os.path.join(cfg.out, name), "w") as fh:
                fh.write(rep.to_csv())
        elif kappas is None:
            print(rep.to_csv(), end="")
    return 0


def oracle_table(prob, count):
    """Text table of exact eigenvalues, one line per distinct value."""
    modes = circular_modes(prob, count)
    out = ["index  lambda            m  multiplicity"]
    i = 0
    while i < len(modes):
        lam, m = modes[i]
        mult = 1 if m == 0 else 2
        out.append(f"{i + 1:<6d} {lam:<17.9f} {m:<2d} {mult}")
        i += mult
    return "\n".join(out)


def cmd_oracle(args):
    cfg = StudyConfig.load(args.config) if args.config else StudyConfig()
    bm, bp = args.beta if args.beta else cfg.beta
    R_I = args.radius if args.radius is not None else cfg.interface_params[-1]
    R_O = args.outer if args.outer is not None else cfg.domain_params[0]
    prob = CircularProblem(R_I=R_I, R_O=R_O, beta_minus=bm, beta_plus=bp,
                           m_max=args.m_max, lambda_max=args.lambda_max)
    count = args.count if args.count is not None else cfg.k
    print(f"# R_I={R_I:g} R_O={R_O:g} beta=({bm:g}, {bp:g})")
    print(oracle_table(prob, count))
    return 0


def cmd_export(args):
    cfg = _config(args)
    _, bases, dofmap, sol = _solve(cfg, args)
    idx = args.index - 1
    if not 0 <= idx < len(sol.eigenvalues):
        raise IFEMError(f"index must lie in 1..{len(sol.eigenvalues)}")
    u = dofmap.expand(sol.eigenvectors[:, idx])
    out = cfg.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"eigenfunction_{args.index}.{args.format}")
    export_field(path, bases, u, name=f"u{args.index}", fmt=args.format)
    print(f"lambda_{args.index} = {sol.eigenvalues[idx]:.12f} -> {path}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ifemeig", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi_kappa=False):
        sp.add_argument("--config", help="key = value config file")
        if multi_kappa:
            sp.add_argument("--kappa", type=float, nargs="+",
                            help="penalty factor; several values run a sweep")
        else:
            sp.add_argument("--kappa", type=float, help="penalty factor")
        sp.add_argument("--levels", type=int, nargs="+", help="refinement exponents")
        sp.add_argument("--sizes", type=int, nargs="+", help="explicit rings / cells per side")
        sp.add_argument("--k", type=int, help="number of eigenvalues")
        sp.add_argument("--out", help="output directory")

    s = sub.add_parser("solve", help="smallest eigenvalues on one mesh")
    common(s)
    s.add_argument("--size", type=int, help="rings or cells per side (default: first level)")
    s.add_argument("--mesh", help="mesh file in the text format")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("converge", help="refinement study with observed orders")
    common(c, multi_kappa=True)
    c.add_argument("--parallel", type=int, default=1, help="worker processes for levels")
    c.set_defaults(func=cmd_converge)

    o = sub.add_parser("oracle", help="exact eigenvalues of the circular interface problem")
    o.add_argument("--config")
    o.add_argument("--beta", type=float, nargs=2, metavar=("MINUS", "PLUS"))
    o.add_argument("--radius", type=float, help="interface radius")
    o.add_argument("--outer", type=float, help="outer radius")
    o.add_argument("--count", type=int)
    o.add_argument("--m-max", type=int)
    o.add_argument("--lambda-max", type=float)
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("export", help="write an eigenfunction as VTK or CSV")
    common(e)
    e.add_argument("--size", type=int)
    e.add_argument("--mesh")
    e.add_argument("--index", type=int, default=1, help="1-based eigenvalue index")
    e.add_argument("--format", choices=("vtk", "csv"), default="vtk")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (IFEMError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

