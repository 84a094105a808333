"""Command-line entry point.

Exit codes: 0 success, 1 a check failed or a computation broke down,
2 usage or configuration error.  Failures print one line
``mixedgreen: error: <reason>`` on stderr.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__, mixed_solver, neumann_solver
from .config import build_config, load_config, parse_points, split_top, validate_numbers
from .errors import (CoefficientError, ConfigError, DomainError, MixedGreenError, NotApplicable,
                     ResolutionError)
from .geometry import load_domain
from .green import GreenTable, fundamental_solution, green_fields, neumann_green_fields
from .meshing import format_mesh, triangulate
from .mixed_solver import format_solution
from .operators import assemble, assemble_load
from .pipeline import CHECKS, Context, run_checks

USAGE_ERRORS = (ConfigError, DomainError, ResolutionError, CoefficientError, NotApplicable)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"usage: {message}")


def build_parser():
    p = _Parser(prog="mixedgreen", description="Green functions for mixed boundary value problems.")
    p.add_argument("--version", action="version", version=f"mixedgreen {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "green", "neumann-green", "fundamental", "verify", "report"):
        s = sub.add_parser(name)
        s.add_argument("--domain")
        s.add_argument("--config")
        s.add_argument("--out")
        s.add_argument("--h", type=float)
        s.add_argument("--rho", type=float)
        s.add_argument("--pole", action="append", default=[], help="x,y (repeatable)")
        s.add_argument("--bc", choices=("mixed", "dirichlet", "neumann"))
        s.add_argument("--checks")
        s.add_argument("--seed", type=int)
        s.add_argument("--levels", type=int)
    return p


def resolve_config(args):
    """Merge the config file with flags; numbers are validated before any file is read."""
    raw, base = {}, "."
    if args.config is not None and os.path.isfile(args.config):
        raw, base = load_config(args.config)
    cfg = build_config(raw, base)
    if args.domain is not None:
        cfg.domain = args.domain
    for key in ("h", "rho", "seed", "levels", "bc", "out"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.pole:
        cfg.poles = parse_points(";".join(args.pole))
    if args.checks is not None:
        cfg.checks = split_top(args.checks)
    validate_numbers(cfg)
    if args.config is not None and not os.path.isfile(args.config):
        raise ConfigError("config: config file not found")
    return cfg


def header(cfg):
    return f"# mixedgreen {__version__} config={cfg.hash()} seed={cfg.seed}"


def _write(cfg, name, text):
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w") as fh:
        fh.write(header(cfg) + "\n")
        fh.write(text if text.endswith("\n") else text + "\n")
    return path


def _domain(cfg):
    if not cfg.domain:
        raise ConfigError("config: no domain given")
    if not os.path.isfile(cfg.domain):
        raise ConfigError("config: domain file not found")
    dom = load_domain(cfg.domain)
    if cfg.h >= dom.r0:
        raise ConfigError(f"config: h must be below r0 = {dom.r0:g}")
    return dom


def _rho(cfg):
    return 4.0 * cfg.h if cfg.rho is None else cfg.rho


def cmd_solve(cfg):
    dom = _domain(cfg)
    cf = cfg.coefficients(dom)
    f, fN = cfg.data()
    mesh = triangulate(dom, cfg.h)
    sys_ = assemble(mesh, cf)
    if dom.has_dirichlet:
        sol = mixed_solver.solve_mixed(sys_, dom, assemble_load(mesh, f, fN, m=cf.m), "L", "config data")
    else:
        sol = neumann_solver.solve_neumann(sys_, dom, f, fN, "L", project=True)
    _write(cfg, "mesh.txt", format_mesh(mesh))
    _write(cfg, "solution.csv", format_solution(sol))
    print(f"solve: {mesh.n_nodes} nodes, residual {sol.residual:.3g}")
    return 0


def _table_points(cfg, mesh):
    return np.asarray(cfg.points, dtype=float) if cfg.points else mesh.nodes


def cmd_green(cfg, neumann=False):
    if not cfg.poles:
        raise ConfigError("config: no poles given")
    dom = _domain(cfg)
    cf = cfg.coefficients(dom)
    mesh = triangulate(dom, cfg.h)
    bc = "neumann" if neumann else (cfg.bc or ("dirichlet" if dom.is_dirichlet else "mixed"))
    if neumann or bc == "neumann":
        fields = neumann_green_fields(mesh, cf, dom, cfg.poles, _rho(cfg))
        name = "neumann_green.csv"
    else:
        fields = green_fields(mesh, cf, dom, bc, cfg.poles, _rho(cfg))
        name = "green.csv"
    table = GreenTable.from_fields(fields, _table_points(cfg, mesh))
    _write(cfg, "mesh.txt", format_mesh(mesh))
    _write(cfg, name, table.to_csv())
    print(f"{name}: {len(fields)} poles, {len(table.rows)} rows")
    return 0


def cmd_fundamental(cfg):
    x = cfg.poles[0] if cfg.poles else (0.0, 0.0)
    rho = 0.5 if cfg.rho is None else cfg.rho
    cf = cfg.coefficients()
    gf = fundamental_solution(cf, x, rho, R=cfg.R)
    if cfg.points:
        pts = np.asarray(cfg.points, dtype=float)
    else:
        th = 2.0 * np.pi * np.arange(8) / 8
        pts = np.vstack([np.asarray(x) + r * np.column_stack([np.cos(th), np.sin(th)]) for r in (1.0, 1.5, 2.0)])
    table = GreenTable.from_fields([gf], pts)
    _write(cfg, "fundamental.csv", table.to_csv())
    print(f"fundamental: R={gf.R:g}, integral of data {gf.meta['integral_f']:.3g}")
    return 0


def cmd_verify(cfg):
    if not cfg.checks:
        raise ConfigError("config: no checks given")
    unknown = [c for c in cfg.checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"config: unknown check {unknown[0]!r}")
    dom = _domain(cfg)
    cf = cfg.coefficients(dom)
    f, fN = cfg.data()
    ctx = Context(dom, cf, cfg.h, _rho(cfg), cfg.seed, cfg.poles, f, fN, cfg.levels)
    reports = run_checks(ctx, cfg.checks)
    _write(cfg, "report.txt", "\n".join(r.to_text() for r in reports))
    rows = ["check,quantity,value"] + [",".join(row) for r in reports for row in r.csv_rows()]
    _write(cfg, "report.csv", "\n".join(rows))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.kind}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_report(cfg):
    path = os.path.join(cfg.out, "report.csv")
    if not os.path.isfile(path):
        raise ConfigError("config: report.csv not found in output directory")
    status = {}
    with open(path) as fh:
        for line in fh:
            parts = line.rstrip("\n").split(",", 2)
            if len(parts) == 3 and parts[1] == "passed":
                status[parts[0]] = status.get(parts[0], True) and parts[2] == "true"
    for kind, ok in status.items():
        print(f"{'PASS' if ok else 'FAIL'} {kind}")
    return 0 if status and all(status.values()) else 1


COMMANDS = {
    "solve": cmd_solve,
    "green": cmd_green,
    "neumann-green": lambda cfg: cmd_green(cfg, neumann=True),
    "fundamental": cmd_fundamental,
    "verify": cmd_verify,
    "report": cmd_report,
}


def run_command(argv):
    """Run one subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        return _fail(str(exc), 2)
    except USAGE_ERRORS as exc:
        return _fail(exc.reason, 2)
    except MixedGreenError as exc:
        return _fail(exc.reason, 1)
    except OSError as exc:
        return _fail(f"io: {exc.strerror or exc}", 2)


def _fail(reason, code):
    print(f"mixedgreen: error: {reason}", file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
