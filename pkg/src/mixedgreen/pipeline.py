"""Named checks run by ``mixedgreen verify``.

Each runner takes a Context and returns a list of VerificationReports.
Random families are drawn from the run seed, so reports are reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from . import mixed_solver, neumann_solver
from .analysis import (bmo_norm, fit_log_singularity, meyers_exponent, neumann_duality, random_atom_specs,
                       verify_atomic_pairing, verify_green_identity, verify_inequality, verify_kernel_norms,
                       verify_representation, verify_symmetry)
from .analysis.common import random_points, random_trig
from .analysis.fits import log_window
from .analysis.inequalities import KINDS
from .errors import NotApplicable
from .geometry import check_corkscrew
from .green import green_fields, neumann_green_fields
from .meshing import triangulate
from .operators import assemble, assemble_load, verify_ellipticity
from .report import VerificationReport

SLOPE = 1.0 / (2.0 * np.pi)


@dataclass
class Context:
    dom: object
    cf: object
    h: float
    rho: float
    seed: int = 0
    poles: list = field(default_factory=list)
    f: object = None
    fN: object = None
    levels: int = 3
    _mesh: object = None
    _sys: object = None

    @property
    def mesh(self):
        if self._mesh is None:
            self._mesh = triangulate(self.dom, self.h)
        return self._mesh

    @property
    def sys(self):
        if self._sys is None:
            self._sys = assemble(self.mesh, self.cf)
        return self._sys

    def rng(self, salt):
        return np.random.default_rng([self.seed, salt])

    def interior_poles(self, n, salt):
        """Configured poles, or seeded random points at least 4 rho from the boundary."""
        if self.poles:
            return [np.asarray(p, dtype=float) for p in self.poles[:n]]
        return list(random_points(self.rng(salt), self.dom, n, margin=4.0 * self.rho))


def _green(ctx, poles, operator="L*"):
    if ctx.dom.has_dirichlet:
        return green_fields(ctx.mesh, ctx.cf, ctx.dom, "mixed", poles, ctx.rho, sys=ctx.sys, operator=operator)
    if operator != "L*":
        raise NotApplicable("forward-solve Green fields need a nonempty D")
    return neumann_green_fields(ctx.mesh, ctx.cf, ctx.dom, poles, ctx.rho, sys=ctx.sys)


def check_inequality(kind):
    def run(ctx):
        return [verify_inequality(kind, {"dom": ctx.dom, "cf": ctx.cf, "h": ctx.h, "seed": ctx.seed})]

    return run


def check_green_identity(ctx, draws=20):
    if not ctx.dom.has_dirichlet:
        return [neumann_duality(ctx.sys, ctx.dom, draws=draws, seed=ctx.seed)]
    rng = ctx.rng(1)
    m, L = ctx.cf.m, ctx.dom.d
    loads, data = [], []
    for _ in range(draws):
        pair = [(random_trig(rng, m, length=L), random_trig(rng, m, length=L)) for _ in range(2)]
        data.append(pair)
    F = np.column_stack([assemble_load(ctx.mesh, f, fN, m=m) for (f, fN), _ in data])
    G = np.column_stack([assemble_load(ctx.mesh, g, gN, m=m) for _, (g, gN) in data])
    U, _ = mixed_solver.solve_raw(ctx.sys, F, "L")
    W, _ = mixed_solver.solve_raw(ctx.sys, G, "L*")
    res = []
    for k, pair in enumerate(data):
        u = mixed_solver.FemSolution(U[:, k].reshape(-1, m), ctx.mesh, "L")
        w = mixed_solver.FemSolution(W[:, k].reshape(-1, m), ctx.mesh, "L*")
        res.append(verify_green_identity(u, w, pair))
    worst = float(max(res))
    return [VerificationReport("green_identity", worst <= 1e-8,
                               {"draws": draws, "seed": ctx.seed, "h": ctx.mesh.h},
                               {"max_residual": worst}, {"max_residual": 1e-8},
                               [{"draw": k, "residual": float(r)} for k, r in enumerate(res)])]


def check_symmetry(ctx, n_pairs=10):
    if not ctx.dom.has_dirichlet:
        raise NotApplicable("symmetry check runs on mixed problems (D nonempty)")
    rng = ctx.rng(2)
    sep = max(4.0 * ctx.rho, 0.15 * ctx.dom.d)
    pairs = []
    for _ in range(1000):
        x, y = random_points(rng, ctx.dom, 2, margin=ctx.rho)
        if np.linalg.norm(x - y) >= sep:
            pairs.append((x, y))
        if len(pairs) == n_pairs:
            break
    if len(pairs) < n_pairs:
        raise NotApplicable("domain too small for separated pairs")
    poles = [p for pr in pairs for p in pr]
    fam = _green(ctx, poles, "L*")
    famt = fam if ctx.cf.is_symmetric else _green(ctx, poles, "L")
    return [verify_symmetry(fam, famt, pairs)]


def check_representation(ctx):
    poles = ctx.interior_poles(5, 3)
    f = ctx.f if ctx.f is not None or ctx.fN is not None else _unit(ctx.cf.m)
    return [verify_representation(ctx.mesh, ctx.cf, ctx.dom, f, ctx.fN, poles, ctx.rho, sys=ctx.sys)]


def _unit(m):
    return lambda p: np.ones((len(np.atleast_2d(p)), m))


def check_log_slope(ctx):
    x = ctx.interior_poles(1, 4)[0]
    gf = _green(ctx, [x])[0]
    lo, hi = log_window(gf)
    hi = min(hi, 0.9 * float(ctx.dom.boundary_distance(x[None, :])[0][0]))
    if hi <= lo * 1.5:
        raise NotApplicable("log window [4 rho, d/4] is empty at this pole")
    slopes, _, r2 = fit_log_singularity(gf, np.geomspace(lo, hi, 6))
    q = {"slope": slopes.tolist(), "r2": r2.tolist(), "pole": [float(x[0]), float(x[1])]}
    th = {}
    passed = bool(np.all(np.isfinite(slopes)))
    if ctx.cf.kind == "scalar_laplace":
        th = {"slope": SLOPE, "relative_tolerance": 0.1}
        passed = passed and abs(slopes[0] / SLOPE - 1.0) <= 0.1
    return [VerificationReport("log_slope", passed, {"h": ctx.mesh.h, "rho": ctx.rho}, q, th)]


def check_bmo(ctx):
    x = ctx.interior_poles(1, 5)[0]
    vals = []
    for k in (4, 8, 16):
        rho = k * ctx.mesh.h
        if ctx.dom.has_dirichlet:
            gf = green_fields(ctx.mesh, ctx.cf, ctx.dom, "mixed", [x], rho, sys=ctx.sys)[0]
        else:
            gf = neumann_green_fields(ctx.mesh, ctx.cf, ctx.dom, [x], rho, sys=ctx.sys)[0]
        vals.append(max(bmo_norm(c, ctx.dom).value for c in gf.columns))
    factor = max(vals) / min(vals) if min(vals) > 0 else np.inf
    return [VerificationReport("bmo", bool(factor <= 1.5), {"h": ctx.mesh.h, "rho_multiples": [4, 8, 16]},
                               {"bmo": vals, "factor": float(factor)}, {"factor": 1.5})]


def check_meyers(ctx):
    hs = [ctx.h * 0.5 ** k for k in range(ctx.levels)]
    f = ctx.f if ctx.f is not None or ctx.fN is not None else _unit(ctx.cf.m)
    return [meyers_exponent(ctx.dom, ctx.cf, hs, np.arange(2.5, 8.0, 0.5), f=f, f_N=ctx.fN)]


def check_kernel(ctx):
    if ctx.dom.has_dirichlet:
        raise NotApplicable("kernel check needs D empty")
    V = neumann_solver.compute_kernel(ctx.sys, "V")
    Vs = neumann_solver.compute_kernel(ctx.sys, "V*")
    dist = neumann_solver.span_distance(V, Vs, ctx.sys.boundary_mass) if ctx.cf.is_symmetric else float("nan")
    q = {"dim_V": V.dim, "dim_Vstar": Vs.dim, "gap_V": V.gap, "gap_Vstar": Vs.gap,
         "gram_condition": V.gram_condition, "span_distance": dist}
    ok = V.dim == Vs.dim and min(V.gap, Vs.gap) >= 10.0
    return [VerificationReport("kernel", ok, {"h": ctx.mesh.h, "m": ctx.cf.m}, q, {"gap": 10.0})]


def check_neumann_duality(ctx):
    if ctx.dom.has_dirichlet:
        raise NotApplicable("neumann duality needs D empty")
    return [neumann_duality(ctx.sys, ctx.dom, seed=ctx.seed)]


def check_kernel_norms(ctx):
    if ctx.dom.has_dirichlet:
        raise NotApplicable("kernel norms need D empty")
    return [verify_kernel_norms(ctx.dom, ctx.cf, ctx.h)]


def check_atomic_pairing(ctx):
    if not ctx.dom.has_dirichlet:
        raise NotApplicable("atomic pairing check needs a nonempty D")
    x = ctx.interior_poles(1, 6)[0]
    specs = random_atom_specs(ctx.rng(7), ctx.dom, 20, (ctx.rho, ctx.dom.r0 * 0.5), ctx.cf.m)
    return [verify_atomic_pairing(ctx.mesh, ctx.cf, ctx.dom, x, ctx.rho, specs, sys=ctx.sys)]


CHECKS = {
    **{k: check_inequality(k) for k in KINDS},
    "green_identity": check_green_identity,
    "symmetry": check_symmetry,
    "representation": check_representation,
    "log_slope": check_log_slope,
    "bmo": check_bmo,
    "meyers": check_meyers,
    "kernel": check_kernel,
    "neumann_duality": check_neumann_duality,
    "kernel_norms": check_kernel_norms,
    "atomic_pairing": check_atomic_pairing,
    "corkscrew": lambda ctx: [check_corkscrew(ctx.dom)],
    "ellipticity": lambda ctx: [verify_ellipticity(ctx.cf, ctx.dom)],
}


def run_checks(ctx, names):
    out = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(name)
        out.extend(CHECKS[name](ctx))
    return out
