"""Cross-identities between independent computations.

Symmetry compares Green fields built from adjoint solves with those built
from forward solves; the representation check compares Green quadrature
with a direct solve; the Green identity and its Neumann analogue compare
two pairings of forward and adjoint solutions.
"""

import numpy as np
import scipy.linalg as sla

from .. import mixed_solver, neumann_solver
from ..green import green_fields, neumann_green_fields, representation_solve
from ..geometry import local_domain
from ..meshing import disk_rule, triangulate, uniform_refine
from ..operators import assemble, assemble_load, nodal_gradients
from ..report import VerificationReport
from .bmo import Atom
from .common import as_matrix, random_trig

EPS = 1e-14
IDENTITY_TOL = 1e-8


def _lookup(fields, x):
    for gf in fields:
        if np.allclose(gf.x, x, atol=1e-12):
            return gf
    raise KeyError(f"missing Green field at pole {tuple(np.ravel(x))}")


def _swap_discrepancy(fam, famt, x, y):
    """G(x, y) - G~(y, x)^T as an m x m matrix."""
    a = _lookup(fam, x)(np.asarray(y, dtype=float)[None, :])[0]
    b = _lookup(famt, y)(np.asarray(x, dtype=float)[None, :])[0]
    return a - b.T


def verify_symmetry(gf_Lstar, gf_L, pairs, tol=5e-3):
    """max over pairs and (alpha, beta) of |G^{alpha beta}(x, y) - G~^{beta alpha}(y, x)|.

    ``gf_Lstar`` holds fields from adjoint solves at every first point of a
    pair, ``gf_L`` fields from forward solves at every second point.  For a
    symmetric operator the same family may be passed twice.  Neumann and
    free-space fields are defined up to constants, so consecutive pairs are
    combined into second differences that cancel them.
    """
    pairs = [(np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for x, y in pairs]
    if not pairs:
        raise ValueError("no pairs")
    bc = gf_Lstar[0].bc
    D = [_swap_discrepancy(gf_Lstar, gf_L, x, y) for x, y in pairs]
    if bc in ("neumann", "free"):
        if len(pairs) < 2:
            raise ValueError("second differences need at least two pairs")
        vals = []
        for k in range(len(pairs) - 1):
            (x1, y1), (x2, y2) = pairs[k], pairs[k + 1]
            cross = _swap_discrepancy(gf_Lstar, gf_L, x1, y2) + _swap_discrepancy(gf_Lstar, gf_L, x2, y1)
            vals.append(D[k] + D[k + 1] - cross)
        D = vals
    per = [float(np.max(np.abs(d))) for d in D]
    worst = max(per)
    scale = max(float(np.max(np.abs(_lookup(gf_Lstar, x)(y[None, :])))) for x, y in pairs)
    return VerificationReport(
        kind="symmetry",
        passed=bool(np.isfinite(worst) and worst <= tol),
        inputs={"n_pairs": len(pairs), "bc": bc, "rho": gf_Lstar[0].rho, "h": gf_Lstar[0].mesh.h},
        quantities={"max_discrepancy": worst, "max_abs_value": scale},
        thresholds={"max_discrepancy": tol},
        trace=[{"pair": k, "discrepancy": v} for k, v in enumerate(per)],
    )


def verify_representation(mesh, cf, dom, f=None, f_N=None, poles=(), rho=None, sys=None, tol=0.02):
    """Direct solve vs Green quadrature at the poles, relative to max |u|.

    ``rho`` defaults to four times the mesh size.  With D empty the direct
    solve takes the compatibility-projected data; the kernel datum pairs to
    zero with the boundary-orthogonal Green columns, so the representation
    is unaffected by it.
    """
    if len(poles) == 0:
        raise ValueError("missing poles")
    sys = assemble(mesh, cf) if sys is None else sys
    rho = 4.0 * mesh.h if rho is None else float(rho)
    m = sys.m
    if dom.has_dirichlet:
        load = assemble_load(mesh, f, f_N, m=m, tag="N")
        u = mixed_solver.solve_mixed(sys, dom, load, "L")
        fields = green_fields(mesh, cf, dom, "mixed", poles, rho, sys=sys)
    else:
        u = neumann_solver.solve_neumann(sys, dom, f, f_N, "L", project=True)
        fields = neumann_green_fields(mesh, cf, dom, poles, rho, sys=sys)
    rep = representation_solve(fields, f, f_N)
    direct = u(np.asarray(poles, dtype=float))
    unorm = float(np.max(np.abs(u.values)))
    err = np.max(np.abs(direct - rep), axis=1)
    rel = err / unorm if unorm > 0 else err
    worst = float(np.max(rel))
    return VerificationReport(
        kind="representation",
        passed=bool(np.isfinite(worst) and worst <= tol),
        inputs={"h": mesh.h, "rho": rho, "n_poles": len(poles), "bc": fields[0].bc},
        quantities={"max_relative_error": worst, "u_inf": unorm},
        thresholds={"max_relative_error": tol},
        trace=[{"pole": [float(p[0]), float(p[1])], "direct": direct[k].tolist(), "green": rep[k].tolist(),
                "relative_error": float(rel[k])} for k, p in enumerate(np.asarray(poles, dtype=float))],
    )


def _pairing(sol, data, tag):
    f, f_N = data
    load = assemble_load(sol.mesh, f, f_N, m=sol.m, tag=tag)
    return -float(load @ sol.dofs)


def verify_green_identity(u, w, data, tag=None):
    """Relative residual of ∫u.g - ∫_N u.g_N = ∫w.f - ∫_N w.f_N.

    ``data`` is ((f, f_N), (g, g_N)): u solves the L-problem with (f, f_N),
    w the L*-problem with (g, g_N).  The Neumann part of the boundary is
    ``tag`` (default N, or the whole boundary when D is empty).
    """
    if u.mesh is not w.mesh:
        raise ValueError("u and w live on different meshes")
    if tag is None:
        tag = "N" if len(u.mesh.dirichlet_nodes) else "all"
    (f, f_N), (g, g_N) = data
    lhs = _pairing(u, (g, g_N), tag)
    rhs = _pairing(w, (f, f_N), tag)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + EPS)


def neumann_duality(sys, dom, draws=20, seed=0, with_boundary=True):
    """Duality residuals for compatibility-projected Neumann problem pairs.

    Each draw takes random smooth (f, f_N) and (g, g_N), solves the L
    problem and the L* problem after projection, and compares ∫u.g -
    ∫_∂ u.g_N with ∫w.f - ∫_∂ w.f_N.
    """
    rng = np.random.default_rng(seed)
    m, L = sys.m, dom.d
    dual, proj, cons = [], [], []
    for _ in range(draws):
        f, g = random_trig(rng, m, length=L), random_trig(rng, m, length=L)
        fN = random_trig(rng, m, length=L) if with_boundary else None
        gN = random_trig(rng, m, length=L) if with_boundary else None
        u = neumann_solver.solve_neumann(sys, dom, f, fN, "L", project=True)
        w = neumann_solver.solve_neumann(sys, dom, g, gN, "L*", project=True)
        dual.append(verify_green_identity(u, w, ((f, fN), (g, gN)), tag="all"))
        proj += [u.meta["projection_residual"], w.meta["projection_residual"]]
        cons += [u.meta["constraint_residual"], w.meta["constraint_residual"]]
    q = {"max_duality_residual": float(max(dual)), "max_projection_residual": float(max(proj)),
         "max_constraint_residual": float(max(cons))}
    th = {"max_duality_residual": IDENTITY_TOL, "max_projection_residual": 1e-10,
          "max_constraint_residual": 1e-10}
    return VerificationReport(
        kind="neumann_duality",
        passed=all(q[k] <= th[k] for k in th),
        inputs={"draws": draws, "seed": seed, "h": sys.mesh.h, "m": m},
        quantities=q,
        thresholds=th,
        trace=[{"draw": k, "duality": float(r)} for k, r in enumerate(dual)],
    )


def kernel_norm_ratios(sys, side="V"):
    """Extreme values over the kernel of (‖v‖²_L² + ‖∇v‖²_L²)^(1/2) / ‖v‖_L²(∂Ω).

    The extremes are generalized eigenvalues of the two Gram matrices on the
    kernel basis, so they do not depend on the basis chosen.
    """
    kb = neumann_solver.compute_kernel(sys, side)
    mesh, B = sys.mesh, kb.matrix
    g = np.stack([nodal_gradients(mesh, B[:, k].reshape(-1, sys.m)) for k in range(kb.dim)])
    S = np.einsum("t,itab,jtab->ij", mesh.areas, g, g)
    H = B.T @ (sys.mass @ B) + S
    Gb = B.T @ (sys.boundary_mass @ B)
    ev = sla.eigh(0.5 * (H + H.T), 0.5 * (Gb + Gb.T), eigvals_only=True)
    return np.sqrt(np.clip(ev, 0.0, None))


def verify_kernel_norms(dom, cf, h, side="V", tol=0.2):
    """Norm-equivalence ratios on the kernel and their stability under one red refinement."""
    mesh = triangulate(dom, h)
    fine = uniform_refine(mesh)
    rc = kernel_norm_ratios(assemble(mesh, cf), side)
    rf = kernel_norm_ratios(assemble(fine, cf), side)
    lo_c, hi_c, lo_f, hi_f = rc.min(), rc.max(), rf.min(), rf.max()
    change = float(max(abs(lo_f / lo_c - 1.0), abs(hi_f / hi_c - 1.0)))
    return VerificationReport(
        kind="kernel_norms",
        passed=bool(np.isfinite(change) and change <= tol),
        inputs={"h": mesh.h, "h2": fine.h, "side": side, "m": cf.m},
        quantities={"ratio_min_h": float(lo_c), "ratio_max_h": float(hi_c), "ratio_min_h2": float(lo_f),
                    "ratio_max_h2": float(hi_f), "relative_change": change},
        thresholds={"relative_change": tol},
    )


def verify_atomic_pairing(mesh, cf, dom, x, rho, specs, sys=None):
    """∫ G^{alpha .}_ρ(x, .) . a against the alpha-average of u_a over Ω_ρ(x).

    u_a solves the forward mixed problem with f = a and f_N = 0.  Returns a
    report with the largest discrepancy and the largest |u_a|_∞.
    """
    sys = assemble(mesh, cf) if sys is None else sys
    gf = green_fields(mesh, cf, dom, "mixed", [x], rho, sys=sys)[0]
    atoms = [Atom(mesh, dom, s) for s in specs]
    U, _ = mixed_solver.solve_raw(sys, np.column_stack([a.load(sys.m) for a in atoms]), "L")
    ld = local_domain(dom, x, rho)
    region = disk_rule(mesh, ld.anchor, rho, degree=2)
    diffs, sups, pairs = [], [], []
    for k, a in enumerate(atoms):
        u = U[:, k].reshape(-1, sys.m)
        avg = region.mean(as_matrix(region.evaluate(u)))
        for alpha in range(sys.m):
            p = a.pair(gf.values(alpha))
            pairs.append(p)
            diffs.append(abs(p - avg[alpha]) / max(abs(avg[alpha]), abs(p), 1e-300) if p or avg[alpha] else 0.0)
        sups.append(float(np.max(np.linalg.norm(u, axis=1))))
    worst = float(max(diffs))
    return VerificationReport(
        kind="atomic_pairing",
        passed=worst <= IDENTITY_TOL,
        inputs={"h": mesh.h, "rho": rho, "x": [float(x[0]), float(x[1])], "n_atoms": len(atoms)},
        quantities={"max_relative_discrepancy": worst, "max_pairing": float(np.max(np.abs(pairs))),
                    "max_u_inf": float(max(sups))},
        thresholds={"max_relative_discrepancy": IDENTITY_TOL},
    )
