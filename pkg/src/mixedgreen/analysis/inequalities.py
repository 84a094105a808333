"""Randomized checks of the function-space inequalities.

Every check evaluates LHS/RHS ratios over a seeded family of samples on a
mesh and on its red refinement.  The family (random smooth data, local
domains, atoms) is defined geometrically so both levels see the same
samples.  A check passes when every ratio is finite and the largest ratio
grows by at most ``GROWTH`` under refinement; no theoretical constant is
asserted.
"""

import numpy as np

from .. import mixed_solver
from ..meshing import disk_rule, triangulate, uniform_refine, volume_rule, boundary_rule
from ..operators import assemble, assemble_load, make_coefficients
from ..report import VerificationReport
from .bmo import Atom, random_atom_specs
from .common import (as_matrix, d_average, enlarge, grad_lp_norm, lp_norm, random_local_domains,
                     random_trig, region, strain_l2_sq, surface_rule)

GROWTH = 1.5
KINDS = ("poincare_D", "sobolev_poincare", "poincare", "morrey", "boundary_poincare", "korn",
         "caccioppoli", "energy", "atomic_linf", "lt_estimates")


def _solve(mesh, dom, cf, loads):
    sys = assemble(mesh, cf)
    X, _ = mixed_solver.solve_raw(sys, np.column_stack(loads), "L")
    return [X[:, k].reshape(-1, cf.m) for k in range(X.shape[1])], sys


def _data_loads(mesh, cf, fs=(), fns=()):
    return [assemble_load(mesh, f, fn, m=cf.m) for f, fn in zip(fs, fns)]


# ----------------------------------------------------------------- per kind


def _poincare_D(mesh, dom, cf, S, P):
    us, _ = _solve(mesh, dom, cf, _data_loads(mesh, cf, S["f"], [None] * len(S["f"])))
    vr, br = volume_rule(mesh, 4), boundary_rule(mesh, "all", 5)
    r0 = dom.r0
    out = []
    for u in us:
        gn = grad_lp_norm(mesh, vr, u, 2)
        best = 0.0
        for p in P["p"]:
            lhs = r0 ** (-1.0 / p) * lp_norm(br, br.evaluate(u), p) + r0 ** (-2.0 / p) * lp_norm(vr, vr.evaluate(u), p)
            best = max(best, lhs / gn)
        out.append(best)
    return out


def _local_oscillation(mesh, dom, cf, S, P, kind):
    us, _ = _solve(mesh, dom, cf, _data_loads(mesh, cf, S["f"], [None] * len(S["f"])))
    out = []
    for u, ld in zip(us, S["ld"]):
        big = enlarge(ld)
        r1, r2 = region(mesh, ld), region(mesh, big)
        v = as_matrix(r1.evaluate(u))
        avg = d_average(r1, v, ld)
        if kind == "sobolev_poincare":
            lhs = lp_norm(r1, v - avg, P["q"])
            rhs = grad_lp_norm(mesh, r2, u, P["p"])
        elif kind == "poincare":
            lhs = lp_norm(r1, v - avg, P["p"])
            rhs = ld.rho * grad_lp_norm(mesh, r2, u, P["p"])
        elif kind == "morrey":
            nodes = np.unique(r1.nodes[r1.bary > 0.0])
            inside = np.linalg.norm(mesh.nodes[nodes] - ld.anchor, axis=1) <= ld.rho
            vals = np.concatenate([v, u[nodes[inside]]])
            lhs = float(np.max(np.linalg.norm(vals - avg, axis=1)))
            rhs = ld.rho ** (1.0 - 2.0 / P["p"]) * grad_lp_norm(mesh, r2, u, P["p"])
        else:  # boundary_poincare
            sr = surface_rule(mesh, ld.anchor, ld.rho)
            lhs = lp_norm(sr, as_matrix(sr.evaluate(u)) - avg, P["p"])
            rhs = grad_lp_norm(mesh, r2, u, P["q"])
        out.append(lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf))
    return out


def _korn(mesh, dom, cf, S, P):
    out = []
    for field, ld in zip(S["u"], S["ld"]):
        u = as_matrix(field(mesh.nodes))
        r1 = region(mesh, ld, degree=2)
        star = ld.star_center
        ball = disk_rule(mesh, star, 0.5 * ld.rho, degree=2)
        vb = as_matrix(ball.evaluate(u))
        c = ball.mean(vb)
        lhs = grad_lp_norm(mesh, r1, u, 2) ** 2
        rhs = strain_l2_sq(mesh, r1, u) + ld.rho ** -2 * ball.integrate(np.sum((vb - c) ** 2, axis=1))
        out.append(lhs / rhs)
    return out


def _caccioppoli(mesh, dom, cf, S, P):
    us, _ = _solve(mesh, dom, cf, _data_loads(mesh, cf, [None] * len(S["fN"]), S["fN"]))
    out = []
    for u, fN, ld in zip(us, S["fN"], S["ld"]):
        out.append(caccioppoli_ratio(mesh, u, ld, fN))
    return out


def caccioppoli_ratio(mesh, u, ld, f_N=None):
    """∫_{Ω_ρ} |∇u|^2 over ρ^-2 ∫_{Ω_2ρ} |u - [u]_{2ρ}|^2 + ρ ∫_{N ∩ B_2ρ} |f_N|^2."""
    big = enlarge(ld)
    r1, r2 = region(mesh, ld, 2), region(mesh, big, 2)
    v = as_matrix(r2.evaluate(u))
    avg = d_average(r2, v, big)
    lhs = grad_lp_norm(mesh, r1, u, 2) ** 2
    rhs = ld.rho ** -2 * r2.integrate(np.sum((v - avg) ** 2, axis=1))
    if f_N is not None:
        sr = surface_rule(mesh, big.anchor, big.rho, tag="N")
        if len(sr.weights):
            rhs += ld.rho * sr.integrate(np.sum(as_matrix(sr.evaluate(f_N)) ** 2, axis=1))
    return lhs / rhs


def _atoms(mesh, dom, cf, S, P, kind):
    atoms = [Atom(mesh, dom, spec) for spec in S["atoms"]]
    us, _ = _solve(mesh, dom, cf, [a.load(cf.m) for a in atoms])
    vr = volume_rule(mesh, 2)
    if kind == "energy":
        return [grad_lp_norm(mesh, vr, u, 2) for u in us]
    return [float(np.max(np.linalg.norm(u, axis=1))) for u in us]


def _lt(mesh, dom, cf, S, P):
    t, r = P["t"], P["r"]
    rp = 1.0 / (0.5 - 1.0 / t)
    us, sys = _solve(mesh, dom, cf, _data_loads(mesh, cf, S["f"], [None] * len(S["f"])))
    vr = volume_rule(mesh, 4)
    primal, dual = [], []
    gs = []
    for u, f in zip(us, S["f"]):
        primal.append(grad_lp_norm(mesh, vr, u, t) / lp_norm(vr, vr.evaluate(f), r))
        mag = np.linalg.norm(u, axis=1)
        gs.append(mag[:, None] ** (rp - 2.0) * u)
    loads = np.column_stack([assemble_load(mesh, g, None, m=cf.m) for g in gs])
    W, _ = mixed_solver.solve_raw(sys, loads, "L*")
    for k, (u, f, g) in enumerate(zip(us, S["f"], gs)):
        w = W[:, k].reshape(-1, cf.m)
        pair = abs(float(vr.integrate(np.sum(as_matrix(vr.evaluate(w)) * as_matrix(vr.evaluate(f)), axis=1))))
        dual.append(lp_norm(vr, vr.evaluate(u), rp) * grad_lp_norm(mesh, vr, w, t) / pair)
    return [max(a, b) for a, b in zip(primal, dual)], {"primal": primal, "dual": dual}


# --------------------------------------------------------------- front end


def _defaults(kind):
    return {
        "poincare_D": {"p": (2.0, 4.0)},
        "sobolev_poincare": {"p": 1.5, "q": 6.0},
        "poincare": {"p": 2.0},
        "morrey": {"p": 4.0},
        "boundary_poincare": {"p": 2.0, "q": 4.0 / 3.0},
        "lt_estimates": {"t": 3.0, "r": 6.0 / 5.0},
    }.get(kind, {})


def _samples(kind, dom, cf, n, rng, rho_range):
    m = cf.m
    L = dom.d
    if kind in ("poincare_D", "lt_estimates"):
        return {"f": [random_trig(rng, m, length=L) for _ in range(n)]}
    if kind in ("sobolev_poincare", "poincare", "morrey"):
        return {"f": [random_trig(rng, m, length=L) for _ in range(n)],
                "ld": random_local_domains(rng, dom, n, rho_range)}
    if kind == "boundary_poincare":
        return {"f": [random_trig(rng, m, length=L) for _ in range(n)],
                "ld": random_local_domains(rng, dom, n, rho_range, boundary=True)}
    if kind == "korn":
        return {"u": [random_trig(rng, 2, length=L) for _ in range(n)],
                "ld": random_local_domains(rng, dom, n, rho_range)}
    if kind == "caccioppoli":
        return {"fN": [random_trig(rng, m, length=L) for _ in range(n)],
                "ld": random_local_domains(rng, dom, n, rho_range)}
    if kind in ("energy", "atomic_linf"):
        return {"atoms": random_atom_specs(rng, dom, n, rho_range, m)}
    raise ValueError(f"unknown inequality kind {kind!r}")


def _ratios(kind, mesh, dom, cf, S, P):
    extra = {}
    if kind == "poincare_D":
        r = _poincare_D(mesh, dom, cf, S, P)
    elif kind in ("sobolev_poincare", "poincare", "morrey", "boundary_poincare"):
        r = _local_oscillation(mesh, dom, cf, S, P, kind)
    elif kind == "korn":
        r = _korn(mesh, dom, cf, S, P)
    elif kind == "caccioppoli":
        r = _caccioppoli(mesh, dom, cf, S, P)
    elif kind in ("energy", "atomic_linf"):
        r = _atoms(mesh, dom, cf, S, P, kind)
    else:
        r, extra = _lt(mesh, dom, cf, S, P)
    return np.asarray(r, dtype=float), extra


def verify_inequality(kind, inputs):
    """Run one inequality check.

    ``inputs`` keys: ``dom`` (required), ``cf`` (default Laplacian), ``h``
    (default 0.05) or ``mesh``, ``n_samples`` (>= 20), ``seed``,
    ``rho_range`` and exponent overrides (``p``, ``q``, ``t``, ``r``).
    For ``caccioppoli`` an explicit field may be given as ``u`` (callable)
    with ``x`` and ``rho``; the single ratio is then reported.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown inequality kind {kind!r}")
    dom = inputs["dom"]
    cf = inputs.get("cf") or make_coefficients("scalar_laplace")
    P = {**_defaults(kind), **{k: inputs[k] for k in ("p", "q", "t", "r") if k in inputs}}
    if kind == "caccioppoli" and "u" in inputs:
        return _explicit_caccioppoli(inputs, dom)
    needs_D = kind in ("poincare_D", "energy", "atomic_linf", "lt_estimates", "sobolev_poincare",
                       "poincare", "morrey", "boundary_poincare", "caccioppoli")
    if needs_D and not dom.has_dirichlet:
        raise ValueError(f"{kind} needs a nonempty D")
    if kind == "korn" and cf.m != 2:
        cf = make_coefficients("lame", {"mu": 1.0, "lambda": 0.0})
    n = int(inputs.get("n_samples", 20))
    if n < 20:
        raise ValueError("need at least 20 samples")
    mesh = inputs.get("mesh") or triangulate(dom, inputs.get("h", 0.05))
    fine = uniform_refine(mesh)
    rho_range = inputs.get("rho_range", (min(4.0 * mesh.h, 0.25 * dom.r0), 0.5 * dom.r0))
    rng = np.random.default_rng(inputs.get("seed", 0))
    S = _samples(kind, dom, cf, n, rng, rho_range)
    coarse_r, ex_c = _ratios(kind, mesh, dom, cf, S, P)
    fine_r, ex_f = _ratios(kind, fine, dom, cf, S, P)
    finite = bool(np.all(np.isfinite(coarse_r)) and np.all(np.isfinite(fine_r)))
    growth = float(fine_r.max() / coarse_r.max()) if coarse_r.max() > 0 else np.inf
    q = {"max_ratio_h": float(coarse_r.max()), "max_ratio_h2": float(fine_r.max()),
         "growth": growth, "finite": finite,
         "min_ratio_h": float(coarse_r.min()), "min_ratio_h2": float(fine_r.min())}
    for key in ex_c:
        q[f"max_{key}_h"] = float(np.max(ex_c[key]))
        q[f"max_{key}_h2"] = float(np.max(ex_f[key]))
    trace = [{"sample": i, "ratio_h": float(a), "ratio_h2": float(b)}
             for i, (a, b) in enumerate(zip(coarse_r, fine_r))]
    return VerificationReport(
        kind=kind,
        passed=finite and growth <= GROWTH,
        inputs={"h": mesh.h, "h2": fine.h, "n_samples": n, "seed": inputs.get("seed", 0),
                "rho_min": float(rho_range[0]), "rho_max": float(rho_range[1]), **P},
        quantities=q,
        thresholds={"growth": GROWTH},
        trace=trace,
    )


def _explicit_caccioppoli(inputs, dom):
    from ..geometry import local_domain

    mesh = inputs.get("mesh") or triangulate(dom, inputs.get("h", 0.1))
    u = as_matrix(inputs["u"](mesh.nodes))
    ld = local_domain(dom, inputs["x"], inputs["rho"])
    ratio = caccioppoli_ratio(mesh, u, ld, inputs.get("f_N"))
    return VerificationReport(
        kind="caccioppoli",
        passed=bool(np.isfinite(ratio)),
        inputs={"h": mesh.h, "x": list(inputs["x"]), "rho": inputs["rho"]},
        quantities={"ratio": float(ratio)},
        thresholds={},
    )
