"""Empirical Meyers exponent from gradient L^t integrals on nested meshes.

With S(t, h) = ∫ |∇u_h|^t on meshes h, h/2, h/4, the successive differences
behave like h^(2 - t/2) when |∇u| ~ r^(-1/2); in general the decay rate

    kappa(t) = log2(|S(h/4) - S(h/2)| / |S(h/2) - S(h)|)

is negative while ∇u ∈ L^t and positive once the integral diverges.  The
exponent t0 is the zero crossing of kappa on the t grid.
"""

import numpy as np

from ..meshing import triangulate, uniform_refine
from ..mixed_solver import solve_mixed
from ..operators import assemble, assemble_load, nodal_gradients
from ..report import VerificationReport


def gradient_power_integral(sol, t):
    g = nodal_gradients(sol.mesh, sol.values)
    mag = np.sqrt(np.sum(g * g, axis=(1, 2)))
    return float(np.sum(sol.mesh.areas * mag ** t))


def _nested(h_levels):
    h = np.asarray(h_levels, dtype=float)
    return np.allclose(h[1:] / h[:-1], 0.5, rtol=1e-9)


def meyers_exponent(dom, cf, h_levels, t_grid, f=None, f_N=None, meshes=None):
    """Estimate t0 for the mixed problem with data (f, f_N)."""
    h_levels = list(h_levels)
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if len(h_levels) < 3:
        raise ValueError("need at least 3 mesh levels")
    if t_grid.min() <= 2.0 or t_grid.max() >= 8.0:
        raise ValueError("t grid must lie in (2, 8)")
    if meshes is None:
        if _nested(h_levels):
            meshes = [triangulate(dom, h_levels[0])]
            for _ in h_levels[1:]:
                meshes.append(uniform_refine(meshes[-1]))
        else:
            meshes = [triangulate(dom, h) for h in h_levels]
    S = np.zeros((len(meshes), len(t_grid)))
    for i, mesh in enumerate(meshes):
        sys = assemble(mesh, cf)
        sol = solve_mixed(sys, dom, assemble_load(mesh, f, f_N, m=cf.m))
        for j, t in enumerate(t_grid):
            S[i, j] = gradient_power_integral(sol, t)
    d1 = S[-2] - S[-3]
    d2 = S[-1] - S[-2]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.log2(np.abs(d2) / np.abs(d1))
    growth = S[-1] / S[-2] - 1.0
    sign = np.sign(kappa)
    changes = np.nonzero(np.diff(sign) != 0)[0]
    status, t0 = "crossing", float("nan")
    if not np.all(np.isfinite(kappa)) or len(changes) > 1 or np.any(np.diff(kappa) < -0.25):
        status = "inconclusive"
    elif len(changes) == 0:
        status = "beyond_grid" if kappa[-1] < 0 else "below_grid"
        t0 = float("inf") if status == "beyond_grid" else float(t_grid[0])
    else:
        k = int(changes[0])
        t0 = float(t_grid[k] - kappa[k] * (t_grid[k + 1] - t_grid[k]) / (kappa[k + 1] - kappa[k]))
    trace = [{"t": float(t), "kappa": float(k), "growth_last_level": float(g),
              **{f"S_{i}": float(S[i, j]) for i in range(len(meshes))}}
             for j, (t, k, g) in enumerate(zip(t_grid, kappa, growth))]
    return VerificationReport(
        kind="meyers",
        passed=status != "inconclusive",
        inputs={"h_levels": [float(m.h) for m in meshes], "t_grid": list(t_grid),
                "nested": _nested(h_levels)},
        quantities={"t0": t0, "status": status},
        thresholds={"kappa_zero": 0.0},
        trace=trace,
        notes=["t0 is the zero of kappa(t) = log2 of the ratio of successive differences of S(t, h)"],
    )
