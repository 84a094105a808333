"""Weak mixed problem for L and its adjoint L* with zero data on D.

Dirichlet nodes are eliminated (exact zeros); the reduced system is
factorized once per (system, operator) and reused for every right-hand side.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import CoercivityError, SolverError
from .meshing import interpolate
from .operators import nodal_gradients

RESIDUAL_ACCEPT = 1e-10


@dataclass(frozen=True, eq=False)
class FemSolution:
    """Nodal P1 solution, ``values[node, component]``."""

    values: np.ndarray
    mesh: object
    which: str = "L"
    residual: float = 0.0
    data: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def dofs(self):
        return self.values.ravel()

    def __call__(self, points):
        """Interpolated values at points, shape (P, m)."""
        return interpolate(self.mesh, self.values, points)

    def gradients(self):
        return nodal_gradients(self.mesh, self.values)


class _Factor:
    """LU of the reduced matrix with iterative refinement and a GMRES fallback."""

    def __init__(self, A):
        self.A = A.tocsc()
        try:
            with np.errstate(all="ignore"):
                self.lu = spla.splu(self.A)
        except RuntimeError as exc:
            raise CoercivityError(f"constrained system is singular ({exc})") from None
        diag = np.abs(self.lu.U.diagonal())
        if diag.min() <= 1e-13 * diag.max():
            raise CoercivityError(
                f"constrained system is numerically singular (pivot ratio {diag.min() / diag.max():.3g})")

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x = self.lu.solve(b)
        bn = np.linalg.norm(b, axis=0)
        bn = np.where(bn == 0.0, 1.0, bn)
        for _ in range(3):
            r = b - self.A @ x
            res = np.linalg.norm(r, axis=0) / bn
            if np.all(res <= 1e-13):
                break
            x = x + self.lu.solve(r)
        r = b - self.A @ x
        res = np.linalg.norm(r, axis=0) / bn
        if np.any(res > RESIDUAL_ACCEPT):
            x, res = self._fallback(b, x, bn)
        return x, res

    def _fallback(self, b, x, bn):
        M = spla.LinearOperator(self.A.shape, self.lu.solve)
        cols = b.reshape(len(b), -1)
        xs = x.reshape(len(b), -1).copy()
        for k in range(cols.shape[1]):
            xs[:, k], _ = spla.gmres(self.A, cols[:, k], x0=xs[:, k], M=M, rtol=1e-12, maxiter=200)
        xs = xs.reshape(x.shape)
        res = np.linalg.norm(b - self.A @ xs, axis=0) / bn
        if np.any(res > RESIDUAL_ACCEPT):
            raise SolverError(f"linear solve did not converge (residual {np.max(res):.3g})")
        return xs, res


def free_dofs(mesh, m):
    """Dof indices not on D nodes."""
    fixed = np.zeros(mesh.n_nodes, dtype=bool)
    fixed[mesh.dirichlet_nodes] = True
    free_nodes = np.nonzero(~fixed)[0]
    return (free_nodes[:, None] * m + np.arange(m)).ravel()


def _factor(sys, which):
    key = ("mixed", which)
    if key not in sys._cache:
        free = free_dofs(sys.mesh, sys.m)
        K = sys.matrix(which)
        sys._cache[key] = (free, _Factor(K[free][:, free]))
    return sys._cache[key]


def solve_raw(sys, load, which="L"):
    """Solve for one or several load columns; returns (dof array, residuals)."""
    if len(sys.mesh.dirichlet_nodes) == 0:
        raise SolverError("D is empty: use the Neumann solver")
    free, fac = _factor(sys, which)
    load = np.asarray(load, dtype=float)
    out = np.zeros_like(load)
    x, res = fac.solve(load[free])
    out[free] = x
    return out, res


def solve_mixed(sys, dom, load, which="L", data=""):
    """Discrete solution of A(u, phi) = l(phi) (or A(phi, w) = l(phi) for L*) with u = 0 on D."""
    if dom is not None and not dom.has_dirichlet:
        raise SolverError("D is empty: use the Neumann solver")
    x, res = solve_raw(sys, load, which)
    return FemSolution(x.reshape(-1, sys.m), sys.mesh, which, float(np.max(res)), data)


def energy_norm(sol, sys=None):
    """(∫ |grad u|^2)^(1/2), computed exactly per element."""
    mesh = sol.mesh
    g = nodal_gradients(mesh, sol.values)
    return float(np.sqrt(np.sum(mesh.areas * np.sum(g * g, axis=(1, 2)))))


def galerkin_residual(sys, sol, load):
    """max |A(u, phi) - l(phi)| over free test dofs, relative to ||l||."""
    free = free_dofs(sys.mesh, sys.m)
    r = sys.matrix(sol.which) @ sol.dofs - load
    scale = max(np.linalg.norm(load), 1e-300)
    return float(np.linalg.norm(r[free]) / scale)


def format_solution(sol, header=""):
    from .report import fmt

    lines = [header] if header else []
    m = sol.m
    lines.append("node,y1,y2," + ",".join(f"u{k + 1}" for k in range(m)))
    for i, (p, v) in enumerate(zip(sol.mesh.nodes, sol.values)):
        lines.append(",".join([str(i), fmt(p[0]), fmt(p[1])] + [fmt(x) for x in v]))
    return "\n".join(lines) + "\n"
