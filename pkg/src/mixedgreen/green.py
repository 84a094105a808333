"""Approximate Green functions: mixed/Dirichlet, Neumann, and free space.

Column alpha of a GreenField is the adjoint solution with data
``g = e_alpha χ_{Ω_ρ(x)} / |Ω_ρ(x)|`` and zero Neumann data, so that for any
solution u of the forward problem

    ∫ G^{alpha .}_ρ(x, y) . f(y) dy - ∫_N G^{alpha .}_ρ(x, y) . f_N dσ
        = average of u^alpha over Ω_ρ(x).

The identity holds exactly for the discrete solutions as well.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mixed_solver, neumann_solver
from .errors import DomainError, MeshError, ResolutionError
from .geometry import local_domain, regular_polygon
from .meshing import boundary_rule, disk_rule, interpolate, radial_size, triangulate, volume_rule
from .mixed_solver import FemSolution
from .operators import assemble, rule_load
from .report import fmt

BCS = ("mixed", "dirichlet", "neumann", "free")


@dataclass(frozen=True, eq=False)
class GreenField:
    """Matrix-valued approximate Green function with pole ``x``.

    ``columns[alpha].values[:, beta]`` holds G^{alpha beta}_ρ(x, node).
    """

    x: np.ndarray
    rho: float
    bc: str
    columns: list
    mesh: object
    region_measure: float = 1.0
    lam: list = None
    R: float = None
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return len(self.columns)

    def values(self, alpha=None):
        """Nodal array (n, m, m) indexed [node, alpha, beta], or (n, m) for one alpha."""
        if alpha is not None:
            return self.columns[alpha].values
        return np.stack([c.values for c in self.columns], axis=1)

    def __call__(self, points):
        """Values at points, shape (P, m, m)."""
        vals = interpolate(self.mesh, self.values().reshape(self.mesh.n_nodes, -1), points)
        return vals.reshape(-1, self.m, self.m)


def _check_resolution(mesh, x, rho):
    h_loc = mesh.local_h(x, radius=rho)
    if rho < 2.0 * h_loc:
        raise ResolutionError(f"rho under-resolved (rho={rho:g} < 2 h_local={2 * h_loc:g})")
    return h_loc


def indicator_loads(sys, ld):
    """Adjoint loads -∫ g.phi for g = e_alpha χ / |region|, one column per alpha; and |region|."""
    rule = disk_rule(sys.mesh, ld.anchor, ld.rho, degree=2)
    area = rule.measure
    if area <= 0.0:
        raise DomainError("empty local domain")
    m = sys.m
    base = rule_load(rule, np.ones(len(rule.weights)), sys.mesh.n_nodes, 1)
    loads = np.zeros((sys.n_dofs, m))
    for a in range(m):
        loads[a::m, a] = -base / area
    return loads, area


def approximate_green(mesh, cf, dom, bc, x, rho, sys=None, check=True, operator="L*"):
    """Mixed or Dirichlet approximate Green function at pole ``x``."""
    return green_fields(mesh, cf, dom, bc, [x], rho, sys=sys, check=check, operator=operator)[0]


def green_fields(mesh, cf, dom, bc, poles, rho, sys=None, check=True, operator="L*"):
    """Approximate Green functions at several poles sharing one factorization.

    ``operator="L*"`` (default) gives G for L; ``operator="L"`` solves the
    forward problems instead and gives the Green function of L*.
    """
    if bc not in ("mixed", "dirichlet"):
        raise ValueError(f"bc must be mixed or dirichlet, got {bc!r}")
    if not dom.has_dirichlet:
        raise DomainError("D is empty: use neumann_green")
    if bc == "dirichlet" and not dom.is_dirichlet:
        raise DomainError("dirichlet Green function needs D = boundary")
    sys = assemble(mesh, cf) if sys is None else sys
    m = sys.m
    all_loads, info = [], []
    for x in poles:
        x = np.asarray(x, dtype=float)
        if check:
            _check_resolution(mesh, x, rho)
        ld = local_domain(dom, x, rho)
        loads, area = indicator_loads(sys, ld)
        all_loads.append(loads)
        info.append((x, ld, area))
    W, res = mixed_solver.solve_raw(sys, np.hstack(all_loads), operator)
    out = []
    for k, (x, ld, area) in enumerate(info):
        cols = [FemSolution(W[:, k * m + a].reshape(-1, m), mesh, operator, float(res[k * m + a]),
                            f"green column {a}") for a in range(m)]
        out.append(GreenField(x, float(rho), bc, cols, mesh, area,
                              meta={"kind": ld.kind, "touches_D": ld.touches_D, "h": mesh.h}))
    return out


def neumann_green(mesh, cf, dom, x, rho, sys=None, check=True):
    """Neumann approximate Green function: kernel datum lambda plus constrained adjoint solve."""
    return neumann_green_fields(mesh, cf, dom, [x], rho, sys=sys, check=check)[0]


def neumann_green_fields(mesh, cf, dom, poles, rho, sys=None, check=True):
    if dom.has_dirichlet:
        raise DomainError("neumann_green needs D empty")
    sys = assemble(mesh, cf) if sys is None else sys
    m = sys.m
    kb = neumann_solver.compute_kernel(sys, "V")
    out = []
    for x in poles:
        x = np.asarray(x, dtype=float)
        if check:
            _check_resolution(mesh, x, rho)
        ld = local_domain(dom, x, rho)
        loads, area = indicator_loads(sys, ld)
        lams, pres = [], []
        for a in range(m):
            lam, r = neumann_solver.compatibility_projection(kb, -loads[:, a], sys)
            loads[:, a] += sys.boundary_mass @ lam.dofs
            lams.append(lam)
            pres.append(r)
        W, _, res = neumann_solver.solve_raw(sys, loads, "L*")
        cols = []
        for a in range(m):
            c = FemSolution(W[:, a].reshape(-1, m), mesh, "L*", float(res[a]), f"neumann green column {a}")
            c.meta["constraint_residual"] = neumann_solver.constraint_residual(sys, c.dofs, "L*")
            cols.append(c)
        out.append(GreenField(x, float(rho), "neumann", cols, mesh, area, lam=lams,
                              meta={"projection_residual": max(pres), "h": mesh.h, "kind": ld.kind}))
    return out


def annulus_data_rules(mesh, x, rho):
    """Rules and weights realizing f_ρ = χ_{B_ρ}/(πρ²) - (ρ²/3π) χ_{B_{2/ρ} \\ B_{1/ρ}}."""
    inner = disk_rule(mesh, x, rho, degree=2)
    outer = disk_rule(mesh, x, 2.0 / rho, degree=2)
    hole = disk_rule(mesh, x, 1.0 / rho, degree=2)
    c_in = 1.0 / (np.pi * rho * rho)
    c_out = rho * rho / (3.0 * np.pi)
    return [(inner, c_in), (outer, -c_out), (hole, c_out)]


def fundamental_solution(cf, x, rho, R=None, h_near=None, h_far=None, n_sides=256, rate=0.05):
    """Planar fundamental solution via a Dirichlet problem on a 256-gon B_R(x).

    The data f_ρ has zero integral, so the solution inside B_{1/ρ} does not
    feel the far boundary beyond a constant; fields are normalized to have
    mean zero over B_1(x).
    """
    x = np.asarray(x, dtype=float)
    if not rho > 0:
        raise ValueError("rho must be positive")
    R = 4.0 / rho if R is None else float(R)
    if R < 4.0 / rho * (1.0 - 1e-12):
        raise DomainError(f"R={R:g} too small: need R >= 4/rho = {4.0 / rho:g}")
    h_near = rho / 5.0 if h_near is None else float(h_near)
    h_far = R / 16.0 if h_far is None else float(h_far)
    dom = regular_polygon(n_sides, R, center=x, tag="D", r0=R)
    mesh = triangulate(dom, h_far, size=radial_size(x, h_near, h_far, rate))
    sys = assemble(mesh, cf)
    m = sys.m
    total = np.zeros(mesh.n_nodes)
    integral = 0.0
    for rule, c in annulus_data_rules(mesh, x, rho):
        total += c * rule_load(rule, np.ones(len(rule.weights)), mesh.n_nodes, 1)
        integral += c * rule.measure
    loads = np.zeros((sys.n_dofs, m))
    for a in range(m):
        loads[a::m, a] = -total
    W, res = mixed_solver.solve_raw(sys, loads, "L*")
    unit = disk_rule(mesh, x, 1.0, degree=2)
    cols = []
    for a in range(m):
        vals = W[:, a].reshape(-1, m)
        vals = vals - unit.mean(unit.evaluate(vals))
        cols.append(FemSolution(vals, mesh, "L*", float(res[a]), f"fundamental column {a}"))
    return GreenField(x, float(rho), "free", cols, mesh, 1.0, R=R,
                      meta={"integral_f": integral, "h_near": h_near, "h": mesh.h,
                            "n_nodes": mesh.n_nodes})


def evaluate_green(gf, y):
    """m x m matrix G^{alpha beta}_ρ(x, y) by P1 interpolation."""
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(y - gf.x) < 2.0 * gf.rho:
        warnings.warn("evaluation point within 2 rho of the pole", stacklevel=2)
    try:
        return gf(y[None, :])[0]
    except MeshError:
        raise MeshError(f"point {tuple(y)} outside mesh") from None


def representation_solve(fields, f=None, f_N=None, degree=2):
    """u^alpha(x) ≈ ∫ G^{alpha beta} f^beta - ∫_N G^{alpha beta} f_N^beta at every pole.

    ``fields`` is a GreenField or a list of them; returns an array (poles, m).
    """
    if isinstance(fields, GreenField):
        fields = [fields]
    if not fields:
        raise ValueError("missing pole fields")
    mesh = fields[0].mesh
    m = fields[0].m
    out = np.zeros((len(fields), m))
    vrule = volume_rule(mesh, degree)
    brule = boundary_rule(mesh, "N", max(degree, 3))
    fv = None if f is None else _vals(vrule, f, m)
    fn = None if f_N is None or len(brule.weights) == 0 else _vals(brule, f_N, m)
    for k, gf in enumerate(fields):
        if gf.mesh is not mesh:
            raise ValueError("all Green fields must share a mesh")
        for a in range(m):
            col = gf.columns[a].values
            if fv is not None:
                out[k, a] += vrule.integrate(np.sum(vrule.evaluate(col) * fv, axis=1))
            if fn is not None:
                out[k, a] -= brule.integrate(np.sum(brule.evaluate(col) * fn, axis=1))
    return out


def _vals(rule, g, m):
    v = np.asarray(rule.evaluate(g), dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] != m:
        raise ValueError(f"data has {v.shape[1]} components, expected {m}")
    return v


@dataclass
class GreenTable:
    """Sampled values (pole, point, m x m matrix) with provenance."""

    rows: list
    rho: float
    h: float
    bc: str

    @classmethod
    def from_fields(cls, fields, points, min_sep=True):
        rows = []
        for gf in fields:
            pts = np.atleast_2d(points)
            if min_sep:
                pts = pts[np.linalg.norm(pts - gf.x, axis=1) >= 2.0 * gf.rho]
            if len(pts) == 0:
                continue
            vals = gf(pts)
            for p, v in zip(pts, vals):
                if not np.all(np.isfinite(v)):
                    raise ValueError("non-finite Green value")
                rows.append((gf.x.copy(), p.copy(), v))
        f0 = fields[0]
        return cls(rows, f0.rho, f0.meta.get("h", f0.mesh.h), f0.bc)

    def to_csv(self, header=""):
        lines = [header] if header else []
        lines.append("pole_x,pole_y,y1,y2,alpha,beta,value,rho,h,bc")
        for x, y, v in self.rows:
            m = v.shape[0]
            for a in range(m):
                for b in range(m):
                    lines.append(",".join([fmt(x[0]), fmt(x[1]), fmt(y[0]), fmt(y[1]), str(a + 1),
                                           str(b + 1), fmt(v[a, b]), fmt(self.rho), fmt(self.h), self.bc]))
        return "\n".join(lines) + "\n"
