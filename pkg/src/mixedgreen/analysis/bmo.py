"""Sampled BMO_D norms and atoms for (Ω, D)."""

from dataclasses import dataclass

import numpy as np

from ..geometry import local_domain
from ..meshing import disk_rule
from ..operators import rule_load
from .common import as_matrix, d_average


@dataclass(frozen=True)
class AtomSpec:
    """Geometric description of an atom, independent of any mesh.

    The local domain is cut by the line through its anchor with normal
    (cos theta, sin theta).  With H1 the smaller half,
    a = e_alpha (χ_H1 - (|H1|/|H2|) χ_H2) / |region| when the local domain
    stays away from D (mean zero), and a = e_alpha (χ_H1 + s χ_H2) / |region|
    with s in [-1, 1] when it touches D.
    """

    center: tuple
    rho: float
    theta: float
    alpha: int
    s: float = 1.0


class Atom:
    """An atom realized on a mesh through exact half-disk quadrature."""

    def __init__(self, mesh, dom, spec, degree=2):
        self.spec = spec
        self.mesh = mesh
        self.ld = local_domain(dom, spec.center, spec.rho)
        n = np.array([np.cos(spec.theta), np.sin(spec.theta)])
        off = float(n @ self.ld.anchor)
        r1 = disk_rule(mesh, self.ld.anchor, spec.rho, degree, halfplane=(n, off))
        r2 = disk_rule(mesh, self.ld.anchor, spec.rho, degree, halfplane=(-n, -off))
        if r1.measure > r2.measure:
            r1, r2 = r2, r1
        area = r1.measure + r2.measure
        if r1.measure <= 0.0:
            raise ValueError("degenerate atom split")
        c2 = -r1.measure / r2.measure if not self.ld.touches_D else spec.s
        self.parts = [(r1, 1.0 / area), (r2, c2 / area)]
        self.area = area

    @property
    def alpha(self):
        return self.spec.alpha

    @property
    def sup(self):
        return max(abs(c) for _, c in self.parts)

    def mean(self):
        return sum(c * r.measure for r, c in self.parts) / self.area

    def load(self, m):
        """Load vector -∫ a.phi for the forward problem."""
        out = np.zeros(self.mesh.n_nodes * m)
        for rule, c in self.parts:
            scal = rule_load(rule, np.ones(len(rule.weights)), self.mesh.n_nodes, 1)
            out[self.alpha::m] -= c * scal
        return out

    def pair(self, u):
        """∫ u . a for a nodal field (n, m) or callable."""
        total = 0.0
        for rule, c in self.parts:
            vals = as_matrix(rule.evaluate(u))
            total += c * rule.integrate(vals[:, self.alpha])
        return float(total)


def random_atom_specs(rng, dom, n, rho_range, m=1):
    from .common import random_points

    pts = random_points(rng, dom, n)
    out = []
    for p in pts:
        out.append(AtomSpec((float(p[0]), float(p[1])), float(rng.uniform(*rho_range)),
                            float(rng.uniform(0.0, 2.0 * np.pi)), int(rng.integers(0, m)),
                            float(rng.uniform(-1.0, 1.0))))
    return out


@dataclass
class BMOEstimate:
    value: float
    atomic: float
    n_centers: int
    radii: list
    argmax: tuple

    def __float__(self):
        return float(self.value)


def sample_centers(dom, sampling):
    lo, hi = dom.vertices.min(axis=0), dom.vertices.max(axis=0)
    g = np.linspace(0.0, 1.0, sampling)
    pts = np.array([lo + (hi - lo) * np.array([a, b]) for a in g for b in g])
    return pts[dom.contains(pts)]


def bmo_norm(u, dom, sampling=16, radii=None, mesh=None, n_atoms=0, seed=0, atom_rho=None):
    """Sampled BMO_D seminorm sup (1/|Ω_ρ(x)|) ∫ |u - [u]_{x,ρ}| over a center grid.

    Centers form a ``sampling`` x ``sampling`` grid over the bounding box
    (kept when in the closed domain); radii default to the dyadic values
    r0 2^-k that are at least 4h.  With ``n_atoms > 0`` the report also
    carries max |∫ u . a| over a seeded random atom family.
    """
    if hasattr(u, "mesh") and mesh is None:
        mesh = u.mesh
    vals_nodal = getattr(u, "values", u)
    centers = sample_centers(dom, sampling)
    if len(centers) < 16:
        raise ValueError(f"sampling too coarse: {len(centers)} centers < 16")
    if radii is None:
        radii = [dom.r0 * 0.5 ** k for k in range(0, 20) if dom.r0 * 0.5 ** k >= 4.0 * mesh.h]
        radii = [r for r in radii if r < dom.r0] or [dom.r0 * 0.5]
    best, arg = 0.0, None
    for x in centers:
        for r in radii:
            ld = local_domain(dom, x, r)
            rule = disk_rule(mesh, ld.anchor, r, degree=2)
            v = as_matrix(rule.evaluate(vals_nodal))
            avg = d_average(rule, v, ld)
            osc = rule.mean(np.linalg.norm(v - avg, axis=1))
            if osc > best:
                best, arg = float(osc), (float(x[0]), float(x[1]), float(r))
    atomic = 0.0
    if n_atoms:
        rng = np.random.default_rng(seed)
        m = as_matrix(vals_nodal).shape[1]
        rr = atom_rho or (4.0 * mesh.h, dom.r0)
        for spec in random_atom_specs(rng, dom, n_atoms, rr, m):
            atomic = max(atomic, abs(Atom(mesh, dom, spec).pair(vals_nodal)))
    return BMOEstimate(best, atomic, len(centers), list(radii), arg)
