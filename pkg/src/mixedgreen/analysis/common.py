"""Sampling helpers shared by the verification checks."""

from dataclasses import dataclass

import numpy as np

from ..geometry import LocalDomain, local_domain
from ..meshing import boundary_rule, disk_rule
from ..operators import nodal_gradients


@dataclass(frozen=True)
class TrigField:
    """Smooth random field sum_k a_k cos(2π (k . y) / L + phase_k), per component."""

    freqs: np.ndarray
    amps: np.ndarray
    phases: np.ndarray
    length: float

    def __call__(self, points):
        points = np.atleast_2d(points)
        arg = 2.0 * np.pi * (points @ self.freqs.T) / self.length + self.phases
        return np.cos(arg) @ self.amps


def random_trig(rng, m=1, n_terms=6, kmax=3, length=1.0):
    freqs = rng.integers(-kmax, kmax + 1, size=(n_terms, 2)).astype(float)
    amps = rng.normal(size=(n_terms, m))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_terms)
    return TrigField(freqs, amps, phases, float(length))


def random_points(rng, dom, n, margin=0.0):
    """Uniform points in the domain (rejection sampling), at least ``margin`` from ∂Ω."""
    lo, hi = dom.vertices.min(axis=0), dom.vertices.max(axis=0)
    out = []
    while len(out) < n:
        p = lo + rng.uniform(size=(4 * n, 2)) * (hi - lo)
        p = p[dom.contains(p, tol=0.0)]
        if margin > 0.0:
            p = p[dom.boundary_distance(p)[0] >= margin]
        out.extend(p[: n - len(out)])
    return np.array(out)


def random_boundary_points(rng, dom, n):
    """Points uniform in arclength on ∂Ω."""
    cum = np.concatenate([[0.0], np.cumsum(dom.edge_lengths)])
    s = rng.uniform(0.0, cum[-1], size=n)
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, dom.n - 1)
    t = (s - cum[k]) / dom.edge_lengths[k]
    e = dom.edges[k]
    return e[:, 0] + t[:, None] * (e[:, 1] - e[:, 0])


def enlarge(ld, factor=2.0):
    """Same anchor, radius ``factor`` rho; stands in for Ω_{2ρ}(x) and contains Ω_ρ(x)."""
    rho = factor * ld.rho
    dom = ld.domain
    dist = dom.boundary_distance(ld.anchor[None, :])[0][0]
    touches = bool(dom.distance_to(ld.anchor[None, :], "D")[0] <= rho) if dom.has_dirichlet else False
    kind = ld.kind if ld.kind == "boundary" else ("interior" if dist > rho else "boundary")
    return LocalDomain(ld.center, rho, kind, touches, ld.anchor, dom, ld.normal)


def region(mesh, ld, degree=4):
    return disk_rule(mesh, ld.anchor, ld.rho, degree=degree)


def d_average(rule, vals, ld):
    """D-adapted average from precomputed values at rule points."""
    if ld.touches_D:
        return np.zeros(vals.shape[1:])
    return rule.mean(vals)


def as_matrix(vals):
    vals = np.asarray(vals, dtype=float)
    return vals[:, None] if vals.ndim == 1 else vals


def lp_norm(rule, vals, p):
    """(∫ |v|^p)^(1/p) with |.| the Euclidean norm over components."""
    mag = np.linalg.norm(as_matrix(vals), axis=1)
    if np.isinf(p):
        return float(mag.max()) if len(mag) else 0.0
    return float(rule.integrate(mag ** p) ** (1.0 / p))


def grad_lp_norm(mesh, rule, u, p):
    """(∫_region |∇u|^p)^(1/p) for a P1 field, gradients exact per element."""
    g = nodal_gradients(mesh, u)[rule.cells]
    mag = np.sqrt(np.sum(g * g, axis=(1, 2)))
    return float(rule.integrate(mag ** p) ** (1.0 / p))


def strain_l2_sq(mesh, rule, u):
    g = nodal_gradients(mesh, u)[rule.cells]
    eps = 0.5 * (g + np.swapaxes(g, 1, 2))
    return float(rule.integrate(np.sum(eps * eps, axis=(1, 2))))


def surface_rule(mesh, center, radius, tag="all"):
    """Boundary rule restricted exactly to ∂Ω ∩ B(center, radius)."""
    from ..clipping import segment_disk_interval
    from ..meshing import Rule
    from ..quadrature import segment_rule

    full = boundary_rule(mesh, tag)
    e = mesh.boundary_edges if tag == "all" else mesh.boundary_edges[mesh.edge_tags == tag]
    t, w = segment_rule(3)
    pts, wts, nodes, bary = [], [], [], []
    for i, j in e:
        a, b = mesh.nodes[i], mesh.nodes[j]
        iv = segment_disk_interval(a, b, center, radius)
        if iv is None:
            continue
        lo, hi = iv
        s = lo + (hi - lo) * t
        pts.append(a + s[:, None] * (b - a))
        wts.append(w * (hi - lo) * np.linalg.norm(b - a))
        nodes.append(np.tile([i, j, i], (len(t), 1)))
        bary.append(np.column_stack([1.0 - s, s, np.zeros_like(s)]))
    if not pts:
        return full.restrict(np.zeros(len(full.weights), dtype=bool))
    return Rule(np.concatenate(pts), np.concatenate(wts), np.concatenate(nodes),
                np.concatenate(bary), np.full(sum(len(x) for x in wts), -1))


def random_local_domains(rng, dom, n, rho_range, boundary=False):
    lds = []
    pts = random_boundary_points(rng, dom, n) if boundary else random_points(rng, dom, n)
    rhos = rng.uniform(rho_range[0], rho_range[1], size=n)
    for x, r in zip(pts, rhos):
        lds.append(local_domain(dom, x, float(r)))
    return lds
