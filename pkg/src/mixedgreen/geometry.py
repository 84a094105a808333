"""Polygonal domains with a Dirichlet/Neumann boundary decomposition.

Local domains are clipped disks ``B_rho(x) ∩ Ω``: centred at ``x`` when
the disk stays inside the domain, otherwise centred at the closest boundary
point ``x̂``.  Averages over local domains use the D-adapted convention,
returning zero whenever the local domain reaches the Dirichlet set.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, NotApplicable
from .report import VerificationReport

TAGS = ("D", "N")


@dataclass(frozen=True)
class Arc:
    """Maximal run of boundary edges sharing a tag.

    Edges ``start, start+1, ..., end-1`` (mod n); ``end == start + n`` for a
    closed loop covering the whole boundary.
    """

    start: int
    end: int
    tag: str

    def edges(self, n):
        return [k % n for k in range(self.start, self.end)]


def _segment_distance(points, a, b):
    """Distances and closest points from ``points`` (P,2) to segments a->b (S,2)."""
    points = np.atleast_2d(points)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    rel = points[:, None, :] - a[None, :, :]
    t = np.einsum("psj,sj->ps", rel, d) / dd[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :, :] + t[..., None] * d[None, :, :]
    dist = np.linalg.norm(points[:, None, :] - proj, axis=-1)
    return dist, proj


def _segments_intersect(p1, p2, q1, q2, eps):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps
                and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if ((o1 > eps and o2 < -eps) or (o1 < -eps and o2 > eps)) and (
            (o3 > eps and o4 < -eps) or (o3 < -eps and o4 > eps)):
        return True
    if abs(o1) <= eps and on_seg(p1, p2, q1):
        return True
    if abs(o2) <= eps and on_seg(p1, p2, q2):
        return True
    if abs(o3) <= eps and on_seg(q1, q2, p1):
        return True
    if abs(o4) <= eps and on_seg(q1, q2, p2):
        return True
    return False


@dataclass(frozen=True, eq=False)
class Domain:
    """Simple counterclockwise polygon; ``edge_tags[i]`` tags edge v_i -> v_{i+1}."""

    vertices: np.ndarray
    edge_tags: tuple
    M: float = 4.0
    r0: float = 0.0

    @classmethod
    def from_polygon(cls, vertices, tags, M=4.0, r0=None):
        """Validate and build a domain, reorienting clockwise input.

        ``tags`` is a single tag for all edges or one tag per edge.
        """
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("degenerate polygon: need at least 3 vertices")
        n = len(v)
        if isinstance(tags, str):
            tags = [tags] * n
        tags = list(tags)
        if len(tags) != n:
            raise DomainError(f"untagged edge: {len(tags)} tags for {n} edges")
        for t in tags:
            if t not in TAGS:
                raise DomainError(f"invalid tag {t!r}")
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if np.any(lengths <= 1e-14 * max(1.0, lengths.max())):
            raise DomainError("degenerate polygon: zero-length edge")
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if abs(area) <= 1e-14 * lengths.max() ** 2:
            raise DomainError("degenerate polygon: zero area")
        if area < 0:
            v = v[::-1].copy()
            tags = [tags[(n - 2 - j) % n] for j in range(n)]
        _check_simple(v)
        diam = _diameter(v)
        if r0 is None:
            r0 = 0.25 * diam
        if not (r0 > 0 and r0 <= diam):
            raise DomainError(f"r0={r0} must lie in (0, d={diam}]")
        if not M > 0:
            raise DomainError("M must be positive")
        return cls(v, tuple(tags), float(M), float(r0))

    @property
    def n(self):
        return len(self.vertices)

    @cached_property
    def d(self):
        return _diameter(self.vertices)

    @cached_property
    def area(self):
        v = self.vertices
        return 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])

    @cached_property
    def edges(self):
        """Edge endpoints, shape (n, 2, 2)."""
        v = self.vertices
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)

    @cached_property
    def edge_lengths(self):
        return np.linalg.norm(self.edges[:, 1] - self.edges[:, 0], axis=1)

    @property
    def perimeter(self):
        return float(self.edge_lengths.sum())

    @cached_property
    def arcs(self):
        n = self.n
        tags = self.edge_tags
        if all(t == tags[0] for t in tags):
            return (Arc(0, n, tags[0]),)
        # rotate so that we start at a tag change
        first = next(i for i in range(n) if tags[i] != tags[i - 1])
        arcs = []
        start = first
        for k in range(first + 1, first + n + 1):
            if k == first + n or tags[k % n] != tags[start % n]:
                arcs.append(Arc(start % n, start % n + (k - start), tags[start % n]))
                start = k
        return tuple(arcs)

    def tagged_segments(self, tag):
        mask = np.array([t == tag for t in self.edge_tags])
        return self.edges[mask]

    @property
    def has_dirichlet(self):
        return "D" in self.edge_tags

    @property
    def is_dirichlet(self):
        return all(t == "D" for t in self.edge_tags)

    def arc_length(self, arc):
        return float(sum(self.edge_lengths[e] for e in arc.edges(self.n)))

    def junctions(self):
        """Vertices where a D edge meets an N edge (the relative boundary of D)."""
        n = self.n
        return [i for i in range(n)
                if self.edge_tags[i] != self.edge_tags[i - 1]]

    def boundary_distance(self, points):
        """Distance to ∂Ω, closest boundary point, and index of the closest edge."""
        e = self.edges
        dist, proj = _segment_distance(points, e[:, 0], e[:, 1])
        k = np.argmin(dist, axis=1)
        idx = np.arange(len(k))
        return dist[idx, k], proj[idx, k], k

    def distance_to(self, points, tag):
        segs = self.tagged_segments(tag)
        points = np.atleast_2d(points)
        if len(segs) == 0:
            return np.full(len(points), np.inf)
        dist, _ = _segment_distance(points, segs[:, 0], segs[:, 1])
        return dist.min(axis=1)

    def contains(self, points, tol=None):
        """Closed-set membership (points within ``tol`` of ∂Ω count as inside)."""
        points = np.atleast_2d(points)
        if tol is None:
            tol = 1e-12 * self.d
        v = self.vertices
        x, y = points[:, 0:1], points[:, 1:2]
        x1, y1 = v[:, 0][None, :], v[:, 1][None, :]
        x2, y2 = np.roll(v[:, 0], -1)[None, :], np.roll(v[:, 1], -1)[None, :]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        crossing = cond & (x < xint)
        inside = np.count_nonzero(crossing, axis=1) % 2 == 1
        near, _, _ = self.boundary_distance(points)
        return inside | (near <= tol)

    def inward_normal(self, edge):
        a, b = self.edges[edge]
        t = (b - a) / np.linalg.norm(b - a)
        return np.array([-t[1], t[0]])

    @cached_property
    def coarse_triangles(self):
        """Constrained triangulation of the polygon without Steiner points."""
        import triangle

        n = self.n
        seg = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
        out = triangle.triangulate({"vertices": self.vertices, "segments": seg}, "pQ")
        return out["vertices"][out["triangles"]]


def _diameter(v):
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _check_simple(v):
    n = len(v)
    scale = np.abs(v).max() + 1.0
    eps = 1e-12 * scale * scale
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n], eps):
                raise DomainError(f"self-intersecting polygon: edges {i} and {j}")


def parse_domain(text):
    """Parse the plain-text domain format.

    Lines: ``v x y`` (vertices in order), ``arc i j TAG`` (edges from vertex
    i to vertex j going forward, 0-based; ``j = i + n`` covers the whole
    boundary), ``M <real>``, ``r0 <real>``.  ``#`` starts a comment.
    """
    verts, arcs = [], []
    M, r0 = 4.0, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "v" and len(parts) == 3:
                verts.append((float(parts[1]), float(parts[2])))
            elif key == "arc" and len(parts) == 4:
                arcs.append((int(parts[1]), int(parts[2]), parts[3]))
            elif key == "M" and len(parts) == 2:
                M = float(parts[1])
            elif key == "r0" and len(parts) == 2:
                r0 = float(parts[1])
            else:
                raise DomainError(f"line {lineno}: cannot parse {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"line {lineno}: bad number in {raw.strip()!r}") from None
    n = len(verts)
    if n < 3:
        raise DomainError("degenerate polygon: need at least 3 vertices")
    tags = [None] * n
    for i, j, tag in arcs:
        if tag not in TAGS:
            raise DomainError(f"invalid tag {tag!r}")
        if not (0 <= i < n and 0 <= j <= n + i):
            raise DomainError(f"arc {i} {j}: vertex index out of range")
        if j == i:
            raise DomainError(f"zero-length arc {i} {j}")
        stop = j if j > i else j + n
        for k in range(i, stop):
            if tags[k % n] is not None:
                raise DomainError(f"edge {k % n} tagged twice")
            tags[k % n] = tag
    missing = [k for k, t in enumerate(tags) if t is None]
    if missing:
        raise DomainError(f"untagged edge {missing[0]}")
    return Domain.from_polygon(verts, tags, M=M, r0=r0)


def build_domain(spec):
    """Build a Domain from domain-file content (a string)."""
    return parse_domain(spec)


def load_domain(path):
    with open(path) as fh:
        return parse_domain(fh.read())


def format_domain(dom):
    lines = [f"v {float(x)!r} {float(y)!r}" for x, y in dom.vertices]
    for arc in dom.arcs:
        lines.append(f"arc {arc.start} {arc.end} {arc.tag}")
    lines.append(f"M {float(dom.M)!r}")
    lines.append(f"r0 {float(dom.r0)!r}")
    return "\n".join(lines) + "\n"


def rectangle(x0, y0, x1, y1, tags="D", **kw):
    """Axis-aligned rectangle; ``tags`` per edge: bottom, right, top, left."""
    return Domain.from_polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], tags, **kw)


def regular_polygon(n, radius=1.0, center=(0.0, 0.0), tag="D", **kw):
    th = 2.0 * np.pi * np.arange(n) / n
    v = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
    return Domain.from_polygon(v, tag, **kw)


@dataclass(frozen=True, eq=False)
class LocalDomain:
    """Clipped disk ``B_rho(anchor) ∩ Ω`` playing the role of Ω_ρ(x)."""

    center: np.ndarray
    rho: float
    kind: str
    touches_D: bool
    anchor: np.ndarray
    domain: Domain
    normal: np.ndarray = None

    @property
    def star_center(self):
        """Point whose ρ/2-disk lies in the region (used by Korn's inequality)."""
        if self.kind == "interior":
            return self.center
        return self.anchor + 0.5 * self.rho * self.normal

    def area(self):
        """Exact area of the clipped region, independent of any mesh."""
        from .clipping import polygon_disk_rule

        total = 0.0
        for tri in self.domain.coarse_triangles:
            _, w = polygon_disk_rule(tri, self.anchor, self.rho, degree=0)
            total += w.sum()
        return total


def local_domain(dom, x, rho):
    """Local domain Ω_ρ(x) for ``x`` in the closure of ``dom``."""
    x = np.asarray(x, dtype=float)
    if not dom.contains(x[None, :])[0]:
        raise DomainError(f"point {tuple(x)} outside the closed domain")
    if not (0.0 < rho < 4.0 * dom.r0):
        raise DomainError(f"rho={rho} outside (0, 4 r0) = (0, {4 * dom.r0})")
    dist, xhat, edge = dom.boundary_distance(x[None, :])
    if dist[0] > rho:
        return LocalDomain(x, float(rho), "interior", False, x, dom, None)
    xhat = xhat[0]
    touches = bool(dom.distance_to(xhat[None, :], "D")[0] <= rho)
    return LocalDomain(x, float(rho), "boundary", touches, xhat, dom,
                       dom.inward_normal(edge[0]))


def d_adapted_average(mesh, u, ld):
    """D-adapted average ``[u]_{x,rho}`` of a nodal field or callable.

    Zero when the local domain touches D; otherwise the mean of ``u`` over the
    clipped region, computed with exact cut-cell quadrature.
    """
    from .meshing import disk_rule

    rule = disk_rule(mesh, ld.anchor, ld.rho, degree=2)
    vals = rule.evaluate(u)
    if ld.touches_D:
        return np.zeros(vals.shape[1:]) if vals.ndim > 1 else 0.0
    if rule.weights.sum() <= 0.0:
        raise DomainError("empty local domain")
    return rule.mean(vals)


def check_corkscrew(dom, n_radii=6, samples=257):
    """Sampled check of the interior corkscrew condition for D.

    For every junction point p (endpoint of a D arc) and each dyadic radius
    r = r0 2^-k, k = 1..n_radii, search D ∩ B̄_r(p) for a point whose
    distance to N is at least r / M.
    """
    if not dom.has_dirichlet:
        raise NotApplicable("corkscrew check needs a nonempty D")
    if n_radii < 1:
        raise ValueError("n_radii must be >= 1")
    from .clipping import segment_disk_interval

    radii = dom.r0 * 0.5 ** np.arange(1, n_radii + 1)
    dsegs = dom.tagged_segments("D")
    worst = np.inf
    violations, trace = [], []
    junctions = dom.junctions()
    for j in junctions:
        p = dom.vertices[j]
        for r in radii:
            cands = []
            for a, b in dsegs:
                iv = segment_disk_interval(a, b, p, r)
                if iv is None:
                    continue
                t = np.linspace(iv[0], iv[1], samples)
                cands.append(a[None, :] + t[:, None] * (b - a)[None, :])
            if not cands:
                violations.append((int(j), float(r)))
                worst = 0.0
                continue
            cands = np.concatenate(cands)
            ratio = dom.distance_to(cands, "N") / r
            k = int(np.argmax(ratio))
            best = float(ratio[k])
            trace.append({"vertex": int(j), "r": float(r), "ratio": best,
                          "witness_x": float(cands[k, 0]), "witness_y": float(cands[k, 1])})
            worst = min(worst, best)
            if best < 1.0 / dom.M:
                violations.append((int(j), float(r)))
    if not junctions:
        worst = np.inf
    return VerificationReport(
        kind="corkscrew",
        passed=not violations,
        inputs={"n_junctions": len(junctions), "n_radii": n_radii, "M": dom.M, "r0": dom.r0},
        quantities={"largest_feasible_inv_M": worst, "violations": len(violations)},
        thresholds={"inv_M": 1.0 / dom.M},
        trace=trace,
        notes=[f"violation at vertex {j}, r={r}" for j, r in violations],
    )
