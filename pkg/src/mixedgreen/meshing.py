"""Conforming P1 triangulations with tagged boundary edges, and quadrature.

Meshes come from the ``triangle`` library (constrained Delaunay with a 20
degree minimum angle), refined until every edge meets a target size.
Quadrature rules are stored uniformly as (points, weights, node indices,
barycentric weights) so that nodal fields and callables can be integrated
with the same code.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .clipping import polygon_disk_rule, triangles_disk_rule
from .errors import MeshError
from .quadrature import segment_rule, triangle_rule

MAX_NODES = 2_000_000
MAX_LEVELS = 12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of ``domain``; ``boundary_edges[k]`` carries ``edge_tags[k]``."""

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    domain: object = None

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def vertices(self):
        """Triangle vertex coordinates, shape (T, 3, 2)."""
        return self.nodes[self.triangles]

    @cached_property
    def areas(self):
        p = self.vertices
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def grads(self):
        """Gradients of the three hat functions on each triangle, shape (T, 3, 2)."""
        p = self.vertices
        a2 = 2.0 * self.areas
        g = np.empty_like(p)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / a2
            g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / a2
        return g

    @cached_property
    def centroids(self):
        return self.vertices.mean(axis=1)

    @cached_property
    def edge_lengths(self):
        p = self.vertices
        return np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)

    @cached_property
    def h(self):
        return float(self.edge_lengths.max())

    @cached_property
    def tagged_nodes(self):
        """Sorted node indices lying on D edges and on N edges."""
        out = {}
        for tag in ("D", "N"):
            e = self.boundary_edges[self.edge_tags == tag]
            out[tag] = np.unique(e.ravel())
        return out

    @property
    def dirichlet_nodes(self):
        return self.tagged_nodes["D"]

    @cached_property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges.ravel())

    @cached_property
    def _tree(self):
        return cKDTree(self.centroids)

    def local_h(self, x, radius=None):
        """Largest edge among triangles within ``radius`` of ``x`` (default: the cell containing x)."""
        x = np.asarray(x, dtype=float)
        if radius is None:
            cell, _ = locate(self, x[None, :])
            if cell[0] < 0:
                raise MeshError(f"point {tuple(x)} outside mesh")
            return float(self.edge_lengths[cell[0]].max())
        near = _triangle_point_distance(self.vertices, x) <= radius
        return float(self.edge_lengths[near].max())


def _triangle_point_distance(tris, x):
    """Distance from ``x`` to each triangle (zero inside), tris shape (T, 3, 2)."""
    best = np.full(len(tris), np.inf)
    for i in range(3):
        a, b = tris[:, i], tris[:, (i + 1) % 3]
        d = b - a
        t = np.einsum("ij,ij->i", x - a, d) / np.einsum("ij,ij->i", d, d)
        t = np.clip(t, 0.0, 1.0)
        q = a + t[:, None] * d
        best = np.minimum(best, np.linalg.norm(x - q, axis=1))
    inside = np.ones(len(tris), dtype=bool)
    for i in range(3):
        a, b = tris[:, i], tris[:, (i + 1) % 3]
        cr = (b[:, 0] - a[:, 0]) * (x[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (x[0] - a[:, 0])
        inside &= cr >= 0.0
    best[inside] = 0.0
    return best


def _from_triangle(out, dom):
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    segs = np.asarray(out["segments"], dtype=np.int64)
    marks = np.asarray(out["segment_markers"]).ravel()
    tags = np.array([dom.edge_tags[m - 2] for m in marks])
    # enforce counterclockwise orientation
    p = nodes[tris]
    cr = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cr < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return Mesh(nodes, tris, segs, tags, dom)


def triangulate(dom, h, size=None, max_nodes=MAX_NODES):
    """Mesh ``dom`` with every edge no longer than ``h``.

    ``size``, if given, maps triangle vertex arrays (T, 3, 2) to per-triangle
    target edge lengths; the effective target is ``min(h, size)``.
    """
    import triangle

    if not h > 0:
        raise MeshError("h must be positive")
    if h >= dom.r0 * 4 and h > dom.d:
        raise MeshError(f"h={h} larger than the domain")
    est = 2.5 * dom.area / (0.433 * h * h)
    if size is None and est > max_nodes:
        raise MeshError(f"h={h} exceeds the memory budget ({est:.0f} nodes)")
    n = dom.n
    seg = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    data = {
        "vertices": dom.vertices,
        "segments": seg,
        "segment_markers": np.arange(n) + 2,
    }
    area0 = 0.4 * h * h
    out = triangle.triangulate(data, f"pq20a{area0:.17g}Q")
    for _ in range(60):
        tris = out["vertices"][out["triangles"]]
        longest = np.linalg.norm(tris[:, [1, 2, 0]] - tris, axis=2).max(axis=1)
        target = np.full(len(tris), float(h))
        if size is not None:
            target = np.minimum(target, size(tris))
        bad = longest > target * (1.0 + 1e-12)
        if not bad.any():
            break
        if len(out["vertices"]) > max_nodes:
            raise MeshError(f"mesh exceeds the memory budget ({max_nodes} nodes)")
        p = tris
        area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        cap = np.where(bad, np.minimum(0.5 * area, 0.4 * target ** 2), -1.0)
        out["triangle_max_area"] = cap
        out = triangle.triangulate(out, "rpq20aQ")
    else:
        raise MeshError("size targets not reached")
    return _from_triangle(out, dom)


def graded_size(center, levels, h, r0):
    """Size function for ``refine_toward``: h 2^-k within 2^-k r0 of ``center``."""
    center = np.asarray(center, dtype=float)

    def size(tris):
        dist = _triangle_point_distance(tris, center)
        out = np.full(len(tris), float(h))
        for k in range(1, levels + 1):
            out = np.where(dist <= r0 * 0.5 ** k, h * 0.5 ** k, out)
        return out

    return size


def radial_size(center, h_near, h_far, rate=0.08):
    """Size growing linearly with distance: max(h_near, rate r), capped at h_far."""
    center = np.asarray(center, dtype=float)

    def size(tris):
        dist = _triangle_point_distance(tris, center)
        return np.clip(rate * dist, h_near, h_far)

    return size


def refine_toward(mesh, x, levels, h=None):
    """Re-mesh so that edges within 2^-k r0 of ``x`` are at most h 2^-k, k <= levels."""
    if levels < 1:
        raise MeshError("levels must be >= 1")
    if levels > MAX_LEVELS:
        raise MeshError(f"levels={levels} beyond cap {MAX_LEVELS}")
    dom = mesh.domain
    x = np.asarray(x, dtype=float)
    if not dom.contains(x[None, :])[0]:
        raise MeshError(f"point {tuple(x)} outside the domain")
    h = mesh.h if h is None else h
    return triangulate(dom, h, size=graded_size(x, levels, h, dom.r0))


def uniform_refine(mesh):
    """Red refinement: split every triangle into four via edge midpoints."""
    tris = mesh.triangles
    n = mesh.n_nodes
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    nodes = np.concatenate([mesh.nodes, mids])
    t = len(tris)
    m01, m12, m20 = (n + inv[:t], n + inv[t:2 * t], n + inv[2 * t:])
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    lookup = {tuple(e): n + i for i, e in enumerate(uniq)}
    bedges, btags = [], []
    for (i, j), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        mid = lookup[(min(i, j), max(i, j))]
        bedges += [(i, mid), (mid, j)]
        btags += [tag, tag]
    return Mesh(nodes, new, np.array(bedges, dtype=np.int64), np.array(btags), mesh.domain)


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True, eq=False)
class Rule:
    """Quadrature points with the P1 interpolation data needed for nodal fields."""

    points: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray
    bary: np.ndarray
    cells: np.ndarray = None

    @property
    def measure(self):
        return float(self.weights.sum())

    def evaluate(self, u):
        """Values of ``u`` at the points: callable, nodal array (n,) / (n, m), or solution."""
        if hasattr(u, "values") and not isinstance(u, np.ndarray):
            u = u.values
        if callable(u):
            return np.asarray(u(self.points), dtype=float)
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            return np.einsum("qk,qk->q", self.bary, u[self.nodes])
        return np.einsum("qk,qkm->qm", self.bary, u[self.nodes])

    def integrate(self, vals):
        return np.tensordot(self.weights, vals, axes=(0, 0))

    def mean(self, vals):
        return self.integrate(vals) / self.measure

    def restrict(self, mask):
        cells = None if self.cells is None else self.cells[mask]
        return Rule(self.points[mask], self.weights[mask], self.nodes[mask], self.bary[mask], cells)


def _cell_rule(mesh, cells, degree):
    bary, w = triangle_rule(degree)
    p = mesh.vertices[cells]
    pts = np.einsum("qk,tkd->tqd", bary, p).reshape(-1, 2)
    wts = (mesh.areas[cells][:, None] * w[None, :]).ravel()
    nodes = np.repeat(mesh.triangles[cells], len(w), axis=0)
    b = np.tile(bary, (len(cells), 1))
    return pts, wts, nodes, b, np.repeat(cells, len(w))


def _bary_of(p, tri):
    """Barycentric coordinates of points ``p`` (Q, 2) in one triangle (3, 2)."""
    t = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    l12 = np.linalg.solve(t, (p - tri[0]).T).T
    return np.column_stack([1.0 - l12.sum(axis=1), l12])


def _bary_many(pts, tris):
    """Barycentric coordinates of pts (C, K, 2) in tris (C, 3, 2)."""
    e1, e2 = tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    r = pts - tris[:, None, 0]
    l1 = (r[..., 0] * e2[:, None, 1] - r[..., 1] * e2[:, None, 0]) / det[:, None]
    l2 = (e1[:, None, 0] * r[..., 1] - e1[:, None, 1] * r[..., 0]) / det[:, None]
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def volume_rule(mesh, degree=2):
    return Rule(*_cell_rule(mesh, np.arange(mesh.n_triangles), degree))


def _candidates(mesh, center, radius):
    reach = radius + mesh.h
    idx = mesh._tree.query_ball_point(center, reach)
    return np.sort(np.asarray(idx, dtype=np.int64))


def disk_rule(mesh, center, radius, degree=2, halfplane=None):
    """Rule for ``B(center, radius) ∩ Ω`` (optionally ∩ {n.p <= c}), exact on cut cells."""
    center = np.asarray(center, dtype=float)
    cand = _candidates(mesh, center, radius)
    p = mesh.vertices[cand]
    dist = np.linalg.norm(p - center, axis=2)
    inside = dist <= radius
    if halfplane is not None:
        normal, offset = np.asarray(halfplane[0], dtype=float), float(halfplane[1])
        hv = p @ normal - offset <= 0.0
        full = inside.all(axis=1) & hv.all(axis=1)
        touch_h = hv.any(axis=1)
    else:
        full = inside.all(axis=1)
        touch_h = np.ones(len(cand), dtype=bool)
    touch = (_triangle_point_distance(p, center) < radius) & touch_h
    cut = np.nonzero(touch & ~full)[0]
    parts = [_cell_rule(mesh, cand[full], degree)]
    slow = cut
    if halfplane is None and len(cut):
        qp, qw, ok = triangles_disk_rule(p[cut], center, radius, degree)
        fast = cut[ok]
        qp, qw = qp[ok], qw[ok]
        keep = qw > 0.0
        cells = np.repeat(cand[fast], qw.shape[1]).reshape(qw.shape)
        bary = _bary_many(qp, p[fast])
        nodes = np.repeat(mesh.triangles[cand[fast]][:, None, :], qw.shape[1], axis=1)
        parts.append((qp[keep], qw[keep], nodes[keep], bary[keep], cells[keep]))
        slow = cut[~ok]
    for k in slow:
        qp, qw = polygon_disk_rule(p[k], center, radius, degree,
                                   halfplane=None if halfplane is None else (normal, offset))
        if len(qw) == 0:
            continue
        parts.append((qp, qw, np.repeat(mesh.triangles[cand[k]][None, :], len(qw), axis=0),
                      _bary_of(qp, p[k]), np.full(len(qw), cand[k])))
    return Rule(*(np.concatenate(x) for x in zip(*parts)))


def region_rule(mesh, region="all", degree=2):
    """Rule for the whole mesh or for a LocalDomain."""
    if isinstance(region, str):
        if region != "all":
            raise ValueError(f"unknown region {region!r}")
        return volume_rule(mesh, degree)
    return disk_rule(mesh, region.anchor, region.rho, degree)


def boundary_rule(mesh, tag="all", degree=3):
    """Gauss rule along boundary edges with tag ``tag`` (D, N or all)."""
    if tag == "all":
        sel = np.ones(len(mesh.boundary_edges), dtype=bool)
    elif tag in ("D", "N"):
        sel = mesh.edge_tags == tag
    else:
        raise ValueError(f"unknown tag filter {tag!r}")
    e = mesh.boundary_edges[sel]
    t, w = segment_rule(degree)
    a, b = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
    length = np.linalg.norm(b - a, axis=1)
    pts = (a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    wts = (length[:, None] * w[None, :]).ravel()
    nodes = np.repeat(np.column_stack([e, e[:, 0]]), len(t), axis=0)
    bary = np.tile(np.column_stack([1.0 - t, t, np.zeros_like(t)]), (len(e), 1))
    return Rule(pts, wts, nodes, bary, np.full(len(wts), -1))


def integrate(mesh, g, region="all", degree=2):
    """Integral of ``g`` over the mesh or a LocalDomain."""
    rule = region_rule(mesh, region, degree)
    return rule.integrate(rule.evaluate(g))


def boundary_integrate(mesh, g, tag_filter="all", degree=3):
    rule = boundary_rule(mesh, tag_filter, degree)
    return rule.integrate(rule.evaluate(g))


# ------------------------------------------------------------ point location


def locate(mesh, points, tol=1e-10):
    """Containing triangle and barycentric coordinates; cell -1 if outside."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = min(16, mesh.n_triangles)
    _, cand = mesh._tree.query(points, k=k)
    cand = np.atleast_2d(cand)
    if cand.shape[0] != len(points):
        cand = cand.T
    cells = np.full(len(points), -1, dtype=np.int64)
    bary = np.zeros((len(points), 3))
    p = mesh.vertices
    for q in range(len(points)):
        for c in list(cand[q]) + [None]:
            if c is None:
                lam = _all_bary(p, points[q])
                ok = np.nonzero(lam.min(axis=1) >= -tol)[0]
                if len(ok):
                    cells[q], bary[q] = ok[0], lam[ok[0]]
                break
            lam = _bary_of(points[q][None, :], p[c])[0]
            if lam.min() >= -tol:
                cells[q], bary[q] = c, lam
                break
    return cells, bary


def _all_bary(p, x):
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    r = x - p[:, 0]
    l1 = (r[:, 0] * e2[:, 1] - r[:, 1] * e2[:, 0]) / det
    l2 = (e1[:, 0] * r[:, 1] - e1[:, 1] * r[:, 0]) / det
    return np.column_stack([1.0 - l1 - l2, l1, l2])


def point_rule(mesh, points):
    """Zero-weight rule used to interpolate nodal fields at arbitrary points."""
    cells, bary = locate(mesh, points)
    if (cells < 0).any():
        bad = np.atleast_2d(points)[cells < 0][0]
        raise MeshError(f"point {tuple(bad)} outside mesh")
    return Rule(np.atleast_2d(points), np.zeros(len(cells)), mesh.triangles[cells], bary, cells)


def interpolate(mesh, values, points):
    """P1 interpolation of nodal ``values`` at ``points``."""
    return point_rule(mesh, points).evaluate(values)


# ------------------------------------------------------------------ file I/O


def format_mesh(mesh):
    lines = [f"n {float(x)!r} {float(y)!r}" for x, y in mesh.nodes]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"b {i} {j} {t}" for (i, j), t in zip(mesh.boundary_edges, mesh.edge_tags)]
    return "\n".join(lines) + "\n"


def parse_mesh(text, domain=None):
    nodes, tris, bed, tags = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "n":
                nodes.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "t":
                tris.append(tuple(int(v) for v in parts[1:4]))
            elif parts[0] == "b":
                bed.append((int(parts[1]), int(parts[2])))
                tags.append(parts[3])
            else:
                raise MeshError(f"line {lineno}: unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, MeshError):
                raise
            raise MeshError(f"line {lineno}: malformed record") from None
    return Mesh(np.array(nodes), np.array(tris, dtype=np.int64),
                np.array(bed, dtype=np.int64).reshape(-1, 2), np.array(tags), domain)
