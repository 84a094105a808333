"""Exact clipping of convex polygons against disks and half-planes.

The clipped region is described by its boundary pieces (straight segments
and circular arcs, counterclockwise).  Integrals over the region use a
star-shaped product rule: every boundary piece is joined to an interior
star centre and integrated in (boundary parameter, radial fraction), which
keeps all points inside the region and all weights positive.
"""

import numpy as np

from .quadrature import gauss_legendre

TWO_PI = 2.0 * np.pi


def clip_halfplane(poly, normal, offset):
    """Clip a convex polygon to ``{p : normal . p <= offset}``."""
    out = []
    n = len(poly)
    vals = poly @ normal - offset
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        va, vb = vals[i], vals[(i + 1) % n]
        if va <= 0.0:
            out.append(a)
        if (va < 0.0 < vb) or (vb < 0.0 < va):
            t = va / (va - vb)
            out.append(a + t * (b - a))
    if len(out) < 3:
        return np.empty((0, 2))
    return np.asarray(out)


def _inside_all_edges(poly, point, margin):
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        d = b - a
        length = np.hypot(d[0], d[1])
        cross = d[0] * (point[1] - a[1]) - d[1] * (point[0] - a[0])
        if cross / length < margin:
            return False
    return True


def disk_pieces(poly, center, radius):
    """Boundary pieces of ``poly ∩ B(center, radius)`` for a convex ccw polygon.

    Returns a list of ``("seg", p0, p1)`` and ``("arc", theta0, span)`` tuples.
    An empty list means the intersection has zero area.
    """
    tol = 1e-13 * radius
    segs = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        d = b - a
        f = a - center
        qa = d @ d
        if qa == 0.0:
            continue
        qb = 2.0 * (f @ d)
        qc = f @ f - radius * radius
        disc = qb * qb - 4.0 * qa * qc
        if disc <= 0.0:
            continue
        sq = np.sqrt(disc)
        t0 = (-qb - sq) / (2.0 * qa)
        t1 = (-qb + sq) / (2.0 * qa)
        lo, hi = max(t0, 0.0), min(t1, 1.0)
        if (hi - lo) * np.sqrt(qa) <= tol:
            continue
        segs.append((a + lo * d, a + hi * d))

    if not segs:
        if _inside_all_edges(poly, center, radius):
            return [("arc", 0.0, TWO_PI)]
        return []

    pieces = []
    k = len(segs)
    for i in range(k):
        p0, p1 = segs[i]
        pieces.append(("seg", p0, p1))
        nxt = segs[(i + 1) % k][0]
        if np.hypot(*(nxt - p1)) > tol:
            th0 = np.arctan2(p1[1] - center[1], p1[0] - center[0])
            th1 = np.arctan2(nxt[1] - center[1], nxt[0] - center[0])
            span = (th1 - th0) % TWO_PI
            if span > 0.0:
                pieces.append(("arc", th0, span))
    return pieces


def polygon_pieces(poly):
    n = len(poly)
    return [("seg", poly[i], poly[(i + 1) % n]) for i in range(n)]


def _star_centre(pieces, center, radius):
    pts = []
    for kind, a, b in pieces:
        if kind == "seg":
            pts.append(a)
            pts.append(b)
        else:
            for th in (a, a + 0.5 * b, a + b):
                pts.append(center + radius * np.array([np.cos(th), np.sin(th)]))
    return np.mean(pts, axis=0)


def pieces_rule(pieces, degree=2, center=None, radius=None):
    """Quadrature points/weights for the region bounded by ``pieces``.

    Exact for polynomials of total degree ``degree`` on straight pieces and
    accurate to round-off on arcs.
    """
    if not pieces:
        return np.empty((0, 2)), np.empty(0)
    c = _star_centre(pieces, center, radius)
    s, ws = gauss_legendre(max(1, (degree + 3) // 2))
    pts_all, w_all = [], []
    for kind, a, b in pieces:
        if kind == "seg":
            t, wt = gauss_legendre(max(1, (degree + 2) // 2))
            d = b - a
            jac = (a[0] - c[0]) * d[1] - (a[1] - c[1]) * d[0]
            if jac <= 0.0:
                continue
            gam = a[None, :] + t[:, None] * d[None, :]
            wt = wt * jac
        else:
            th0, span = a, b
            nt = 8 + degree + int(16 * span / np.pi)
            t, wt = gauss_legendre(nt)
            th = th0 + span * t
            cs, sn = np.cos(th), np.sin(th)
            gam = center[None, :] + radius * np.column_stack([cs, sn])
            dg = radius * np.column_stack([-sn, cs])
            jac = (gam[:, 0] - c[0]) * dg[:, 1] - (gam[:, 1] - c[1]) * dg[:, 0]
            wt = wt * span * jac
        # radial direction: point = c + s (gam - c), jacobian s
        rel = gam - c
        p = c[None, None, :] + s[None, :, None] * rel[:, None, :]
        w = wt[:, None] * (ws * s)[None, :]
        pts_all.append(p.reshape(-1, 2))
        w_all.append(w.ravel())
    if not pts_all:
        return np.empty((0, 2)), np.empty(0)
    return np.concatenate(pts_all), np.concatenate(w_all)


def polygon_disk_rule(poly, center, radius, degree=2, halfplane=None):
    """Rule for ``poly ∩ disk`` (optionally cut by ``halfplane=(normal, offset)``)."""
    poly = np.asarray(poly, dtype=float)
    center = np.asarray(center, dtype=float)
    if halfplane is not None:
        poly = clip_halfplane(poly, *halfplane)
        if len(poly) == 0:
            return np.empty((0, 2)), np.empty(0)
    pieces = disk_pieces(poly, center, radius)
    return pieces_rule(pieces, degree, center, radius)


def polygon_rule(poly, degree=2):
    return pieces_rule(polygon_pieces(poly), degree)


def segment_disk_interval(a, b, center, radius):
    """Parameter interval ``[lo, hi]`` of segment a->b inside the closed disk, or None."""
    d = b - a
    f = a - center
    qa = d @ d
    qb = 2.0 * (f @ d)
    qc = f @ f - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        return None
    sq = np.sqrt(disc)
    lo = max((-qb - sq) / (2.0 * qa), 0.0)
    hi = min((-qb + sq) / (2.0 * qa), 1.0)
    if hi <= lo:
        return None
    return lo, hi


def triangles_disk_rule(tris, center, radius, degree=2):
    """Vectorized ``triangle ∩ disk`` rules for many ccw triangles at once.

    Returns points (C, K, 2), weights (C, K) (zero-padded) and a boolean mask
    of cells that were handled; cells whose intersection has no straight
    piece (disk strictly inside the triangle) are left to ``polygon_disk_rule``.
    """
    C = len(tris)
    c = np.asarray(center, dtype=float)
    tol = 1e-13 * radius
    a = tris
    b = np.roll(tris, -1, axis=1)
    d = b - a
    f = a - c
    qa = np.einsum("cid,cid->ci", d, d)
    qb = 2.0 * np.einsum("cid,cid->ci", f, d)
    qc = np.einsum("cid,cid->ci", f, f) - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    sq = np.sqrt(np.maximum(disc, 0.0))
    lo = np.maximum((-qb - sq) / (2.0 * qa), 0.0)
    hi = np.minimum((-qb + sq) / (2.0 * qa), 1.0)
    valid = (disc > 0.0) & ((hi - lo) * np.sqrt(qa) > tol)
    p0 = a + lo[..., None] * d
    p1 = a + hi[..., None] * d
    handled = valid.any(axis=1)

    # arc i runs from the end of segment i to the start of the next valid segment
    nxt = np.empty((C, 3), dtype=np.int64)
    for i in range(3):
        cand = np.full(C, i)
        for k in (2, 1):
            j = (i + k) % 3
            cand = np.where(valid[:, j], j, cand)
        nxt[:, i] = cand
    rows = np.arange(C)[:, None]
    q0 = p0[rows, nxt]
    gap = np.linalg.norm(q0 - p1, axis=2)
    has_arc = valid & (gap > tol)
    th0 = np.arctan2(p1[..., 1] - c[1], p1[..., 0] - c[0])
    th1 = np.arctan2(q0[..., 1] - c[1], q0[..., 0] - c[0])
    span = np.where(has_arc, (th1 - th0) % TWO_PI, 0.0)
    # a lone valid segment whose endpoints coincide would need a full turn
    span = np.where(has_arc & (span == 0.0), TWO_PI, span)

    # star centre: mean of segment endpoints and arc mid points
    thm = th0 + 0.5 * span
    arc_mid = c + radius * np.stack([np.cos(thm), np.sin(thm)], axis=-1)
    wv = valid[..., None].astype(float)
    wa = has_arc[..., None].astype(float)
    num = (wv * (p0 + p1)).sum(axis=1) + (wa * (p1 + arc_mid)).sum(axis=1)
    den = 2.0 * wv.sum(axis=1) + 2.0 * wa.sum(axis=1)
    star = num / np.maximum(den, 1.0)

    s, ws = gauss_legendre(max(1, (degree + 3) // 2))
    t, wt = gauss_legendre(max(1, (degree + 2) // 2))
    na = 8 + degree + int(16 * (span.max() if C else 0.0) / np.pi)
    ta, wta = gauss_legendre(na)

    # straight pieces: (C, 3, nt)
    ds = p1 - p0
    gam_s = p0[:, :, None, :] + t[None, None, :, None] * ds[:, :, None, :]
    rel0 = p0 - star[:, None, :]
    jac_s = rel0[..., 0] * ds[..., 1] - rel0[..., 1] * ds[..., 0]
    w_s = np.where(valid & (jac_s > 0.0), jac_s, 0.0)[..., None] * wt[None, None, :]
    # arcs: (C, 3, na)
    th = th0[..., None] + span[..., None] * ta[None, None, :]
    cs, sn = np.cos(th), np.sin(th)
    gam_a = c + radius * np.stack([cs, sn], axis=-1)
    dg = radius * np.stack([-sn, cs], axis=-1)
    rel = gam_a - star[:, None, None, :]
    jac_a = rel[..., 0] * dg[..., 1] - rel[..., 1] * dg[..., 0]
    w_a = (span[..., None] * wta[None, None, :]) * jac_a
    w_a = np.where(has_arc[..., None], w_a, 0.0)

    gam = np.concatenate([gam_s.reshape(C, -1, 2), gam_a.reshape(C, -1, 2)], axis=1)
    wb = np.concatenate([w_s.reshape(C, -1), w_a.reshape(C, -1)], axis=1)
    relb = gam - star[:, None, :]
    pts = star[:, None, None, :] + s[None, None, :, None] * relb[:, :, None, :]
    w = wb[:, :, None] * (ws * s)[None, None, :]
    return pts.reshape(C, -1, 2), w.reshape(C, -1), handled
