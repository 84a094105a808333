"""Least-squares fits of logarithmic singularities and power-law decay."""

import numpy as np

from ..meshing import interpolate


def circle_average(mesh, values, center, r, n_theta=256):
    """Mean of a nodal field over the circle |y - center| = r (points outside the mesh skipped)."""
    th = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    pts = np.asarray(center) + r * np.column_stack([np.cos(th), np.sin(th)])
    if mesh.domain is not None:
        pts = pts[mesh.domain.contains(pts, tol=0.0)]
    if len(pts) == 0:
        raise ValueError(f"circle of radius {r} lies outside the mesh")
    return np.mean(interpolate(mesh, values, pts), axis=0)


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def log_window(gf, d=None):
    """Admissible radii window: [4ρ, d/4] for bounded domains, [2ρ, 1/ρ] in free space."""
    if gf.bc == "free":
        return 2.0 * gf.rho, 1.0 / gf.rho
    d = gf.mesh.domain.d if d is None else d
    return 4.0 * gf.rho, d / 4.0


def fit_log_singularity(gf, radii, enforce_window=True):
    """Fit circle averages of G^{alpha alpha}(x, .) against log r.

    Returns (slopes, intercepts, r2) arrays with one entry per component.
    """
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    if enforce_window:
        lo, hi = log_window(gf)
        if radii.min() < lo * (1 - 1e-12) or radii.max() > hi * (1 + 1e-12):
            raise ValueError(f"radii must lie in [{lo:g}, {hi:g}]")
    m = gf.m
    slopes, icepts, r2s = [], [], []
    for a in range(m):
        avg = np.array([circle_average(gf.mesh, gf.columns[a].values[:, a], gf.x, r) for r in radii])
        s, c, r2 = _linfit(np.log(radii), avg)
        slopes.append(s)
        icepts.append(c)
        r2s.append(r2)
    return np.array(slopes), np.array(icepts), np.array(r2s)


def fit_decay_exponent(values):
    """Log-log slope of |value| against distance; needs 4 positive samples."""
    arr = np.asarray(values, dtype=float).reshape(-1, 2)
    keep = (arr[:, 0] > 0) & (np.abs(arr[:, 1]) > 0) & np.isfinite(arr).all(axis=1)
    arr = arr[keep]
    if len(arr) < 4:
        raise ValueError(f"need at least 4 positive samples, got {len(arr)}")
    slope, _, _ = _linfit(np.log(arr[:, 0]), np.log(np.abs(arr[:, 1])))
    return slope


def path_samples(gf, start, direction, ts, alpha=0, beta=0):
    """(t, |G^{alpha beta}(x, start + t direction)|) pairs along a straight path."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    pts = np.asarray(start, dtype=float) + np.asarray(ts)[:, None] * direction
    vals = gf(pts)[:, alpha, beta]
    return np.column_stack([ts, np.abs(vals)])


def log_bound_ratio(gf, points, d=None):
    """max |G(x, y)| / (1 + log(d / |x - y|)) over points with |x - y| in [4ρ, d/4]."""
    d = gf.mesh.domain.d if d is None else d
    r = np.linalg.norm(np.asarray(points) - gf.x, axis=1)
    keep = (r >= 4.0 * gf.rho) & (r <= d / 4.0)
    pts, r = np.asarray(points)[keep], r[keep]
    if len(pts) == 0:
        raise ValueError("no points in the admissible annulus")
    vals = np.abs(gf(pts)).max(axis=(1, 2))
    return float(np.max(vals / (1.0 + np.log(d / r))))
