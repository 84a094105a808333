"""Coefficient tensors, ellipticity checks, and P1 assembly of the form A.

The tensor is stored as ``a[i, j, alpha, beta]`` (shape (2, 2, m, m)) so that

    A(u, phi) = ∫ a[i, j, alpha, beta] d_j u^beta d_i phi^alpha.

Degrees of freedom are numbered ``node * m + component``; the assembled
matrix ``K`` satisfies ``phi^T K u = A(u, phi)``, so ``K u = load`` is the
problem for L and ``K^T w = load`` the problem for the adjoint L*.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CoefficientError
from .expressions import as_field
from .meshing import boundary_rule, volume_rule
from .quadrature import MIDPOINT_BARY
from .report import VerificationReport

KINDS = ("scalar_laplace", "constant_tensor", "lame_variable")


def lame_tensor(mu, lam):
    """Lamé coefficients for arrays ``mu``, ``lam`` of shape (P,); returns (P, 2, 2, 2, 2)."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    d = np.eye(2)
    # a^{ij}_{ab} = mu (d_ij d_ab + d_ja d_ib) + lam d_ia d_jb
    t_mu = np.einsum("ij,ab->ijab", d, d) + np.einsum("ja,ib->ijab", d, d)
    t_lam = np.einsum("ia,jb->ijab", d, d)
    return mu[:, None, None, None, None] * t_mu + lam[:, None, None, None, None] * t_lam


def _default_samples(dom=None, n=21):
    if dom is None:
        lo, hi = np.zeros(2), np.ones(2)
    else:
        lo, hi = dom.vertices.min(axis=0), dom.vertices.max(axis=0)
    g = np.linspace(0.0, 1.0, n)
    pts = np.array([(lo[0] + a * (hi[0] - lo[0]), lo[1] + b * (hi[1] - lo[1])) for a in g for b in g])
    if dom is not None:
        pts = pts[dom.contains(pts)]
    return pts


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Coefficient tensor with its sampled sup bound and Lamé margin.

    ``c`` is ``inf (mu - lambda^-)`` for Lamé fields and the strong
    ellipticity constant for constant tensors.
    """

    kind: str
    m: int
    params: dict = field(default_factory=dict)
    M_bound: float = 0.0
    c: float = 0.0

    def tensor(self, points):
        """Tensor at each point, shape (P, 2, 2, m, m)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        P = len(points)
        if self.kind == "lame_variable":
            mu = self.params["mu"](points)
            lam = self.params["lambda"](points)
            if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(lam))):
                raise CoefficientError("Lamé parameter evaluation produced non-finite values")
            return lame_tensor(mu, lam)
        return np.broadcast_to(self.params["tensor"], (P, 2, 2, self.m, self.m))

    @property
    def is_constant(self):
        return self.kind != "lame_variable" or self.params.get("constant", False)

    @property
    def is_symmetric(self):
        """a^{ij}_{ab} = a^{ji}_{ba}, checked on the stored/sampled tensor."""
        if self.kind == "lame_variable":
            return True
        t = self.params["tensor"]
        return bool(np.allclose(t, t.transpose(1, 0, 3, 2), rtol=0, atol=1e-14))

    def lame_parameters(self, points):
        if self.kind != "lame_variable":
            raise CoefficientError("not a Lamé coefficient field")
        points = np.atleast_2d(points)
        return self.params["mu"](points), self.params["lambda"](points)


def make_coefficients(kind, params=None, samples=None, dom=None):
    """Build a coefficient field.

    Parameters
    ----------
    kind : {"scalar_laplace", "constant_tensor", "lame_variable"}
        ``"lame"`` is accepted as an alias of ``"lame_variable"``.
    params : dict
        ``tensor`` (array (2, 2, m, m) or flat list of 4 m^2 entries) for
        constant tensors; ``mu`` and ``lambda`` (numbers, expression strings
        or callables) for Lamé.
    samples : array (P, 2), optional
        Points used for the sup bound and the Lamé condition; defaults to a
        grid over ``dom`` (or over the unit square).
    """
    params = dict(params or {})
    if kind == "lame":
        kind = "lame_variable"
    if kind not in KINDS:
        raise CoefficientError(f"unknown coefficient kind {kind!r}")
    if kind == "scalar_laplace":
        t = np.eye(2).reshape(2, 2, 1, 1)
        return CoefficientField(kind, 1, {"tensor": t}, 1.0, 1.0)
    if kind == "constant_tensor":
        t = np.asarray(params.get("tensor"), dtype=float)
        m = params.get("m")
        if t.ndim == 1:
            if m is None:
                m = int(round(np.sqrt(t.size / 4)))
            if t.size != 4 * m * m:
                raise CoefficientError(f"tensor needs 4 m^2 = {4 * m * m} entries, got {t.size}")
            t = t.reshape(2, 2, m, m)
        if t.ndim != 4 or t.shape[:2] != (2, 2) or t.shape[2] != t.shape[3]:
            raise CoefficientError(f"tensor shape {t.shape} is not (2, 2, m, m)")
        if not np.all(np.isfinite(t)):
            raise CoefficientError("tensor has non-finite entries")
        cf = CoefficientField(kind, t.shape[2], {"tensor": t}, float(np.abs(t).max()), 0.0)
        c = _legendre(t)[0]
        return CoefficientField(kind, cf.m, cf.params, cf.M_bound, c)
    # Lamé
    if "mu" not in params or "lambda" not in params:
        raise CoefficientError("Lamé coefficients need mu and lambda")
    constant = all(isinstance(params[k], (int, float)) for k in ("mu", "lambda"))
    mu, lam = as_field(params["mu"]), as_field(params["lambda"])
    pts = _default_samples(dom) if samples is None else np.atleast_2d(samples)
    mv, lv = mu(pts), lam(pts)
    if not (np.all(np.isfinite(mv)) and np.all(np.isfinite(lv))):
        raise CoefficientError("Lamé parameter evaluation produced non-finite values")
    margin = float(np.min(mv - np.maximum(-lv, 0.0)))
    if margin <= 0.0:
        raise CoefficientError(
            f"Lamé pointwise condition violated: min(mu - lambda^-) = {margin:.6g} <= 0")
    M_bound = float(np.max(np.abs(lame_tensor(mv, lv))))
    p = {"mu": mu, "lambda": lam, "constant": constant, "n_samples": len(pts)}
    if constant:
        p["mu_value"], p["lambda_value"] = float(params["mu"]), float(params["lambda"])
    return CoefficientField("lame_variable", 2, p, M_bound, margin)


def eval_tensor(cf, x):
    """Tensor entries ``a[i, j, alpha, beta]`` at a single point."""
    return np.array(cf.tensor(np.asarray(x, dtype=float)[None, :])[0])


def _legendre(t):
    """Min eigenvalue of the symmetrized (i, alpha) x (j, beta) form and its eigenvector."""
    m = t.shape[2]
    Q = t.transpose(0, 2, 1, 3).reshape(2 * m, 2 * m)
    S = 0.5 * (Q + Q.T)
    w, v = np.linalg.eigh(S)
    return float(w[0]), v[:, 0].reshape(2, m)


def verify_ellipticity(cf, dom=None, samples=400):
    """Check strong ellipticity (constant tensors) or the Lamé margin (Lamé fields)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if cf.kind == "lame_variable":
        n = max(2, int(np.ceil(np.sqrt(samples))))
        pts = _default_samples(dom, n)
        mu, lam = cf.lame_parameters(pts)
        margin = mu - np.maximum(-lam, 0.0)
        k = int(np.argmin(margin))
        c = float(margin[k])
        return VerificationReport(
            kind="ellipticity",
            passed=c > 0.0,
            inputs={"coefficient": cf.kind, "samples": len(pts)},
            quantities={"mu_minus_lambda_neg": c, "pointwise_constant": 2.0 * c,
                        "M_bound": cf.M_bound,
                        "worst_x": float(pts[k, 0]), "worst_y": float(pts[k, 1])},
            thresholds={"mu_minus_lambda_neg": 0.0},
            notes=["sigma:grad u >= 2 (mu - lambda^-) |eps(u)|^2 pointwise"],
        )
    c, witness = _legendre(cf.params["tensor"])
    return VerificationReport(
        kind="ellipticity",
        passed=c > 0.0,
        inputs={"coefficient": cf.kind, "m": cf.m},
        quantities={"strong_ellipticity_constant": c, "M_bound": cf.M_bound,
                    "witness": witness.ravel()},
        thresholds={"strong_ellipticity_constant": 0.0},
        notes=["witness is the minimizing xi[i, alpha], flattened row-major"],
    )


# ------------------------------------------------------------------- assembly


@dataclass(eq=False)
class AssembledSystem:
    """Stiffness for A, its transpose for A*, and P1 mass matrices."""

    mesh: object
    cf: CoefficientField
    stiffness: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    mass: sp.csr_matrix
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self):
        return self.cf.m

    @property
    def n_dofs(self):
        return self.stiffness.shape[0]

    @property
    def adjoint_stiffness(self):
        if "adjoint" not in self._cache:
            self._cache["adjoint"] = self.stiffness.T.tocsr()
        return self._cache["adjoint"]

    def matrix(self, which="L"):
        if which == "L":
            return self.stiffness
        if which == "L*":
            return self.adjoint_stiffness
        raise ValueError(f"which must be 'L' or 'L*', got {which!r}")

    def dof(self, node, comp):
        return node * self.m + comp

    def form(self, u, phi):
        """A(u, phi) for nodal arrays of shape (n, m) or flat dof vectors."""
        return float(np.ravel(phi) @ (self.stiffness @ np.ravel(u)))


def _element_coefficients(mesh, cf, sampling):
    if cf.is_constant and cf.kind != "lame_variable":
        return np.broadcast_to(cf.params["tensor"], (mesh.n_triangles, 2, 2, cf.m, cf.m))
    if sampling == "centroid":
        return cf.tensor(mesh.centroids)
    if sampling == "midpoints":
        pts = np.einsum("qk,tkd->tqd", MIDPOINT_BARY, mesh.vertices).reshape(-1, 2)
        return cf.tensor(pts).reshape(mesh.n_triangles, 3, 2, 2, cf.m, cf.m).mean(axis=1)
    raise ValueError(f"unknown sampling {sampling!r}")


def _p1_mass(mesh, m):
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    vals = mesh.areas[:, None, None] * local[None]
    return _expand(mesh.triangles, vals, mesh.n_nodes, m)


def _boundary_mass(mesh, m):
    e = mesh.boundary_edges
    length = np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1)
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    vals = length[:, None, None] * local[None]
    return _expand(e, vals, mesh.n_nodes, m)


def _expand(cells, vals, n, m):
    """Scalar element matrices -> block-diagonal (identity in components) sparse matrix."""
    k = cells.shape[1]
    rows = np.repeat(cells, k, axis=1)
    cols = np.tile(cells, (1, k))
    v = vals.reshape(len(cells), -1)
    comps = np.arange(m)
    R = (rows[..., None] * m + comps).ravel()
    C = (cols[..., None] * m + comps).ravel()
    V = np.repeat(v[..., None], m, axis=2).ravel()
    return sp.csr_matrix((V, (R, C)), shape=(n * m, n * m))


def assemble(mesh, cf, sampling="centroid"):
    """Assemble the stiffness matrix of A with element-sampled coefficients.

    ``sampling`` is ``"centroid"`` (one point) or ``"midpoints"`` (average of
    the three edge midpoints).
    """
    m = cf.m
    C = _element_coefficients(mesh, cf, sampling)
    G = mesh.grads
    # Ke[t, a, alpha, b, beta] = sum_ij C[t,i,j,alpha,beta] G[t,b,j] G[t,a,i] |T|
    Ke = np.einsum("tijxy,tbj,tai,t->taxby", C, G, G, mesh.areas, optimize=True)
    tri = mesh.triangles
    dofs = (tri[:, :, None] * m + np.arange(m)).reshape(len(tri), 3 * m)
    rows = np.repeat(dofs, 3 * m, axis=1).ravel()
    cols = np.tile(dofs, (1, 3 * m)).ravel()
    N = mesh.n_nodes * m
    K = sp.csr_matrix((Ke.reshape(len(tri), -1).ravel(), (rows, cols)), shape=(N, N))
    K.sum_duplicates()
    return AssembledSystem(mesh, cf, K, _boundary_mass(mesh, m), _p1_mass(mesh, m))


def rule_load(rule, vals, n_nodes, m):
    """Vector with entries ∫ vals^alpha phi_a over the rule, flattened as dofs."""
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = np.broadcast_to(vals[:, None], (len(vals), m))
    contrib = rule.weights[:, None, None] * rule.bary[:, :, None] * vals[:, None, :]
    out = np.zeros((n_nodes, m))
    np.add.at(out, rule.nodes, contrib)
    return out.ravel()


def _data_values(rule, g, m):
    vals = np.asarray(rule.evaluate(g), dtype=float)
    if vals.ndim == 1:
        if m != 1:
            raise CoefficientError(f"data returns scalars but m = {m}")
        vals = vals[:, None]
    if vals.shape[1] != m:
        raise CoefficientError(f"data has {vals.shape[1]} components, expected {m}")
    if not np.all(np.isfinite(vals)):
        raise CoefficientError("data evaluation produced non-finite values")
    return vals


def assemble_load(mesh, f=None, f_N=None, m=1, degree=2, tag="N"):
    """Load ``l(phi) = -∫ f.phi + ∫_N f_N.phi``.

    ``f`` and ``f_N`` may be callables on points (returning (P,) or (P, m)),
    nodal arrays, or None (zero data).
    """
    load = np.zeros(mesh.n_nodes * m)
    if f is not None:
        rule = volume_rule(mesh, degree)
        load -= rule_load(rule, _data_values(rule, f, m), mesh.n_nodes, m)
    if f_N is not None:
        rule = boundary_rule(mesh, tag, max(degree, 3))
        if len(rule.weights):
            load += rule_load(rule, _data_values(rule, f_N, m), mesh.n_nodes, m)
    return load


def nodal_gradients(mesh, u):
    """Per-element gradients of a P1 field, shape (T, m, 2) with [t, alpha, j]."""
    u = np.asarray(getattr(u, "values", u), dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    return np.einsum("tam,taj->tmj", u[mesh.triangles], mesh.grads)


def strain_stress(cf, u, element):
    """Strain and stress (2x2 each) of a P1 displacement on one element."""
    if cf.kind != "lame_variable":
        raise CoefficientError("strain/stress needs a Lamé coefficient field")
    mesh = u.mesh
    grad = nodal_gradients(mesh, u)[element]
    eps = 0.5 * (grad + grad.T)
    mu, lam = cf.lame_parameters(mesh.centroids[element][None, :])
    sigma = 2.0 * mu[0] * eps + lam[0] * np.trace(eps) * np.eye(2)
    return eps, sigma
