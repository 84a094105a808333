"""Pure Neumann problems: kernels V and V*, compatibility, constrained solves.

V is the null space of the assembled form in its first argument slot
(``A(v, phi) = 0`` for all phi, i.e. ``K v = 0``); V* is the null space for the
adjoint (``K^T v = 0``).  Problems for L are solvable when the load vanishes
on V*; the solution is pinned by boundary orthogonality to V.  For L* the
roles of V and V* are swapped.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CompatibilityError, KernelError, SolverError
from .mixed_solver import FemSolution, _Factor
from .operators import assemble_load

THRESHOLD = 1e-8
GAP = 10.0
DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class KernelBasis:
    """Boundary-orthonormal kernel basis; ``matrix`` holds basis dofs as columns."""

    side: str
    matrix: np.ndarray
    mesh: object
    m: int
    gram: np.ndarray
    gram_condition: float
    singular_values: np.ndarray
    threshold: float
    sigma_max: float

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def basis(self):
        return [FemSolution(self.matrix[:, k].reshape(-1, self.m), self.mesh, "L" if self.side == "V" else "L*",
                            0.0, f"kernel {self.side} #{k}") for k in range(self.dim)]

    @property
    def gap(self):
        """Smallest retained-complement singular value over the threshold."""
        above = self.singular_values[self.singular_values > self.threshold]
        return float(above.min() / self.threshold) if len(above) else np.inf


def _dense_kernel(K):
    A = K.toarray()
    _, s, vt = sla.svd(A)
    smax = s[0]
    thr = THRESHOLD * smax
    k = int(np.sum(s <= thr))
    return vt[len(s) - k:].T if k else np.zeros((A.shape[0], 0)), s, thr, smax


def _sparse_kernel(K, nev=12):
    N = K.shape[0]
    H = sp.bmat([[None, K.T], [K, None]], format="csc")
    smax = float(spla.eigsh(H, k=1, which="LA", return_eigenvectors=False)[0])
    thr = THRESHOLD * smax
    shift = -1e-3 * thr
    vals, vecs = spla.eigsh(H, k=2 * nev, sigma=shift, which="LM")
    order = np.argsort(np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    zero = np.abs(vals) <= thr
    s = np.concatenate([[smax], np.abs(vals)])
    if zero.all():
        raise KernelError("kernel search exhausted: too many near-zero modes")
    top = vecs[:N, zero]
    if top.shape[1] == 0:
        return np.zeros((N, 0)), s, thr, smax
    u, sv, _ = np.linalg.svd(top, full_matrices=False)
    rank = int(np.sum(sv > 1e-6 * sv.max()))
    return u[:, :rank], s, thr, smax


def compute_kernel(sys, side="V"):
    """Null space of the assembled Neumann operator, boundary-orthonormalized.

    Raises KernelError when the spectrum is not separated by a factor 10
    around the 1e-8 relative threshold.
    """
    if side not in ("V", "V*"):
        raise ValueError(f"side must be 'V' or 'V*', got {side!r}")
    key = ("kernel", side)
    if key in sys._cache:
        return sys._cache[key]
    if len(sys.mesh.dirichlet_nodes):
        raise KernelError("kernel spaces are defined for the pure Neumann problem (D empty)")
    K = sys.matrix("L" if side == "V" else "L*")
    if K.shape[0] <= DENSE_LIMIT:
        B, s, thr, smax = _dense_kernel(K)
    else:
        B, s, thr, smax = _sparse_kernel(K)
    above = s[s > thr]
    if len(above) and above.min() < GAP * thr:
        raise KernelError(
            f"ill-separated spectrum (gap {above.min() / thr:.3g} < {GAP}); refine the mesh")
    if B.shape[1] == 0:
        raise KernelError("empty kernel")
    G = B.T @ (sys.boundary_mass @ B)
    G = 0.5 * (G + G.T)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise KernelError("boundary Gram matrix not positive definite") from None
    ev = np.linalg.eigvalsh(G)
    Bo = sla.solve_triangular(L, B.T, lower=True).T
    Bo = _canonical(Bo, sys.boundary_mass)
    kb = KernelBasis(side, Bo, sys.mesh, sys.m, Bo.T @ (sys.boundary_mass @ Bo),
                     float(ev.max() / ev.min()), np.sort(s), thr, smax)
    sys._cache[key] = kb
    return kb


def _canonical(B, Mb):
    """Fix signs so that basis vectors are deterministic."""
    for k in range(B.shape[1]):
        i = int(np.argmax(np.abs(B[:, k])))
        if B[i, k] < 0:
            B[:, k] = -B[:, k]
    return B


def span_distance(kb1, kb2, Mb):
    """Largest boundary-norm residual of kb1 vectors projected onto span(kb2)."""
    P = kb2.matrix @ (kb2.matrix.T @ (Mb @ kb1.matrix))
    R = kb1.matrix - P
    return float(np.sqrt(np.max(np.einsum("ik,ik->k", R, Mb @ R))))


def data_functional(mesh, f=None, f_N=None, m=1):
    """Dof vector b with b . v = ∫ f.v - ∫_∂ f_N.v for P1 fields v."""
    return -assemble_load(mesh, f, f_N, m=m, tag="all")


def compatibility_projection(kb, functional, sys):
    """Kernel element lambda with ∫_∂ lambda.v = functional(v) for every v in the kernel.

    ``functional`` is a dof vector b representing v -> b . v (see
    ``data_functional``).  Returns the lambda field and the max residual.
    """
    if kb.dim < 1:
        raise KernelError("empty kernel")
    B, Mb = kb.matrix, sys.boundary_mass
    G = B.T @ (Mb @ B)
    rhs = B.T @ np.asarray(functional, dtype=float)
    try:
        c = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        raise KernelError("singular Gram matrix") from None
    lam = B @ c
    residual = float(np.max(np.abs(rhs - B.T @ (Mb @ lam))))
    return FemSolution(lam.reshape(-1, kb.m), kb.mesh, "L" if kb.side == "V" else "L*",
                       residual, "lambda"), residual


def _saddle(sys, which):
    key = ("neumann", which)
    if key not in sys._cache:
        V = compute_kernel(sys, "V").matrix
        Vs = compute_kernel(sys, "V*").matrix
        if V.shape[1] != Vs.shape[1]:
            raise KernelError(f"dim V = {V.shape[1]} differs from dim V* = {Vs.shape[1]}")
        Mb = sys.boundary_mass
        K = sys.matrix(which)
        constrain, multiply = (V, Vs) if which == "L" else (Vs, V)
        C = sp.csr_matrix(Mb @ constrain)
        Mcols = sp.csr_matrix(Mb @ multiply)
        S = sp.bmat([[K, Mcols], [C.T, None]], format="csc")
        try:
            fac = _Factor(S)
        except SolverError as exc:
            raise SolverError(f"singular augmented system: {exc.reason}") from None
        sys._cache[key] = (fac, constrain, multiply)
    return sys._cache[key]


def compatibility_residual(sys, load, which="L"):
    """max_v |load . v| / ||load|| over the kernel that must annihilate the load."""
    kb = compute_kernel(sys, "V*" if which == "L" else "V")
    scale = max(np.linalg.norm(load), 1e-300)
    return float(np.max(np.abs(kb.matrix.T @ load)) / scale)


def solve_raw(sys, load, which="L", tol=1e-8):
    """Constrained Neumann solve for a compatible load (one or more columns)."""
    load = np.asarray(load, dtype=float)
    cols = load.reshape(len(load), -1)
    for k in range(cols.shape[1]):
        r = compatibility_residual(sys, cols[:, k], which)
        if r > tol:
            raise CompatibilityError(f"compatibility condition violated (residual {r:.3g} > {tol:g})")
    fac, constrain, _ = _saddle(sys, which)
    N, k = sys.n_dofs, constrain.shape[1]
    rhs = np.concatenate([load, np.zeros((k,) + load.shape[1:])])
    x, res = fac.solve(rhs)
    return x[:N], x[N:], res


def constraint_residual(sys, u, which="L"):
    """max_k |∫_∂ u.v_k| / ||u||_∂ over the pinning kernel (boundary-orthonormal v_k)."""
    kb = compute_kernel(sys, "V" if which == "L" else "V*")
    u = np.ravel(u)
    un = np.sqrt(max(u @ (sys.boundary_mass @ u), 0.0))
    if un == 0.0:
        return 0.0
    return float(np.max(np.abs(kb.matrix.T @ (sys.boundary_mass @ u))) / un)


def neumann_load(sys, f=None, f_N=None, which="L"):
    """Load with the compatibility datum lambda folded in, and lambda itself.

    Load(phi) = -∫ f.phi + ∫_∂ f_N.phi + ∫_∂ lambda.phi with lambda in the
    kernel (V* for L, V for L*) chosen so that the load vanishes there.
    """
    kb = compute_kernel(sys, "V*" if which == "L" else "V")
    base = assemble_load(sys.mesh, f, f_N, m=sys.m, tag="all")
    lam, res = compatibility_projection(kb, -base, sys)
    return base + sys.boundary_mass @ lam.dofs, lam, res


def solve_neumann(sys, dom, f=None, f_N=None, which="L", project=False):
    """Boundary-orthogonal solution of the pure Neumann problem.

    With ``project=False`` the data must already satisfy the compatibility
    condition (CompatibilityError otherwise).  With ``project=True`` the
    kernel datum lambda is added on the boundary first.
    """
    if dom is not None and dom.has_dirichlet:
        raise SolverError("D is nonempty: use the mixed solver")
    if project:
        load, lam, pres = neumann_load(sys, f, f_N, which)
    else:
        load, lam, pres = assemble_load(sys.mesh, f, f_N, m=sys.m, tag="all"), None, 0.0
    u, mult, res = solve_raw(sys, load, which)
    meta = {
        "compatibility_residual": compatibility_residual(sys, load, which),
        "constraint_residual": constraint_residual(sys, u, which),
        "projection_residual": pres,
        "multiplier_norm": float(np.linalg.norm(mult)),
    }
    if lam is not None:
        meta["lambda"] = lam
    return FemSolution(u.reshape(-1, sys.m), sys.mesh, which, float(np.max(res)), "neumann", meta)
