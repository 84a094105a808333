import numpy as np
import pytest
import scipy.sparse.linalg as spla

from mixedgreen.errors import CoercivityError, CompatibilityError, KernelError, SolverError
from mixedgreen.geometry import rectangle
from mixedgreen.meshing import triangulate
from mixedgreen.mixed_solver import energy_norm, galerkin_residual, solve_mixed, FemSolution
from mixedgreen.neumann_solver import (compatibility_projection, compute_kernel, data_functional, solve_neumann,
                                       span_distance)
from mixedgreen.operators import assemble, assemble_load, make_coefficients

LAP = make_coefficients("scalar_laplace")
LAME = make_coefficients("lame", {"mu": 1.0, "lambda": 1.0})
NEU = rectangle(0, 0, 1, 1, tags="N")


def test_dirichlet_square_center_value():
    dom = rectangle(0, 0, 1, 1, tags="D")
    mesh = triangulate(dom, 0.02)
    sys = assemble(mesh, LAP)
    u = solve_mixed(sys, dom, assemble_load(mesh, lambda p: np.ones(len(p)), None))
    # Fourier-series value of Δu = 1, u = 0 on the boundary, at the center
    assert abs(u(np.array([[0.5, 0.5]]))[0, 0] - (-0.0736713532)) < 5e-4
    assert u.residual <= 1e-10
    assert np.all(u.values[mesh.dirichlet_nodes] == 0.0)


def test_zero_data_gives_zero():
    dom = rectangle(0, 0, 1, 1, tags=["N", "N", "N", "D"])
    mesh = triangulate(dom, 0.1)
    u = solve_mixed(assemble(mesh, LAP), dom, assemble_load(mesh, None, None))
    assert np.all(u.values == 0.0)


def test_galerkin_exactness_linear_solution():
    dom = rectangle(0, 0, 1, 1, tags=["N", "N", "N", "D"])
    mesh = triangulate(dom, 0.1)
    sys = assemble(mesh, LAP)

    def flux(p):
        # conormal derivative of y1: +1 on the right edge, 0 on top/bottom
        return np.where(p[:, 0] > 1 - 1e-9, 1.0, 0.0)

    load = assemble_load(mesh, None, flux)
    u = solve_mixed(sys, dom, load)
    assert np.max(np.abs(u.values[:, 0] - mesh.nodes[:, 0])) < 1e-10
    assert galerkin_residual(sys, u, load) < 1e-12
    adj = solve_mixed(sys, dom, load, which="L*")
    assert np.allclose(adj.values, u.values, atol=1e-12)


def test_energy_norm_values():
    mesh = triangulate(rectangle(0, 0, 1, 1), 0.2)
    y = mesh.nodes
    assert energy_norm(FemSolution(np.zeros((mesh.n_nodes, 1)), mesh)) == 0.0
    assert np.isclose(energy_norm(FemSolution(y[:, :1], mesh)), 1.0)
    assert np.isclose(energy_norm(FemSolution((y[:, 0] + y[:, 1])[:, None], mesh)), np.sqrt(2.0))


def test_mixed_solver_needs_dirichlet():
    mesh = triangulate(NEU, 0.2)
    with pytest.raises(SolverError):
        solve_mixed(assemble(mesh, LAP), NEU, np.zeros(mesh.n_nodes))


def test_singular_mixed_system_reported():
    dom = rectangle(0, 0, 1, 1, tags=["D", "N", "N", "N"])
    mesh = triangulate(dom, 0.25)
    cf = make_coefficients("constant_tensor", {"tensor": [0.0, 0.0, 0.0, 0.0]})
    with pytest.raises(CoercivityError):
        solve_mixed(assemble(mesh, cf), dom, np.zeros(mesh.n_nodes))


def test_kernels():
    mesh = triangulate(NEU, 0.1)
    lap = assemble(mesh, LAP)
    kb = compute_kernel(lap, "V")
    assert kb.dim == 1
    v = kb.matrix[:, 0]
    assert np.allclose(v / v[0], 1.0)
    assert np.isclose(v @ (lap.boundary_mass @ v), 1.0)
    lame = assemble(mesh, LAME)
    V, Vs = compute_kernel(lame, "V"), compute_kernel(lame, "V*")
    assert V.dim == 3 and Vs.dim == 3
    assert span_distance(V, Vs, lame.boundary_mass) < 1e-8
    K = lame.stiffness
    for k in range(3):
        assert np.linalg.norm(K @ V.matrix[:, k]) <= 1e-8 * spla.norm(K) * np.linalg.norm(V.matrix[:, k])
    with pytest.raises(KernelError):
        compute_kernel(assemble(triangulate(rectangle(0, 0, 1, 1), 0.2), LAP), "V")


def test_compatibility_projection_constant():
    mesh = triangulate(NEU, 0.1)
    sys = assemble(mesh, LAP)
    kb = compute_kernel(sys, "V")
    lam, res = compatibility_projection(kb, data_functional(mesh, lambda p: np.ones(len(p)), None), sys)
    assert np.allclose(lam.values, 0.25) and res < 1e-12
    lam0, _ = compatibility_projection(kb, data_functional(mesh, None, None), sys)
    assert np.allclose(lam0.values, 0.0)


def test_lame_projection_component_orthogonality():
    mesh = triangulate(NEU, 0.1)
    sys = assemble(mesh, LAME)
    kb = compute_kernel(sys, "V")
    e1 = lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))])
    lam, _ = compatibility_projection(kb, data_functional(mesh, e1, None, m=2), sys)
    # brute-force pairings of λ with the three rigid motions match those of the data
    y = mesh.nodes
    motions = [np.column_stack([np.ones(len(y)), 0 * y[:, 0]]), np.column_stack([0 * y[:, 0], np.ones(len(y))]),
               np.column_stack([-y[:, 1], y[:, 0]])]
    for v, expect in zip(motions, (1.0, 0.0, -0.5)):
        got = lam.dofs @ (sys.boundary_mass @ v.ravel())
        assert np.isclose(got, expect, atol=1e-10)


def test_neumann_solution_matches_pinned_solve():
    mesh = triangulate(NEU, 0.05)
    sys = assemble(mesh, LAP)

    def fN(p):
        return p[:, 0] - 0.5

    u = solve_neumann(sys, NEU, None, fN)
    # independent route: pin node 0, solve, then shift to zero boundary mean
    K = sys.stiffness.tolil()
    b = assemble_load(mesh, None, fN, tag="all")
    K[0, :] = 0.0
    K[0, 0] = 1.0
    b[0] = 0.0
    w = spla.spsolve(K.tocsr(), b)
    one = np.ones(mesh.n_nodes)
    w -= (one @ (sys.boundary_mass @ w)) / (one @ (sys.boundary_mass @ one))
    assert np.max(np.abs(u.values[:, 0] - w)) < 1e-9
    assert u.meta["constraint_residual"] < 1e-10


def test_neumann_zero_and_incompatible():
    mesh = triangulate(NEU, 0.1)
    sys = assemble(mesh, LAP)
    assert np.allclose(solve_neumann(sys, NEU, None, None).values, 0.0)
    with pytest.raises(CompatibilityError):
        solve_neumann(sys, NEU, lambda p: np.ones(len(p)), None)
    u = solve_neumann(sys, NEU, lambda p: np.ones(len(p)), None, project=True)
    assert u.meta["projection_residual"] < 1e-10


def test_lame_neumann_boundary_orthogonal():
    mesh = triangulate(NEU, 0.1)
    sys = assemble(mesh, LAME)

    def f(p):
        # zero net force and zero net torque about the center
        return np.column_stack([np.cos(2 * np.pi * p[:, 1]), np.zeros(len(p))])

    u = solve_neumann(sys, NEU, f, None, project=True)
    V = compute_kernel(sys, "V").matrix
    assert np.max(np.abs(V.T @ (sys.boundary_mass @ u.dofs))) <= 1e-10
