import numpy as np
import pytest

from mixedgreen.errors import CoefficientError, ConfigError
from mixedgreen.expressions import Expression, as_field
from mixedgreen.geometry import rectangle
from mixedgreen.meshing import triangulate
from mixedgreen.mixed_solver import FemSolution
from mixedgreen.operators import (assemble, assemble_load, eval_tensor, lame_tensor, make_coefficients,
                                  strain_stress, verify_ellipticity)

SQUARE = rectangle(0, 0, 1, 1, tags=["D", "N", "N", "N"])


@pytest.fixture(scope="module")
def mesh():
    return triangulate(SQUARE, 0.2)


def test_expressions():
    e = Expression("min(y1, 2*y2) + 3 - -1")
    pts = np.array([[0.5, 0.1], [0.1, 0.5]])
    assert np.allclose(e(pts), [0.2 + 4, 0.1 + 4])
    assert np.allclose(as_field(2.5)(pts), 2.5)
    for bad in ("__import__('os')", "y1 ** 2", "y3", "abs(y1)", "1 +"):
        with pytest.raises(ConfigError):
            Expression(bad)
    with pytest.raises(ConfigError):
        Expression("1 / (y1 - y1)")(pts)


def test_scalar_laplace_tensor():
    cf = make_coefficients("scalar_laplace")
    t = eval_tensor(cf, (0.3, 0.3))
    assert cf.m == 1 and t[0, 0, 0, 0] == 1 and t[0, 1, 0, 0] == 0


def test_lame_entries():
    cf = make_coefficients("lame", {"mu": 1.0, "lambda": 0.0})
    assert eval_tensor(cf, (0.1, 0.2))[0, 0, 0, 0] == 2.0
    cf = make_coefficients("lame", {"mu": 1.0, "lambda": 1.0})
    t = eval_tensor(cf, (0.0, 0.0))
    assert t[0, 1, 1, 0] == 1.0 and t[0, 0, 1, 1] == 1.0
    cf = make_coefficients("lame", {"mu": "1 + y1", "lambda": 0.0})
    assert np.isclose(eval_tensor(cf, (0.5, 0.0))[0, 0, 0, 0], 3.0)
    cf = make_coefficients("lame", {"mu": 1.0, "lambda": -0.5})
    assert np.isclose(cf.c, 0.5)
    with pytest.raises(CoefficientError):
        make_coefficients("lame", {"mu": 0.4, "lambda": -0.5})


def test_lame_tensor_symmetries():
    t = lame_tensor(np.array([1.3]), np.array([0.7]))[0]
    assert np.allclose(t, t.transpose(1, 0, 3, 2))


def test_ellipticity_reports():
    assert np.isclose(verify_ellipticity(make_coefficients("scalar_laplace"))["strong_ellipticity_constant"], 1.0)
    rep = verify_ellipticity(make_coefficients("lame", {"mu": 1.0, "lambda": 0.0}), SQUARE)
    assert rep.passed and rep["pointwise_constant"] >= 2.0
    bad = verify_ellipticity(make_coefficients("constant_tensor", {"tensor": [-1.0, 0.0, 0.0, 1.0]}))
    assert not bad.passed
    w = np.abs(np.asarray(bad["witness"]))
    assert np.allclose(w / w.max(), [1.0, 0.0])


def test_assembly_properties(mesh):
    lap = assemble(mesh, make_coefficients("scalar_laplace"))
    K = lap.stiffness
    assert np.max(np.abs(K @ np.ones(mesh.n_nodes))) < 1e-13
    assert abs(K - K.T).max() < 1e-12 * abs(K).max()
    y1 = mesh.nodes[:, 0]
    assert np.isclose(lap.form(y1, y1), 1.0)
    assert (lap.adjoint_stiffness != K.T).nnz == 0
    lame = assemble(mesh, make_coefficients("lame", {"mu": 1.0, "lambda": 0.0}))
    rot = np.column_stack([-mesh.nodes[:, 1], mesh.nodes[:, 0]])
    assert abs(lame.form(rot, rot)) < 1e-12


def test_load_conventions(mesh):
    one = np.ones(mesh.n_nodes)
    assert np.allclose(assemble_load(mesh, None, None), 0.0)
    assert np.isclose(assemble_load(mesh, lambda p: np.ones(len(p)), None) @ one, -1.0)
    top = lambda p: np.where(p[:, 1] > 1 - 1e-9, 1.0, 0.0)
    assert np.isclose(assemble_load(mesh, None, top) @ one, 1.0)


def test_strain_stress(mesh):
    y = mesh.nodes

    def sol(v):
        return FemSolution(v, mesh)

    cf = make_coefficients("lame", {"mu": 1.0, "lambda": 0.0})
    eps, sig = strain_stress(cf, sol(np.column_stack([y[:, 0], 0 * y[:, 0]])), 0)
    assert np.allclose(eps, np.diag([1.0, 0.0])) and np.allclose(sig, np.diag([2.0, 0.0]))
    eps, sig = strain_stress(cf, sol(np.column_stack([-y[:, 1], y[:, 0]])), 3)
    assert np.allclose(eps, 0.0) and np.allclose(sig, 0.0)
    cf = make_coefficients("lame", {"mu": 1.0, "lambda": 1.0})
    _, sig = strain_stress(cf, sol(y.copy()), 1)
    assert np.allclose(sig, np.diag([4.0, 4.0]))
    with pytest.raises(CoefficientError):
        strain_stress(make_coefficients("scalar_laplace"), sol(y[:, :1]), 0)
