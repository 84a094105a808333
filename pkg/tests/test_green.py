import numpy as np
import pytest

from mixedgreen.analysis import bmo_norm, random_atom_specs, verify_representation
from mixedgreen.analysis.bmo import Atom
from mixedgreen.errors import DomainError, MeshError, ResolutionError
from mixedgreen.geometry import rectangle, regular_polygon
from mixedgreen.green import (GreenTable, approximate_green, evaluate_green, fundamental_solution, green_fields,
                              neumann_green, representation_solve)
from mixedgreen.meshing import triangulate
from mixedgreen.operators import assemble, make_coefficients

LAP = make_coefficients("scalar_laplace")
MIXED = rectangle(0, 0, 1, 1, tags=["N", "N", "N", "D"])


@pytest.fixture(scope="module")
def disk():
    dom = regular_polygon(128, 1.0)
    mesh = triangulate(dom, 0.04)
    return dom, mesh, approximate_green(mesh, LAP, dom, "dirichlet", (0.0, 0.0), 0.16)


def test_disk_green_value(disk):
    _, _, gf = disk
    assert abs(evaluate_green(gf, (0.5, 0.0))[0, 0] - (-0.11032)) < 2e-3
    assert gf.m == 1 and evaluate_green(gf, (0.0, 0.6)).shape == (1, 1)


def test_columns_vanish_on_D(disk):
    _, mesh, gf = disk
    assert np.all(gf.values()[mesh.dirichlet_nodes] == 0.0)
    assert gf.columns[0].residual <= 1e-10


def test_evaluation_at_node_is_nodal_value(disk):
    _, mesh, gf = disk
    k = int(np.argmin(np.linalg.norm(mesh.nodes - [0.5, 0.3], axis=1)))
    assert evaluate_green(gf, mesh.nodes[k])[0, 0] == pytest.approx(gf.values(0)[k, 0], abs=1e-14)


def test_evaluate_warnings_and_errors(disk):
    _, _, gf = disk
    with pytest.warns(UserWarning):
        evaluate_green(gf, (0.05, 0.0))
    with pytest.raises(MeshError):
        evaluate_green(gf, (3.0, 0.0))


def test_representation_disk_and_zero_data(disk):
    _, _, gf = disk
    assert abs(representation_solve(gf, lambda p: np.ones(len(p)))[0, 0] + 0.25) < 5e-3
    assert representation_solve(gf, None, None)[0, 0] == 0.0
    with pytest.raises(ValueError):
        representation_solve([], None)


def test_preconditions():
    mesh = triangulate(MIXED, 0.1)
    with pytest.raises(ResolutionError, match="rho under-resolved"):
        approximate_green(mesh, LAP, MIXED, "mixed", (0.5, 0.5), 0.1)
    with pytest.raises(DomainError):
        approximate_green(mesh, LAP, MIXED, "dirichlet", (0.5, 0.5), 0.4)
    with pytest.raises(DomainError):
        approximate_green(triangulate(rectangle(0, 0, 1, 1, tags="N"), 0.1), LAP,
                          rectangle(0, 0, 1, 1, tags="N"), "mixed", (0.5, 0.5), 0.4)


def test_rho_stability_of_atom_pairing():
    mesh = triangulate(MIXED, 0.02)
    sys = assemble(mesh, LAP)
    spec = random_atom_specs(np.random.default_rng(4), MIXED, 1, (0.1, 0.1))[0]
    spec = type(spec)((0.25, 0.75), 0.1, spec.theta, 0, spec.s)
    atom = Atom(mesh, MIXED, spec)
    a, b = (atom.pair(green_fields(mesh, LAP, MIXED, "mixed", [(0.7, 0.3)], r, sys=sys)[0].values(0))
            for r in (0.16, 0.08))
    assert abs(a - b) <= 0.01 * max(abs(a), abs(b))


def test_neumann_green_lambda_and_orthogonality():
    sq = rectangle(0, 0, 1, 1, tags="N")
    mesh = triangulate(sq, 0.05)
    gf = neumann_green(mesh, LAP, sq, (0.4, 0.6), 0.2)
    assert np.allclose(gf.lam[0].values, 0.25)
    assert gf.columns[0].meta["constraint_residual"] < 1e-10
    assert gf.meta["projection_residual"] < 1e-10


def test_neumann_representation_and_bmo():
    sq = rectangle(0, 0, 1, 1, tags="N")
    mesh = triangulate(sq, 0.02)
    f = lambda p: np.cos(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]) + np.cos(np.pi * p[:, 0])
    rep = verify_representation(mesh, LAP, sq, f, None, [(0.3, 0.4), (0.6, 0.7), (0.5, 0.2)])
    assert rep.passed, rep.quantities
    sys = assemble(mesh, LAP)
    b = [bmo_norm(neumann_green(mesh, LAP, sq, (0.5, 0.5), k * mesh.h, sys=sys).columns[0], sq).value
         for k in (4, 8)]
    assert max(b) / min(b) <= 1.5


def test_fundamental_solution():
    with pytest.raises(DomainError):
        fundamental_solution(LAP, (0.0, 0.0), 0.5, R=4.0)
    gf = fundamental_solution(LAP, (0.0, 0.0), 0.5, R=16.0)
    assert abs(gf.meta["integral_f"]) <= 1e-12
    d = evaluate_green(gf, (2.0, 0.0))[0, 0] - evaluate_green(gf, (1.0, 0.0))[0, 0]
    assert d == pytest.approx(np.log(2.0) / (2 * np.pi), rel=0.02)


def test_green_table_csv(disk):
    _, _, gf = disk
    table = GreenTable.from_fields([gf], np.array([[0.5, 0.0], [0.05, 0.0], [0.0, 0.7]]))
    text = table.to_csv(header="# h")
    lines = text.strip().splitlines()
    assert lines[0] == "# h"
    assert lines[1] == "pole_x,pole_y,y1,y2,alpha,beta,value,rho,h,bc"
    assert len(lines) == 4  # the point within 2 rho of the pole is dropped
    assert lines[2].split(",")[-1] == "dirichlet"
