import numpy as np
import pytest

from mixedgreen.errors import MeshError
from mixedgreen.geometry import Domain, rectangle, regular_polygon
from mixedgreen.meshing import (boundary_rule, disk_rule, format_mesh, integrate, interpolate, locate, parse_mesh,
                                refine_toward, triangulate, uniform_refine, volume_rule)

SQUARE = rectangle(0, 0, 1, 1, tags=["D", "N", "N", "N"])


@pytest.fixture(scope="module")
def mesh():
    return triangulate(SQUARE, 0.1)


def test_triangulate_respects_h_and_area(mesh):
    assert mesh.h <= 0.1 + 1e-12
    assert np.all(mesh.areas > 0)
    assert np.isclose(mesh.areas.sum(), 1.0)


def test_boundary_tags_inherited(mesh):
    d_nodes = mesh.nodes[mesh.dirichlet_nodes]
    assert np.allclose(d_nodes[:, 1], 0.0)
    assert set(np.unique(mesh.edge_tags)) == {"D", "N"}
    lengths = {t: np.linalg.norm(np.diff(mesh.nodes[mesh.boundary_edges[mesh.edge_tags == t]], axis=1),
                                 axis=2).sum() for t in ("D", "N")}
    assert np.isclose(lengths["D"], 1.0) and np.isclose(lengths["N"], 3.0)


def test_volume_integrals(mesh):
    assert np.isclose(integrate(mesh, lambda p: p[:, 0] ** 2), 1 / 3)
    vr = volume_rule(mesh, 2)
    assert np.isclose(vr.integrate(vr.evaluate(mesh.nodes[:, 0])), 0.5)


def test_boundary_rule_lengths(mesh):
    assert np.isclose(boundary_rule(mesh, "N").measure, 3.0)
    assert np.isclose(boundary_rule(mesh, "D").measure, 1.0)
    assert np.isclose(boundary_rule(mesh, "all").measure, 4.0)


def test_disk_rule_exact_on_cut_cells(mesh):
    r = disk_rule(mesh, (0.5, 0.5), 0.23)
    assert np.isclose(r.measure, np.pi * 0.23 ** 2, rtol=0, atol=1e-12)
    half = disk_rule(mesh, (0.5, 0.0), 0.3)
    assert np.isclose(half.measure, 0.5 * np.pi * 0.09, rtol=0, atol=1e-12)
    # linear fields are integrated exactly
    assert np.isclose(r.integrate(r.evaluate(mesh.nodes[:, 0])), 0.5 * np.pi * 0.23 ** 2)


def test_interpolation_and_location(mesh):
    u = 2.0 * mesh.nodes[:, 0] - mesh.nodes[:, 1]
    pts = np.array([[0.31, 0.77], [0.5, 0.5], [0.0, 0.0]])
    assert np.allclose(interpolate(mesh, u, pts), 2 * pts[:, 0] - pts[:, 1])
    cell, _ = locate(mesh, np.array([[5.0, 5.0]]))
    assert cell[0] < 0
    with pytest.raises(MeshError):
        interpolate(mesh, u, np.array([[5.0, 5.0]]))


def test_uniform_refine_halves_h(mesh):
    fine = uniform_refine(mesh)
    assert np.isclose(fine.h, mesh.h / 2)
    assert fine.n_triangles == 4 * mesh.n_triangles
    assert np.isclose(fine.areas.sum(), 1.0)
    assert np.isclose(boundary_rule(fine, "D").measure, 1.0)


def test_refine_toward_grading():
    dom = Domain.from_polygon([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)], ["D", "N", "N", "N", "N"])
    base = triangulate(dom, 0.1)
    fine = refine_toward(base, (0.5, 0.0), 4)
    assert fine.local_h((0.5, 0.0)) <= 0.1 * 0.5 ** 4 + 1e-12
    assert fine.n_nodes > base.n_nodes
    with pytest.raises(MeshError):
        refine_toward(base, (0.5, 0.0), 0)
    with pytest.raises(MeshError):
        refine_toward(base, (3.0, 0.0), 2)


def test_mesh_file_round_trip(mesh):
    again = parse_mesh(format_mesh(mesh), SQUARE)
    assert np.array_equal(again.nodes, mesh.nodes)
    assert np.array_equal(again.triangles, mesh.triangles)
    assert list(again.edge_tags) == list(mesh.edge_tags)


def test_errors():
    with pytest.raises(MeshError):
        triangulate(SQUARE, -1.0)
    with pytest.raises(MeshError):
        triangulate(SQUARE, 1e-4)
    with pytest.raises(MeshError):
        parse_mesh("q 1 2\n")


def test_polygon_disk_mesh_area():
    disk = regular_polygon(64, 1.0)
    m = triangulate(disk, 0.1)
    assert np.isclose(m.areas.sum(), disk.area)
