from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixedgreen.clipping import polygon_disk_rule, triangles_disk_rule
from mixedgreen.errors import DomainError, NotApplicable
from mixedgreen.geometry import (Domain, check_corkscrew, format_domain, local_domain, parse_domain, rectangle,
                                 regular_polygon)
from mixedgreen.quadrature import gauss_legendre, segment_rule, triangle_rule

SQUARE = """
# unit square, D = bottom
v 0 0
v 1 0
v 1 1
v 0 1
arc 0 1 D
arc 1 4 N
M 4
"""


def test_triangle_rule_exact_for_degree():
    for deg in (1, 2, 3, 4, 5):
        bary, w = triangle_rule(deg)
        assert np.isclose(w.sum(), 1.0)
        # reference triangle (0,0), (1,0), (0,1): ∫ x^a y^b = a! b! / (a + b + 2)!
        pts = bary[:, 1:3]
        for a in range(deg + 1):
            for b in range(deg + 1 - a):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                assert np.isclose(0.5 * np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b), exact)


def test_gauss_legendre_and_segment_rule():
    x, w = gauss_legendre(3)
    assert np.isclose(w.sum(), 1.0)
    assert np.isclose(np.sum(w * x ** 5), 1 / 6)
    t, ws = segment_rule(3)
    assert np.isclose(np.sum(ws * t ** 3), 0.25)


def test_parse_square_domain():
    dom = parse_domain(SQUARE)
    assert dom.n == 4
    assert list(dom.edge_tags) == ["D", "N", "N", "N"]
    assert np.isclose(dom.area, 1.0)
    assert np.isclose(dom.d, np.sqrt(2.0))
    assert dom.has_dirichlet and not dom.is_dirichlet
    again = parse_domain(format_domain(dom))
    assert np.allclose(again.vertices, dom.vertices)
    assert list(again.edge_tags) == list(dom.edge_tags)


def test_clockwise_polygon_is_reoriented():
    dom = Domain.from_polygon([(0, 0), (0, 1), (1, 1), (1, 0)], ["D", "N", "N", "N"])
    assert dom.area > 0
    assert np.isclose(dom.area, 1.0)


@pytest.mark.parametrize("text, msg", [
    ("v 0 0\nv 1 0\narc 0 2 D\n", "degenerate"),
    ("v 0 0\nv 1 0\nv 0 1\narc 0 1 D\n", "untagged"),
    ("v 0 0\nv 1 0\nv 0 1\narc 0 3 X\n", "invalid tag"),
    ("v 0 0\nv 1 0\nv 0 1\narc 0 0 D\n", "zero-length"),
    ("v 0 0\nv 3 0\nv 3 2\nv 1 -1\nv 0 2\narc 0 5 D\n", "self-intersecting"),
])
def test_parse_errors(text, msg):
    with pytest.raises(DomainError, match=msg):
        parse_domain(text)


def test_boundary_distance_and_local_domains():
    dom = rectangle(0, 0, 1, 1, tags=["D", "N", "N", "N"])
    d, xhat, _ = dom.boundary_distance(np.array([[0.5, 0.2]]))
    assert np.isclose(d[0], 0.2) and np.allclose(xhat[0], [0.5, 0.0])
    ld = local_domain(dom, (0.5, 0.5), 0.1)
    assert ld.kind == "interior" and not ld.touches_D
    assert np.isclose(ld.area(), np.pi * 0.01)
    ld = local_domain(dom, (0.5, 0.95), 0.1)
    assert ld.kind == "boundary" and not ld.touches_D
    assert np.allclose(ld.anchor, [0.5, 1.0])
    assert np.isclose(ld.area(), 0.5 * np.pi * 0.01)
    assert local_domain(dom, (0.5, 0.05), 0.1).touches_D
    # near the top edge, but D (bottom) is within rho of the anchor only for big rho
    assert local_domain(dom, (0.98, 0.5), 0.6).touches_D
    with pytest.raises(DomainError):
        local_domain(dom, (2.0, 2.0), 0.1)


def test_regular_polygon_area():
    dom = regular_polygon(64, 1.0)
    assert np.isclose(dom.area, 0.5 * 64 * np.sin(2 * np.pi / 64))
    assert dom.is_dirichlet


@settings(max_examples=40, deadline=None)
@given(cx=st.floats(-0.5, 1.5), cy=st.floats(-0.5, 1.5), r=st.floats(0.05, 1.2))
def test_disk_clipping_area_matches_brute_force(cx, cy, r):
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    pts, w = polygon_disk_rule(tri, (cx, cy), r, degree=2)
    assert np.all(w >= -1e-15)
    fast = triangles_disk_rule(tri[None], np.array([cx, cy]), r, degree=2)
    # Monte Carlo free oracle: fine grid midpoint count
    n = 400
    g = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(g, g)
    inside = (X + Y <= 1.0) & ((X - cx) ** 2 + (Y - cy) ** 2 <= r * r)
    approx = inside.sum() / n ** 2
    assert abs(w.sum() - approx) < 6e-3
    if fast[2][0]:
        assert np.isclose(fast[1][0].sum(), w.sum(), atol=1e-12)


def test_disk_rule_integrates_moments_exactly():
    tri = np.array([[-1.0, -1.0], [2.0, -1.0], [-1.0, 2.0]])
    pts, w = polygon_disk_rule(tri, (0.0, 0.0), 0.7, degree=4)
    assert np.isclose(w.sum(), np.pi * 0.49)
    assert np.isclose(np.sum(w * pts[:, 0] ** 2), np.pi * 0.7 ** 4 / 4)


def test_corkscrew():
    dom = rectangle(0, 0, 1, 1, tags=["D", "N", "N", "N"])
    rep = check_corkscrew(dom)
    assert rep.passed
    with pytest.raises(NotApplicable):
        check_corkscrew(rectangle(0, 0, 1, 1, tags="N"))
