import itertools
from fractions import Fraction

import pytest

from app.errors import HypothesisViolation
from app.services.lattice_service import dot
from app.services.newton_service import NewtonService
from tests.factories import make_function


@pytest.fixture
def newton() -> NewtonService:
    return NewtonService()


@pytest.fixture
def c3_g():
    """g = z2^2 - z1^3 - z1^2 z3^2."""
    return make_function("g", {(0, 2, 0): 1, (3, 0, 0): -1, (2, 0, 2): -1})


def test_meets_and_local_support(newton, plane, x2y3):
    _, faces = plane
    origin, x_axis, y_axis, full = faces
    assert not newton.meets(x2y3, origin)
    assert newton.meets(x2y3, x_axis)
    assert newton.local_support(x2y3, x_axis) == [(2,)]
    assert newton.local_support(x2y3, y_axis) == [(3,)]
    assert newton.local_support(x2y3, full) == [(0, 3), (2, 0)]


def test_meets_agrees_with_rational_membership(newton, space, c3_g):
    """Gamma_+ meets a face iff some point of the face is a convex combination of support plus cone."""
    cone, faces = space
    for face in faces:
        on_face = [v for v in c3_g.support if all(dot(n, v) == 0 for n in face.defining_normals)]
        # any rational point of conv(support) + cone lies on the face only if its support points do
        witnesses = [
            tuple(Fraction(a + b, 2) for a, b in zip(p, q)) for p, q in itertools.product(c3_g.support, repeat=2)
        ]
        hits = [w for w in witnesses if all(dot(n, w) == 0 for n in face.defining_normals)]
        assert newton.meets(c3_g, face) == bool(on_face) == bool(hits)


def test_c3_example_misses_only_the_third_axis(newton, space, c3_g):
    _, faces = space
    missed = [face.label for face in faces if face.dim > 0 and not newton.meets(c3_g, face)]
    assert missed == ["face{3}"]


def test_newton_restriction_of_x2y3(newton, plane, x2y3):
    cone, faces = plane
    data = newton.newton_restriction(x2y3, cone, faces[-1])
    assert len(data.facets) == 1
    facet = data.facets[0]
    assert facet.normal == (3, 2)
    assert facet.level == 6
    assert facet.vertices == [(0, 3), (2, 0)]

    edge = newton.newton_restriction(x2y3, cone, faces[1]).facets
    assert [(f.normal, f.level, f.vertices) for f in edge] == [((1,), 2, [(2,)])]


def test_newton_restriction_requires_meeting(newton, plane, x2y3):
    cone, faces = plane
    with pytest.raises(HypothesisViolation, match="misses"):
        newton.newton_restriction(x2y3, cone, faces[0])


def test_sum_of_squares_in_three_variables(newton, space):
    cone, faces = space
    q = make_function("q", {(2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1})
    facets = newton.newton_restriction(q, cone, faces[-1]).facets
    assert [(f.normal, f.level) for f in facets] == [((1, 1, 1), 2)]
    assert facets[0].vertices == [(0, 0, 2), (0, 2, 0), (2, 0, 0)]


def test_polyhedron_inequalities(newton, x2y3):
    inequalities = newton.polyhedron_inequalities(x2y3.support, [(1, 0), (0, 1)])
    assert sorted(inequalities) == [(-6, 3, 2), (0, 0, 1), (0, 1, 0)]


def test_product_polygon_of_cusp_and_x2y3(newton, plane, x2y3, cusp):
    cone, faces = plane
    data = newton.product_polygon([cusp, x2y3], cone, faces[-1])
    assert data.functions == ["g", "f"]
    assert [(f.normal, f.level) for f in data.facets] == [((2, 3), 10), ((3, 2), 10)]
    first, second = data.facets
    assert [s.function for s in first.summands] == ["g", "f"]
    assert first.summands[0].vertices == [(0, 2), (3, 0)]
    assert first.summands[1].level == 4
    assert second.summands[0].vertices == [(0, 2)]
    assert second.summands[1].level == 6


def test_product_polygon_skips_priors_missing_the_face(newton, plane, x2y3):
    cone, faces = plane
    y_only = make_function("h", {(0, 1): 1})
    data = newton.product_polygon([y_only, x2y3], cone, faces[1])
    assert data.functions == ["f"]


def test_supporting_face(newton, plane, x2y3):
    cone, faces = plane
    full = faces[-1]
    top = newton.supporting_face(x2y3, cone, full, (3, 2))
    assert top.level == 6
    assert top.u_part.name == "f^(3,2)"
    assert [t.exponent for t in top.u_part.terms] == [(0, 3), (2, 0)]
    assert top.recession_rays == []

    side = newton.supporting_face(x2y3, cone, full, (1, 0))
    assert side.level == 0
    assert [t.exponent for t in side.u_part.terms] == [(0, 3)]
    assert side.recession_rays == [(0, 1)]

    with pytest.raises(HypothesisViolation):
        newton.supporting_face(x2y3, cone, full, (-1, 1))


def test_d_min(newton, plane, x2y3):
    cone, faces = plane
    assert newton.d_min(x2y3, cone, faces[-1], (1, 1)) == 2
    assert newton.d_min(x2y3, cone, faces[-1], (3, 2)) == 6
    with pytest.raises(HypothesisViolation):
        newton.d_min(x2y3, cone, faces[-1], (1, 0))


def test_cone_over_facet(newton, plane, x2y3):
    cone, faces = plane
    facet = newton.newton_restriction(x2y3, cone, faces[-1]).facets[0]
    hull = newton.polytopes.convex_hull(facet.ambient_vertices)
    pyramid = newton.cone_over_facet(hull, faces[-1].span_basis)
    assert newton.polytopes.normalized_volume(pyramid) == 6

    through_origin = newton.polytopes.convex_hull([(1, 1), (2, 2)])
    with pytest.raises(HypothesisViolation):
        newton.cone_over_facet(through_origin, faces[-1].span_basis)


def test_generic_linear_form(newton, a1_germ, plane):
    cone, _ = a1_germ
    form = newton.generic_linear_form(cone)
    assert form.generic_linear
    assert form.support == [(0, 1), (1, 1), (2, 1)]
    assert newton.generic_linear_form(cone, [(2, 1), (0, 1)], "m").support == [(0, 1), (2, 1)]

    plane_cone, _ = plane
    with pytest.raises(HypothesisViolation):
        newton.generic_linear_form(plane_cone, [(0, 0)])
    with pytest.raises(HypothesisViolation):
        newton.generic_linear_form(plane_cone, [(-1, 1)])
