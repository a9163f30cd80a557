import random
from fractions import Fraction

import pytest
from sympy import Matrix

from app.errors import HypothesisViolation
from app.services.lattice_service import LatticeService, dot


@pytest.fixture
def lattice() -> LatticeService:
    return LatticeService()


def _matrix(rows) -> Matrix:
    return Matrix([list(row) for row in rows])


def test_hermite_normal_form_is_unimodular_and_triangular(lattice):
    """u . m = h with |det u| = 1, positive pivots and reduced entries above them."""
    rng = random.Random(7)
    for _ in range(25):
        m = tuple(tuple(rng.randint(-5, 5) for _ in range(3)) for _ in range(3))
        h, u = lattice.hermite_normal_form(m)
        assert _matrix(u) * _matrix(m) == _matrix(h)
        assert abs(_matrix(u).det()) == 1
        previous = -1
        for i, row in enumerate(h):
            if not any(row):
                assert not any(any(r) for r in h[i:])
                break
            pivot_col = next(j for j, v in enumerate(row) if v != 0)
            assert pivot_col > previous
            assert row[pivot_col] > 0
            for above in h[:i]:
                assert 0 <= above[pivot_col] < row[pivot_col]
            previous = pivot_col


def test_smith_normal_form_divisibility_chain(lattice):
    """Textbook example with elementary divisors 2, 6, 12."""
    m = ((2, 4, 4), (-6, 6, 12), (10, -4, -16))
    d, left, right = lattice.smith_normal_form(m)
    assert _matrix(left) * _matrix(m) * _matrix(right) == _matrix(d)
    assert abs(_matrix(left).det()) == 1
    assert abs(_matrix(right).det()) == 1
    assert lattice.elementary_divisors(m) == [2, 6, 12]


def test_hermite_normal_form_is_idempotent(lattice):
    rng = random.Random(11)
    for _ in range(25):
        m = tuple(tuple(rng.randint(-6, 6) for _ in range(3)) for _ in range(rng.randint(1, 4)))
        h, _ = lattice.hermite_normal_form(m)
        again, u = lattice.hermite_normal_form(h)
        assert again == h
        assert abs(_matrix(u).det()) == 1


def test_smith_diagonal_product_is_the_determinant(lattice):
    rng = random.Random(13)
    checked = 0
    while checked < 25:
        m = tuple(tuple(rng.randint(-7, 7) for _ in range(3)) for _ in range(3))
        det = lattice.determinant(m)
        if det == 0:
            continue
        d, left, right = lattice.smith_normal_form(m)
        assert _matrix(left) * _matrix(m) * _matrix(right) == _matrix(d)
        divisors = lattice.elementary_divisors(m)
        assert divisors == [d[i][i] for i in range(3)]
        assert all(v > 0 for v in divisors)
        assert all(divisors[i + 1] % divisors[i] == 0 for i in range(2))
        assert divisors[0] * divisors[1] * divisors[2] == abs(det)
        checked += 1


def test_smith_normal_form_of_rank_deficient_matrix(lattice):
    m = ((2, 4), (1, 2), (3, 6))
    d, left, right = lattice.smith_normal_form(m)
    assert _matrix(left) * _matrix(m) * _matrix(right) == _matrix(d)
    assert lattice.elementary_divisors(m) == [1, 0]


def test_elementary_divisors_of_a1_normals(lattice):
    assert lattice.elementary_divisors(((-1, 2), (1, 0))) == [1, 2]
    assert lattice.elementary_divisors(((1, 0), (0, 1))) == [1, 1]


def test_primitive_vector(lattice):
    assert lattice.primitive_vector((4, -6)) == (2, -3)
    assert lattice.primitive_vector((0, 0, 5)) == (0, 0, 1)
    with pytest.raises(HypothesisViolation):
        lattice.primitive_vector((0, 0))


def test_integer_kernel_is_saturated(lattice):
    kernel = lattice.integer_kernel([(2, 4, 6)], 3)
    assert len(kernel) == 2
    assert all(dot(row, (2, 4, 6)) == 0 for row in kernel)
    assert lattice.elementary_divisors(kernel) == [1, 1]


def test_integer_kernel_of_full_rank_map_is_empty(lattice):
    assert lattice.integer_kernel([(1, 0), (0, 1)], 2) == ()


def test_sublattice_basis_saturates_the_span(lattice):
    assert lattice.sublattice_basis([(2, 0, 0), (0, 2, 0)], 3) == ((1, 0, 0), (0, 1, 0))
    assert lattice.sublattice_basis([(2, 4)], 2) == ((1, 2),)
    assert lattice.sublattice_basis([(0, 0)], 2) == ()


def test_sublattice_basis_rejects_wrong_length(lattice):
    with pytest.raises(HypothesisViolation):
        lattice.sublattice_basis([(1, 2, 3)], 2)


def test_chart_round_trip_and_membership(lattice):
    chart = lattice.chart(((1, 1, 0), (0, 0, 1)))
    assert chart.to_local((3, 3, -2)) == (3, -2)
    assert chart.to_ambient((3, -2)) == (3, 3, -2)
    assert chart.to_local_rational((1, 2, 0)) is None
    with pytest.raises(HypothesisViolation):
        chart.to_local((1, 2, 0))


def test_chart_detects_non_lattice_points(lattice):
    chart = lattice.chart(((2, 0),))
    assert chart.to_local_rational((1, 0)) == (Fraction(1, 2),)
    with pytest.raises(HypothesisViolation):
        chart.to_local((1, 0))


def test_integral_scaling(lattice):
    assert lattice.integral_scaling([Fraction(1, 2), Fraction(1, 3)]) == (3, 2)
    assert lattice.integral_scaling([Fraction(-4), Fraction(6)]) == (-2, 3)
    with pytest.raises(HypothesisViolation):
        lattice.integral_scaling([Fraction(0), Fraction(0)])


def test_rank_and_determinant(lattice):
    assert lattice.rank([(1, 2), (2, 4), (0, 0)]) == 1
    assert lattice.rank([]) == 0
    assert lattice.determinant([(2, 1), (1, 1)]) == 1
    assert lattice.determinant([]) == 1
