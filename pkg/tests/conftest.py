from pathlib import Path

import pytest

from app.models import Cone, Face, ToricFunction
from app.services.cone_service import ConeService
from tests.factories import FIXTURES, make_function, octant


@pytest.fixture
def fixtures_dir() -> Path:
    """Directory of problem files used by the end-to-end tests."""
    return FIXTURES


@pytest.fixture
def plane() -> tuple[Cone, list[Face]]:
    """First quadrant of Z^2 (X = C^2) with its four faces."""
    return octant(2)


@pytest.fixture
def space() -> tuple[Cone, list[Face]]:
    """First octant of Z^3 (X = C^3) with its eight faces."""
    return octant(3)


@pytest.fixture
def a1_germ() -> tuple[Cone, list[Face]]:
    """The A_1 surface singularity, dual cone spanned by (0,1) and (2,1)."""
    cones = ConeService()
    cone = cones.dual_cone([(0, 1), (2, 1)], 2)
    return cone, cones.enumerate_faces(cone)


@pytest.fixture
def x2y3() -> ToricFunction:
    """f = x^2 + y^3."""
    return make_function("f", {(2, 0): 1, (0, 3): 1})


@pytest.fixture
def cusp() -> ToricFunction:
    """g = y^2 - x^3."""
    return make_function("g", {(0, 2): 1, (3, 0): -1})
