import pytest

from app.components.report_tables import ReportTablesComponent
from app.models import CommandFlags
from app.services.report_service import ReportService
from tests.factories import load_context


@pytest.fixture
def tables() -> ReportTablesComponent:
    return ReportTablesComponent()


def _render(tables, fixture: str, command: str, **flags) -> str:
    document = ReportService().run_command(command, load_context(fixture), CommandFlags(**flags))
    return tables.render(document)


def test_face_table_is_aligned(tables):
    text = _render(tables, "a1_linear.json", "faces")
    lines = text.splitlines()
    assert lines[0] == "== faces =="
    assert lines[2] == "face       dim  generators  smooth"
    assert lines[3] == "---------  ---  ----------  ------"
    assert lines[4] == "origin     0    ()          no"
    assert lines[7] == "face{1,2}  2    (1,2)       yes"
    assert text.endswith("4 faces\n")


def test_brasselet_table_lists_every_term(tables):
    text = _render(tables, "plane_x2y3.json", "brasselet", function="f")
    assert "hypersurface [f] on X" in text
    assert "face{1,2}  2    -1    6       Eu_X(face{1,2})  1      -6" in text
    assert "total = -1" in text
    assert "value = -1" in text
    assert "assumes: f and g are non-degenerate" in text


def test_unknown_obstructions_render_as_question_marks(tables):
    text = _render(tables, "c3_example.json", "morse", function="l", hypersurface="g")
    assert "face{3}  1    1     ?" in text
    assert "relation: Eu_Xg(origin) - Eu_Xg(face{3}) = -m" in text


def test_complete_intersection_lists_excluded_faces(tables):
    text = _render(tables, "plane_x2y3.json", "brasselet-ci", function="ell", priors=["g"])
    assert "complete-intersection [g, ell] on Xg" in text
    assert "excluded: face{1}, face{2}" in text


def test_constancy_witnesses(tables):
    text = _render(tables, "plane_x2y3.json", "family-check", family="f_xy")
    assert "Newton constancy of f_xy: FAIL (" in text
    assert "  h_xy exponent (1,1): <(3,2), p> = 5 < 6" in text


def test_mixed_volume_and_oracle(tables):
    text = _render(tables, "polytopes.json", "mixed-volume", polytopes=["simplex", "wide"])
    assert "MV(simplex, wide) = 3" in text
    assert _render(tables, "polytopes.json", "oracle").rstrip().endswith("all checks agree")
