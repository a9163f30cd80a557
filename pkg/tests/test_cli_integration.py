"""End-to-end tests driving the command line entry point on the fixture problems."""

import json

import pytest

from app.cli import main
from app.models import InvariantReport, ReportDocument


def _run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _json(capsys, *argv: str) -> dict:
    code, out, err = _run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


def test_faces_of_the_plane(capsys, fixtures_dir):
    document = _json(capsys, "faces", str(fixtures_dir / "plane_x2y3.json"))
    assert document["format_version"] == "1.0"
    assert document["command"] == "faces"
    assert [row["face"] for row in document["faces"]] == ["origin", "face{1}", "face{2}", "face{1,2}"]
    assert all(row["smooth"] for row in document["faces"])
    assert document["result"] == {"count": 4}


def test_chi_table(capsys, fixtures_dir):
    document = _json(capsys, "chi", str(fixtures_dir / "plane_x2y3.json"), "-f", "f")
    assert [(row["face"], row["chi"]) for row in document["result"]["orbits"]] == [
        ("face{1}", 2),
        ("face{2}", 3),
        ("face{1,2}", -6),
    ]


def test_brasselet_of_x2y3(capsys, fixtures_dir):
    document = _json(capsys, "brasselet", str(fixtures_dir / "plane_x2y3.json"), "-f", "f")
    assert document["result"]["value"] == -1
    assert document["result"]["hypotheses"] == ["f and g are non-degenerate"]


def test_brasselet_text_output(capsys, fixtures_dir):
    code, out, _ = _run(capsys, "brasselet", str(fixtures_dir / "octant3.json"), "-f", "q")
    assert code == 0
    assert out.startswith("== brasselet ==")
    assert "value = 2" in out
    assert "face{1,2,3}" in out


def test_brasselet_of_a_generic_form_on_a1(capsys, fixtures_dir):
    document = _json(capsys, "brasselet", str(fixtures_dir / "a1_linear.json"), "-f", "l")
    assert document["result"]["value"] == 0
    assert [row["smooth"] for row in document["faces"]] == [False, True, True, True]


def test_brasselet_ci_of_a_line_on_the_cusp(capsys, fixtures_dir):
    document = _json(capsys, "brasselet-ci", str(fixtures_dir / "plane_x2y3.json"), "-f", "ell", "--prior", "g")
    assert document["result"]["value"] == 2
    assert document["result"]["functions"] == ["g", "ell"]


def test_morse_counts(capsys, fixtures_dir):
    plane = str(fixtures_dir / "plane_x2y3.json")
    assert _json(capsys, "morse", plane, "-f", "ell", "-g", "g")["result"]["value"] == 1
    assert _json(capsys, "morse", plane, "-f", "f", "-g", "g")["result"]["value"] == 5
    linear = _json(capsys, "morse", str(fixtures_dir / "plane_cusp_linear.json"), "-f", "l", "-g", "g")
    assert linear["result"]["mode"] == "linear-form"
    assert linear["result"]["value"] == 1
    tables = linear["result"]["tables"]
    assert [[term["face"] for term in table["terms"]] for table in tables] == [["origin"], ["origin"]]


def test_c3_example_emits_a_relation(capsys, fixtures_dir):
    problem = str(fixtures_dir / "c3_example.json")
    morse = _json(capsys, "morse", problem, "-f", "l", "-g", "g")["result"]
    assert morse["value"] is None
    assert morse["relation"] == "Eu_Xg(origin) - Eu_Xg(face{3}) = -m"
    milnor = _json(capsys, "milnor-cn", problem, "-g", "g")["result"]
    assert milnor["relation"] == "Eu_Xg(origin) - Eu_Xg(face{3}) = -m"

    code, out, _ = _run(capsys, "milnor-cn", problem, "-g", "g")
    assert code == 0
    assert "relation: Eu_Xg(origin) - Eu_Xg(face{3}) = -m" in out
    assert "critical orbits: face{3}" in out


def test_milnor_solve_needs_known_obstructions(capsys, fixtures_dir):
    code, out, err = _run(capsys, "milnor-cn", str(fixtures_dir / "c3_example.json"), "-g", "g", "--mode", "solve")
    assert code == 2
    assert not out
    assert err.startswith("error: missing Euler obstruction values for Xg on: origin, face{3}")


def test_milnor_solve_on_the_cusp(capsys, fixtures_dir):
    result = _json(capsys, "milnor-cn", str(fixtures_dir / "plane_cusp_linear.json"), "-g", "g", "--mode", "solve")
    assert result["result"]["value"] == 1


def test_orbits_of_the_c3_example(capsys, fixtures_dir):
    document = _json(capsys, "orbits", str(fixtures_dir / "c3_example.json"), "-g", "g")
    assert document["result"] == {"function": "g", "critical_orbits": ["face{3}"]}


def test_newton_on_one_face(capsys, fixtures_dir):
    document = _json(capsys, "newton", str(fixtures_dir / "plane_x2y3.json"), "-f", "f", "--face", "face{1,2}")
    restriction = document["result"]["restrictions"][0]
    assert restriction["face"] == "face{1,2}"
    assert [(facet["normal"], facet["level"]) for facet in restriction["facets"]] == [([3, 2], 6)]


def test_volumes_and_mixed_volume(capsys, fixtures_dir):
    problem = str(fixtures_dir / "polytopes.json")
    volumes = _json(capsys, "volume", problem)["result"]["polytopes"]
    assert {row["polytope"]: row["volume"] for row in volumes} == {"segment": 1, "simplex": 1, "square": 8, "wide": 3}
    mixed = _json(capsys, "mixed-volume", problem, "--polytope", "simplex", "--polytope", "wide")
    assert mixed["result"]["mixed_volume"] == 3
    diagonal = _json(capsys, "mixed-volume", problem, "--polytope", "simplex", "--polytope", "simplex")
    assert diagonal["result"]["mixed_volume"] == 1


def test_oracle_checks(capsys, fixtures_dir):
    result = _json(capsys, "oracle", str(fixtures_dir / "plane_x2y3.json"), "-f", "f")["result"]
    assert result["all_agree"]
    assert result["checks"][-1]["check"] == "brasselet-vs-kouchnirenko"
    polytopes = _json(capsys, "oracle", str(fixtures_dir / "polytopes.json"))["result"]
    assert polytopes["all_agree"]
    assert len(polytopes["checks"]) == 4

    code, out, _ = _run(capsys, "oracle", str(fixtures_dir / "octant3.json"), "-f", "q")
    assert code == 0
    assert "all checks agree" in out


def test_family_check(capsys, fixtures_dir):
    plane = str(fixtures_dir / "plane_x2y3.json")
    failing = _json(capsys, "family-check", plane, "--family", "f_xy")["result"]["constancy"]
    assert failing["verdict"] == "FAIL"
    assert failing["witnesses"][0]["normal"] == [3, 2]
    family = _json(capsys, "family-check", plane, "--family", "ell_fixed", "--hypersurface-family", "g_xy2")
    assert family["result"]["family"]["m"] == 1

    code, out, _ = _run(capsys, "family-check", plane, "--family", "f_xy")
    assert code == 0
    assert "Newton constancy of f_xy: FAIL" in out
    code, _, err = _run(capsys, "family-check", plane, "--family", "f_xy", "--hypersurface-family", "g_xy2")
    assert code == 2
    assert "not constant" in err


def test_invalid_problem_file(capsys, fixtures_dir):
    code, out, err = _run(capsys, "faces", str(fixtures_dir / "bad_schema.json"))
    assert code == 2
    assert not out
    assert err.startswith("invalid problem file:\n")
    assert "  euler_obstruction.Y: variety must be one of X, Xg\n" in err


def test_polytope_of_the_wrong_rank_is_rejected(capsys, fixtures_dir):
    code, out, err = _run(capsys, "volume", str(fixtures_dir / "polytope_wrong_rank.json"))
    assert code == 2
    assert not out
    assert "  polytopes.cube[0]: length 3 does not match lattice_rank 2\n" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["brasselet", "plane_x2y3.json"],
        ["brasselet", "plane_x2y3.json", "-f", "missing"],
        ["morse", "plane_x2y3.json", "-f", "h_xy", "-g", "h_xy"],
        ["milnor-cn", "a1_linear.json", "-g", "l"],
        ["chi", "plane_x2y3.json", "-f", "f", "--face", "origin"],
        ["family-check", "plane_x2y3.json", "--family", "nope"],
    ],
)
def test_hypothesis_violations_exit_with_two(capsys, fixtures_dir, argv):
    command, problem, *rest = argv
    code, out, err = _run(capsys, command, str(fixtures_dir / problem), *rest)
    assert code == 2
    assert not out
    assert err.startswith("error: ")


def test_usage_errors_exit_with_two(capsys, fixtures_dir):
    assert _run(capsys, "bogus", str(fixtures_dir / "plane_x2y3.json"))[0] == 2
    assert _run(capsys, "faces", str(fixtures_dir / "plane_x2y3.json"), "--parallel", "0")[0] == 2
    assert _run(capsys, "--help")[0] == 0


def test_reports_are_deterministic(capsys, fixtures_dir):
    argv = ["morse", str(fixtures_dir / "octant3.json"), "-f", "l", "-g", "q", "--json"]
    first = _run(capsys, *argv)
    second = _run(capsys, *argv)
    assert first == second
    threaded = _run(capsys, *argv, "--parallel", "4")
    assert threaded[1] == first[1]


def test_json_reports_validate_back_into_documents(capsys, fixtures_dir):
    document = _json(capsys, "brasselet-ci", str(fixtures_dir / "plane_x2y3.json"), "-f", "f", "--prior", "g")
    parsed = ReportDocument.model_validate(document)
    report = InvariantReport.model_validate(parsed.result)
    assert report.value == report.tables[0].total == 4
    assert parsed.model_dump(mode="json") == document
