from typing import Any, Optional, Sequence

from app.models import ReportDocument


def _cell(value: Any) -> str:
    match value:
        case None:
            return "?"
        case bool():
            return "yes" if value else "no"
        case list() | tuple():
            return "(" + ",".join(str(v) for v in value) + ")"
        case _:
            return str(value)


class ReportTablesComponent:
    """Component for rendering report documents as aligned text tables."""

    def render(self, document: ReportDocument) -> str:
        """Render the face table followed by the command's own tables."""
        sections = [f"== {document.command} ==", self._faces(document)]
        result = document.result
        match document.command:
            case "faces":
                sections.append(f"{result['count']} faces")
            case "orbits":
                critical = result["critical_orbits"]
                sections.append(f"critical orbits of {result['function']}: " + (", ".join(critical) or "none"))
            case "newton":
                sections.append(self._newton(result))
            case "chi":
                rows = [(row["face"], row["dim"], row["chi"]) for row in result["orbits"]]
                sections.append(self._table(("face", "dim", "chi"), rows))
            case "volume":
                rows = [
                    (row["polytope"], row["affine_dim"], row["vertices"], row["volume"]) for row in result["polytopes"]
                ]
                sections.append(self._table(("polytope", "dim", "vertices", "Vol_Z"), rows))
            case "mixed-volume":
                sections.append(f"MV({', '.join(result['polytopes'])}) = {result['mixed_volume']}")
            case "brasselet" | "brasselet-ci" | "morse" | "milnor-cn":
                sections.append(self._invariant(result))
            case "family-check":
                sections.append(self._family(result))
            case "oracle":
                sections.append(self._oracle(result))
        return "\n\n".join(section for section in sections if section) + "\n"

    def _table(self, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        cells = [list(headers)] + [[_cell(value) for value in row] for row in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
        lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in cells]
        lines.insert(1, "  ".join("-" * width for width in widths))
        return "\n".join(lines)

    def _faces(self, document: ReportDocument) -> str:
        rows = [(row.face, row.dim, row.generators, row.smooth) for row in document.faces]
        return self._table(("face", "dim", "generators", "smooth"), rows)

    def _newton(self, result: dict[str, Any]) -> str:
        lines = [f"support of {result['function']}: " + " ".join(_cell(v) for v in result["support"])]
        for restriction in result["restrictions"]:
            rows = [
                (facet["normal"], facet["level"], " ".join(_cell(v) for v in facet["vertices"]))
                for facet in restriction["facets"]
            ]
            lines.append(f"{restriction['face']}:")
            lines.append(self._table(("normal", "level", "vertices"), rows))
        return "\n".join(lines)

    def _brasselet_table(self, table: dict[str, Any]) -> str:
        rows = [
            (
                term["face"],
                term["dim"],
                term["sign"],
                term["weight"],
                term["eu_symbol"],
                term["eu"],
                term["contribution"],
            )
            for term in table["terms"]
        ]
        lines = [
            f"{table['kind']} [{', '.join(table['functions'])}] on {table['variety_label']}",
            self._table(("face", "dim", "sign", "weight", "Eu", "value", "contribution"), rows),
        ]
        if table["excluded_faces"]:
            lines.append("excluded: " + ", ".join(table["excluded_faces"]))
        lines.append(f"total = {table['total_expression']}")
        return "\n".join(lines)

    def _invariant(self, report: dict[str, Any]) -> str:
        lines = [self._brasselet_table(table) for table in report["tables"]]
        if report.get("mode"):
            lines.append(f"mode: {report['mode']}")
        if report["critical_orbits"]:
            lines.append("critical orbits: " + ", ".join(report["critical_orbits"]))
        if report["corrections"]:
            rows = [(c["stratum"], c["chi"], c["eu_x"], c["eu_xg"], c["contribution"]) for c in report["corrections"]]
            lines.append(self._table(("stratum", "chi", "Eu_X", "Eu_Xg", "contribution"), rows))
        lines.append(self._value(report["value"], report["value_expression"], report.get("relation")))
        lines.extend(f"assumes: {h}" for h in report["hypotheses"])
        lines.extend(f"note: {n}" for n in report["notes"])
        return "\n\n".join(lines)

    def _value(self, value: Optional[int], expression: str, relation: Optional[str]) -> str:
        if relation:
            return f"relation: {relation}"
        return f"value = {value if value is not None else expression}"

    def _constancy(self, check: dict[str, Any]) -> str:
        lines = [
            f"Newton constancy of {check['family']}: {check['verdict']} "
            f"({check['inequalities_checked']} inequalities, facet disjointness {_cell(check['facet_disjointness'])})"
        ]
        for w in check["witnesses"]:
            witness = f"{w['function']} exponent {_cell(w['point'])}"
            lines.append(f"  {witness}: <{_cell(w['normal'])}, p> = {w['pairing']} < {w['level']}")
        return "\n".join(lines)

    def _family(self, result: dict[str, Any]) -> str:
        if "constancy" in result:
            return self._constancy(result["constancy"])
        family = result["family"]
        lines = [
            self._constancy(family["f_check"]),
            self._constancy(family["g_check"]),
            f"members compared: {family['members_compared']}, identical: {_cell(family['identical'])}",
            self._invariant(family["report"]),
        ]
        return "\n\n".join(lines)

    def _oracle(self, result: dict[str, Any]) -> str:
        rows = [
            (row["check"], row["subject"], row["computed"], row["oracle"], row["agree"]) for row in result["checks"]
        ]
        verdict = "all checks agree" if result["all_agree"] else "DISAGREEMENT"
        return self._table(("check", "subject", "computed", "oracle", "agree"), rows) + f"\n\n{verdict}"
