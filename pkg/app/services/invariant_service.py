import itertools
import logging
from multiprocessing.pool import ThreadPool
from typing import Callable, Optional, Sequence, TypeVar

from sympy import Expr, Integer, Symbol, expand

from app.errors import HypothesisViolation, MissingEulerObstruction
from app.models import (
    BrasseletTable,
    Cone,
    CorrectionTerm,
    EuTable,
    Face,
    FacetTerm,
    FaceTerm,
    InvariantReport,
    MilnorMode,
    MorseMode,
    NewtonFacet,
    RefinedStratum,
    ToricFunction,
    VarietyLabel,
    parse_face_label,
)
from app.services.cone_service import ConeService
from app.services.lattice_service import LatticeService
from app.services.newton_service import NewtonService
from app.services.polytope_service import PolytopeService

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ASSUMED_HYPOTHESES = [
    "non-degeneracy of the functions (asserted, not verified)",
    "tractability of g at the origin with respect to V_f (asserted, not verified)",
    "the orbit stratification of X^g is Whitney (asserted, not verified)",
]


def eu_symbol_name(variety: VarietyLabel, face: Face) -> str:
    return f"Eu_{variety.value}({face.label})"


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Tuples of `parts` entries summing to `total`, all >= 1 except the last, which is >= 0."""
    result = []
    for head in itertools.product(range(1, total + 1), repeat=parts - 1):
        rest = total - sum(head)
        if rest >= 0:
            result.append((*head, rest))
    return result


def _format_value(expr: Expr) -> Optional[int]:
    return int(expr) if expr.is_Integer else None


class InvariantService:
    """Service for orbit Euler characteristics, Brasselet numbers and stratified Morse counts.

    Per-face terms are independent and are mapped over a thread pool when `workers` > 1;
    results are always assembled in face order.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, workers)
        self.lattice = LatticeService()
        self.cones = ConeService()
        self.polytopes = PolytopeService()
        self.newton = NewtonService()

    def map_faces(self, func: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if self.workers == 1 or len(items) < 2:
            return [func(item) for item in items]
        with ThreadPool(processes=min(self.workers, len(items))) as pool:
            return pool.map(func, items)

    # Euler obstruction values
    def _eu_value(self, table: EuTable, face: Face) -> Expr:
        entry = table.entry(face.id)
        if entry is None or entry.value is None:
            return Symbol(eu_symbol_name(table.variety_label, face))
        return Integer(entry.value)

    def _require_known(self, table: EuTable, faces: Sequence[Face]) -> None:
        missing = []
        for face in faces:
            entry = table.entry(face.id)
            if entry is None or entry.value is None:
                missing.append(face.label)
        if missing:
            raise MissingEulerObstruction(table.variety_label.value, missing)

    def _origin(self, faces: Sequence[Face]) -> Face:
        origin = self.cones.find_face(list(faces), ())
        if origin is None:
            raise HypothesisViolation("face list has no zero face")
        return origin

    # Orbits
    def critical_orbits(self, g: ToricFunction, cone: Cone, faces: Sequence[Face]) -> list[Face]:
        """Faces Delta != {0} with Gamma_+(g) cap Delta empty."""
        return [face for face in faces if face.dim > 0 and not self.newton.meets(g, face)]

    def _chi_facets(self, f: ToricFunction, cone: Cone, face: Face) -> list[FacetTerm]:
        if face.dim == 0:
            raise HypothesisViolation("orbit Euler characteristics need a face of positive dimension")
        if not self.newton.meets(f, face):
            raise HypothesisViolation(
                f"{f.name}'s polygon misses {face.label}; it is a critical orbit of {f.name} (see critical_orbits)"
            )
        data = self.newton.newton_restriction(f, cone, face)
        facets = []
        for facet in data.facets:
            hull = self.polytopes.convex_hull(facet.ambient_vertices)
            volume = self.polytopes.normalized_volume(self.newton.cone_over_facet(hull, face.span_basis))
            facets.append(FacetTerm(normal=facet.normal, level=facet.level, vertices=facet.vertices, volume=volume))
        return facets

    def chi_orbit(self, f: ToricFunction, cone: Cone, face: Face) -> int:
        """Euler characteristic of the Milnor fiber of f restricted to the orbit T_Delta."""
        volumes = sum(facet.volume or 0 for facet in self._chi_facets(f, cone, face))
        return (-1) ** (face.dim - 1) * volumes

    # Brasselet numbers
    def _face_term(
        self,
        face: Face,
        sign: int,
        weight: int,
        table: EuTable,
        facets: list[FacetTerm],
        m_face: int = 1,
    ) -> tuple[FaceTerm, Expr]:
        eu = self._eu_value(table, face)
        contribution = expand(sign * weight * eu)
        term = FaceTerm(
            face=face.label,
            dim=face.dim,
            sign=sign,
            m_face=m_face,
            weight=weight,
            eu=_format_value(eu),
            eu_symbol=eu_symbol_name(table.variety_label, face),
            contribution=str(contribution),
            facets=facets,
        )
        return term, contribution

    def _assemble(
        self,
        kind: str,
        functions: list[str],
        table: EuTable,
        rows: list[tuple[FaceTerm, Expr]],
        excluded: Optional[list[str]] = None,
    ) -> tuple[BrasseletTable, Expr]:
        total = expand(sum((expr for _, expr in rows), Integer(0)))
        brasselet = BrasseletTable(
            kind=kind,
            functions=functions,
            variety_label=table.variety_label,
            terms=[term for term, _ in rows],
            excluded_faces=excluded or [],
            total=_format_value(total),
            total_expression=str(total),
        )
        return brasselet, total

    def _hypersurface_table(
        self, f: ToricFunction, cone: Cone, faces: Sequence[Face], eu: EuTable, strict: bool
    ) -> tuple[BrasseletTable, Expr]:
        needed = [face for face in faces if face.dim > 0 and self.newton.meets(f, face)]
        if strict:
            self._require_known(eu, needed)

        def term(face: Face) -> tuple[FaceTerm, Expr]:
            facets = self._chi_facets(f, cone, face)
            weight = sum(facet.volume or 0 for facet in facets)
            return self._face_term(face, (-1) ** (face.dim - 1), weight, eu, facets)

        return self._assemble("hypersurface", [f.name], eu, self.map_faces(term, needed))

    def brasselet_hypersurface(
        self,
        f: ToricFunction,
        cone: Cone,
        faces: Sequence[Face],
        eu: EuTable,
        strict: bool = True,
        hypotheses: Sequence[str] = (),
    ) -> InvariantReport:
        """B_{f,X}(0) as the Eu-weighted sum of orbit Euler characteristics over faces meeting Gamma_+(f)."""
        table, total = self._hypersurface_table(f, cone, faces, eu, strict)
        logger.info(f"Brasselet number of {f.name}: {total}")
        return InvariantReport(
            kind="brasselet",
            functions=[f.name],
            tables=[table],
            value=table.total,
            value_expression=table.total_expression,
            hypotheses=list(hypotheses),
            notes=ASSUMED_HYPOTHESES[:1],
        )

    def k_coefficient(self, facet: NewtonFacet, face: Face) -> int:
        """Sum of normalized mixed volumes of the facet's summand faces over admissible exponent tuples."""
        parts = len(facet.summands)
        if face.dim < parts:
            raise HypothesisViolation(f"{face.label} has dimension {face.dim} < {parts}; excluded from the formula")
        total_degree = face.dim - 1
        if total_degree == 0:
            return 1
        lattice = self.lattice.integer_kernel([facet.normal], face.dim)
        summands = [self.polytopes.convex_hull(summand.vertices) for summand in facet.summands]
        total = 0
        for alpha in _compositions(total_degree, parts):
            total += self.polytopes.mixed_volume(list(zip(summands, alpha)), lattice)
        return total

    def _complete_intersection_table(
        self,
        priors: Sequence[ToricFunction],
        f_k: ToricFunction,
        cone: Cone,
        faces: Sequence[Face],
        eu: EuTable,
        strict: bool,
    ) -> tuple[BrasseletTable, Expr]:
        included: list[tuple[Face, int]] = []
        excluded = []
        for face in faces:
            if face.dim == 0 or not self.newton.meets(f_k, face):
                continue
            m_face = 1 + sum(1 for prior in priors if self.newton.meets(prior, face))
            if face.dim < m_face:
                excluded.append(face.label)
            else:
                included.append((face, m_face))
        if strict:
            self._require_known(eu, [face for face, _ in included])

        def term(item: tuple[Face, int]) -> tuple[FaceTerm, Expr]:
            face, m_face = item
            data = self.newton.product_polygon([*priors, f_k], cone, face)
            facets = []
            for facet in data.facets:
                d = facet.summands[-1].level
                k = self.k_coefficient(facet, face)
                facets.append(FacetTerm(normal=facet.normal, level=facet.level, vertices=facet.vertices, d=d, k=k))
            weight = sum((facet.d or 0) * (facet.k or 0) for facet in facets)
            return self._face_term(face, (-1) ** (face.dim - m_face), weight, eu, facets, m_face)

        functions = [prior.name for prior in priors] + [f_k.name]
        return self._assemble("complete-intersection", functions, eu, self.map_faces(term, included), excluded)

    def brasselet_complete_intersection(
        self,
        priors: Sequence[ToricFunction],
        f_k: ToricFunction,
        cone: Cone,
        faces: Sequence[Face],
        eu: EuTable,
        strict: bool = True,
        hypotheses: Sequence[str] = (),
    ) -> InvariantReport:
        """B_{f_k, X^{priors}}(0) from the d * K terms of the product polygons."""
        table, total = self._complete_intersection_table(priors, f_k, cone, faces, eu, strict)
        logger.info(f"complete-intersection Brasselet number of {f_k.name}: {total}")
        notes = ["the tuple of functions is assumed non-degenerate (asserted, not verified)"]
        if table.excluded_faces:
            notes.append(f"faces with dim < m excluded: {', '.join(table.excluded_faces)}")
        return InvariantReport(
            kind="brasselet-ci",
            functions=table.functions,
            tables=[table],
            value=table.total,
            value_expression=table.total_expression,
            hypotheses=list(hypotheses),
            notes=notes,
        )

    # Morse counts
    def morse_count(
        self,
        f: ToricFunction,
        g: ToricFunction,
        cone: Cone,
        faces: Sequence[Face],
        eu_x: EuTable,
        eu_xg: EuTable,
        mode: Optional[MorseMode] = None,
        refined: Sequence[RefinedStratum] = (),
        hypotheses: Sequence[str] = (),
    ) -> InvariantReport:
        """Number m of stratified Morse points of a partial morsefication of f on X^g.

        m = (-1)^(d-1) [B_{f,X}(0) - B_{f,X^g}(0) - sum of corrections]. Unknown Euler
        obstructions stay symbolic and the report carries the resulting linear relation.
        """
        shared = [face.label for face in faces if face.dim > 0 and not self.newton.meets(f, face)
                  and not self.newton.meets(g, face)]
        if shared:
            raise HypothesisViolation(f"{f.name} and {g.name} share critical orbits: {', '.join(shared)}")
        if mode is None:
            mode = MorseMode.REFINED if refined else MorseMode.LINEAR_FORM if f.generic_linear else MorseMode.ORBIT
        if mode == MorseMode.REFINED and not refined:
            raise HypothesisViolation("refined-strata mode needs refined_strata in the problem file")

        critical = self.critical_orbits(g, cone, faces)
        tables: list[BrasseletTable] = []
        notes = list(ASSUMED_HYPOTHESES)
        match mode:
            case MorseMode.LINEAR_FORM:
                origin = self._origin(faces)
                t_x, b_x = self._assemble("hypersurface", [f.name], eu_x, [self._face_term(origin, 1, 1, eu_x, [])])
                t_xg, b_xg = self._assemble(
                    "complete-intersection", [g.name, f.name], eu_xg, [self._face_term(origin, 1, 1, eu_xg, [])]
                )
                tables = [t_x, t_xg]
                notes.append(f"{f.name} is a generic linear form: B_{{f,X}}(0) = Eu_X(0), B_{{f,X^g}}(0) = Eu_Xg(0)")
            case _:
                t_x, b_x = self._hypersurface_table(f, cone, faces, eu_x, strict=False)
                t_xg, b_xg = self._complete_intersection_table([g], f, cone, faces, eu_xg, strict=False)
                tables = [t_x, t_xg]

        corrections: list[CorrectionTerm] = []
        correction_sum: Expr = Integer(0)
        match mode:
            case MorseMode.REFINED:
                notes.append("corrections use Eu_X(w) - Eu_Xg(w) at the supplied refined strata")
                for stratum in refined:
                    contribution = Integer(stratum.chi * (stratum.eu_x - stratum.eu_xg))
                    correction_sum += contribution
                    corrections.append(
                        CorrectionTerm(
                            stratum=stratum.label,
                            chi=stratum.chi,
                            eu_x=stratum.eu_x,
                            eu_xg=stratum.eu_xg,
                            contribution=str(contribution),
                        )
                    )
            case _:
                notes.append("corrections use Eu_X and Eu_Xg along T_Delta cap X^g on the critical orbits of g")
                chis = self.map_faces(lambda face: self.chi_orbit(f, cone, face), critical)
                for face, chi in zip(critical, chis):
                    eu_ambient = self._eu_value(eu_x, face)
                    eu_cut = self._eu_value(eu_xg, face)
                    contribution = expand(chi * (eu_ambient - eu_cut))
                    correction_sum += contribution
                    corrections.append(
                        CorrectionTerm(
                            stratum=face.label,
                            chi=chi,
                            eu_x=_format_value(eu_ambient),
                            eu_xg=_format_value(eu_cut),
                            contribution=str(contribution),
                        )
                    )

        d = cone.ambient_rank
        m = expand((-1) ** (d - 1) * (b_x - b_xg - correction_sum))
        relation = self.render_relation(m, faces) if m.free_symbols else None
        logger.info(f"Morse count for {f.name} on X^{g.name} ({mode.value}): m = {m}")
        return InvariantReport(
            kind="morse",
            functions=[f.name, g.name],
            mode=mode.value,
            tables=tables,
            critical_orbits=[face.label for face in critical],
            corrections=corrections,
            value=_format_value(m),
            value_expression=f"m = {m}",
            relation=relation,
            hypotheses=list(hypotheses),
            notes=notes,
        )

    def milnor_cn_relation(
        self,
        g: ToricFunction,
        cone: Cone,
        faces: Sequence[Face],
        eu_xg: EuTable,
        mode: Optional[MilnorMode] = None,
        hypotheses: Sequence[str] = (),
    ) -> InvariantReport:
        """Morse count of a generic linear form on {g = 0} in C^n.

        Eu_Xg(0) + sum (-1)^dim Eu_Xg(T_Delta) = (-1)^n m + sum (-1)^dim + 1, both sums over
        the critical orbits of g.
        """
        if not self.cones.is_standard_octant(cone):
            raise HypothesisViolation("milnor-cn needs the standard first-octant cone (X = C^n)")
        n = cone.ambient_rank
        origin = self._origin(faces)
        critical = self.critical_orbits(g, cone, faces)

        unknown = [face.label for face in [origin, *critical] if self._eu_value(eu_xg, face).free_symbols]
        if mode is None:
            mode = MilnorMode.RELATION if unknown else MilnorMode.SOLVE
        if mode == MilnorMode.SOLVE and unknown:
            raise MissingEulerObstruction(eu_xg.variety_label.value, unknown)

        left = self._eu_value(eu_xg, origin)
        constant = 1
        corrections = []
        for face in critical:
            sign = (-1) ** face.dim
            eu = self._eu_value(eu_xg, face)
            left += sign * eu
            constant += sign
            corrections.append(
                CorrectionTerm(
                    stratum=face.label, chi=sign, eu_xg=_format_value(eu), contribution=str(expand(sign * eu))
                )
            )
        m = expand((-1) ** n * (left - constant))
        relation = self.render_relation(m, faces) if mode == MilnorMode.RELATION else None
        logger.info(f"milnor-cn for {g.name} ({mode.value}): m = {m}")
        return InvariantReport(
            kind="milnor-cn",
            functions=[g.name],
            mode=mode.value,
            critical_orbits=[face.label for face in critical],
            corrections=corrections,
            value=_format_value(m),
            value_expression=f"m = {m}",
            relation=relation,
            hypotheses=list(hypotheses),
            notes=ASSUMED_HYPOTHESES[:1],
        )

    # Relations
    def _symbol_key(self, name: str, faces: Sequence[Face]) -> tuple[int, int, tuple[int, ...]]:
        variety = name[len("Eu_") : name.index("(")]
        face_id = parse_face_label(name[name.index("(") + 1 : -1])
        face = self.cones.find_face(list(faces), face_id)
        return (0 if variety == VarietyLabel.AMBIENT.value else 1, face.dim if face else 0, face_id)

    def render_relation(self, m: Expr, faces: Sequence[Face]) -> str:
        """Write m = c0 + sum c_i E_i as `sum c_i E_i = m - c0`, leading coefficient positive."""
        symbols = sorted(m.free_symbols, key=lambda s: self._symbol_key(s.name, faces))
        if not symbols:
            return f"m = {m}"
        coefficients = [int(m.coeff(s)) for s in symbols]
        constant = int(m.subs({s: 0 for s in symbols}))
        flip = 1 if coefficients[0] > 0 else -1

        parts = []
        for s, c in zip(symbols, coefficients):
            c *= flip
            if c == 0:
                continue
            body = s.name if abs(c) == 1 else f"{abs(c)}*{s.name}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        right = "m" if flip == 1 else "-m"
        rest = -flip * constant
        if rest > 0:
            right += f" + {rest}"
        elif rest < 0:
            right += f" - {-rest}"
        return f"{' '.join(parts)} = {right}"
