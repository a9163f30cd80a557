import itertools
import logging
from typing import Any, Sequence

from app.errors import HypothesisViolation
from app.models import (
    Cone,
    ConstancyReport,
    ConstancyWitness,
    Deformation,
    EuTable,
    Face,
    FamilyReport,
    InvariantReport,
    LatticePolytope,
    MorseMode,
    Term,
    ToricFunction,
    Verdict,
)
from app.services.cone_service import ConeService
from app.services.invariant_service import InvariantService
from app.services.lattice_service import LatticeService, dot
from app.services.newton_service import NewtonService
from app.services.polytope_service import PolytopeService

logger = logging.getLogger(__name__)


class FamilyService:
    """Service for deformations f_t = f + sum theta_i(t) h_i: Newton polygon constancy and member-independent m."""

    def __init__(self, workers: int = 1):
        self.cones = ConeService()
        self.lattice = LatticeService()
        self.newton = NewtonService()
        self.polytopes = PolytopeService()
        self.invariants = InvariantService(workers)

    def newton_constancy_check(self, deformation: Deformation, cone: Cone, faces: Sequence[Face]) -> ConstancyReport:
        """PASS iff every perturbation exponent satisfies every facet inequality of Gamma_+(f)."""
        base = deformation.base
        inequalities = []
        for a in self.newton.polyhedron_inequalities(base.support, cone.generators):
            normal = self.lattice.primitive_vector(a[1:])
            inequalities.append((normal, min(dot(normal, y) for y in base.support)))
        witnesses = []
        checked = 0
        for h in deformation.perturbations:
            for point in h.support:
                for normal, level in inequalities:
                    checked += 1
                    pairing = dot(normal, point)
                    if pairing < level:
                        witnesses.append(
                            ConstancyWitness(function=h.name, point=point, normal=normal, level=level, pairing=pairing)
                        )
                        break
        verdict = Verdict.FAIL if witnesses else Verdict.PASS
        disjoint = self._facets_disjoint(deformation, cone, faces)
        logger.info(f"Newton constancy of {deformation.name}: {verdict.value} ({checked} inequalities)")
        return ConstancyReport(
            family=deformation.name,
            verdict=verdict,
            witnesses=witnesses,
            inequalities_checked=checked,
            facet_disjointness=disjoint,
        )

    def _facets_disjoint(self, deformation: Deformation, cone: Cone, faces: Sequence[Face]) -> bool:
        """Sufficient condition: compact top facets of Gamma_+(h_i) and Gamma_+(f) never meet on any face."""
        base = deformation.base
        for face in faces:
            if face.dim == 0 or not self.newton.meets(base, face):
                continue
            base_facets = [
                self.polytopes.convex_hull(facet.vertices)
                for facet in self.newton.newton_restriction(base, cone, face).facets
            ]
            for h in deformation.perturbations:
                if not self.newton.meets(h, face):
                    continue
                for facet in self.newton.newton_restriction(h, cone, face).facets:
                    gamma = self.polytopes.convex_hull(facet.vertices)
                    for beta in base_facets:
                        if self._polytopes_meet(gamma, beta):
                            return False
        return True

    def _polytopes_meet(self, p: LatticePolytope, q: LatticePolytope) -> bool:
        # P and Q meet iff 0 lies in P + (-Q)
        negated = self.polytopes.convex_hull([tuple(-c for c in v) for v in q.vertices])
        difference = self.polytopes.minkowski_sum(p, negated)
        return self.polytopes.contains(difference, tuple(0 for _ in p.vertices[0]))

    def members(self, deformation: Deformation) -> list[ToricFunction]:
        """Every member obtained by switching each perturbation on or off; the base comes first."""
        result = []
        count = len(deformation.perturbations)
        for mask in itertools.product((False, True), repeat=count):
            active = [h for h, on in zip(deformation.perturbations, mask) if on]
            terms = {tuple(term.exponent): term for term in deformation.base.terms}
            for h in active:
                for term in h.terms:
                    terms.setdefault(tuple(term.exponent), Term(exponent=term.exponent, coefficient=term.coefficient))
            name = deformation.base.name + "".join(f" + {deformation.parameter}*{h.name}" for h in active)
            result.append(
                ToricFunction(
                    name=name,
                    terms=[terms[key] for key in sorted(terms)],
                    generic_linear=deformation.base.generic_linear,
                )
            )
        return result

    def _fingerprint(self, report: InvariantReport) -> dict[str, Any]:
        data = report.model_dump(mode="json", exclude={"functions", "notes"})
        for table in data["tables"]:
            table.pop("functions", None)
        return data

    def family_invariant_report(
        self,
        f_family: Deformation,
        g_family: Deformation,
        cone: Cone,
        faces: Sequence[Face],
        eu_x: EuTable,
        eu_xg: EuTable,
        hypotheses: Sequence[str] = (),
    ) -> FamilyReport:
        """Certify that the Morse-count inputs and m are the same for every member of both families."""
        f_check = self.newton_constancy_check(f_family, cone, faces)
        g_check = self.newton_constancy_check(g_family, cone, faces)
        for check in (f_check, g_check):
            if check.verdict == Verdict.FAIL:
                witness = check.witnesses[0]
                raise HypothesisViolation(
                    f"Newton polygon of {check.family} is not constant: {witness.function} has exponent "
                    f"{witness.point} with <{witness.normal}, point> = {witness.pairing} < {witness.level}"
                )

        base_f = f_family.base
        mode = MorseMode.LINEAR_FORM if base_f.generic_linear else MorseMode.ORBIT
        reference = self.invariants.morse_count(
            base_f, g_family.base, cone, faces, eu_x, eu_xg, mode=mode, hypotheses=hypotheses
        )
        expected = self._fingerprint(reference)
        compared = 0
        identical = True
        for f_member in self.members(f_family):
            for g_member in self.members(g_family):
                report = self.invariants.morse_count(
                    f_member, g_member, cone, faces, eu_x, eu_xg, mode=mode, hypotheses=hypotheses
                )
                compared += 1
                if self._fingerprint(report) != expected:
                    logger.warning(f"member report differs: {f_member.name} on {g_member.name}")
                    identical = False

        echoed = list(hypotheses) + [
            f"{g_family.name} is admissible (asserted, not verified)",
            f"{g_family.name} is tractable with respect to {f_family.name} (asserted, not verified)",
        ]
        return FamilyReport(
            f_family=f_family.name,
            g_family=g_family.name,
            f_check=f_check,
            g_check=g_check,
            members_compared=compared,
            identical=identical,
            report=reference,
            m=reference.value,
            relation=reference.relation,
            hypotheses=echoed,
        )
