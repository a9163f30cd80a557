import itertools
import logging
from math import factorial
from typing import Sequence

from app.errors import HypothesisViolation
from app.models import Cone, EuTable, Face, LatticePolytope, OracleRow, ToricFunction
from app.services.cone_service import ConeService
from app.services.invariant_service import InvariantService
from app.services.newton_service import NewtonService
from app.services.polytope_service import PolytopeService

logger = logging.getLogger(__name__)


class OracleService:
    """Service for independent cross-checks: Ehrhart counting and the Kouchnirenko Milnor number."""

    def __init__(self, workers: int = 1):
        self.cones = ConeService()
        self.newton = NewtonService()
        self.polytopes = PolytopeService()
        self.invariants = InvariantService(workers)

    def volume_row(self, subject: str, polytope: LatticePolytope) -> OracleRow:
        computed = self.polytopes.normalized_volume(polytope)
        oracle = self.polytopes.ehrhart_volume_oracle(polytope)
        return OracleRow(check="volume-vs-ehrhart", subject=subject, computed=computed, oracle=oracle,
                         agree=computed == oracle)

    def volume_agreement(self, f: ToricFunction, cone: Cone, faces: Sequence[Face]) -> list[OracleRow]:
        """Triangulated against Ehrhart volumes for every cone over a compact facet of Gamma_+(f)."""
        rows = []
        for face in faces:
            if face.dim == 0 or not self.newton.meets(f, face):
                continue
            for facet in self.newton.newton_restriction(f, cone, face).facets:
                hull = self.polytopes.convex_hull(facet.ambient_vertices)
                polytope = self.newton.cone_over_facet(hull, face.span_basis)
                normal = ",".join(str(c) for c in facet.normal)
                rows.append(self.volume_row(f"{face.label} normal ({normal})", polytope))
        return rows

    def is_convenient(self, f: ToricFunction, rank: int) -> bool:
        """True iff the support meets every coordinate axis."""
        return all(any(v[i] > 0 and all(v[j] == 0 for j in range(rank) if j != i) for v in f.support)
                   for i in range(rank))

    def _lower_volume(self, support: list[tuple[int, ...]]) -> int:
        """Normalized volume of the region below the Newton boundary in the positive orthant."""
        k = len(support[0])
        top = max(max(v) for v in support) + 1
        corners = []
        for s in support:
            for subset in itertools.product((False, True), repeat=k):
                corners.append(tuple(top if lifted else c for c, lifted in zip(s, subset)))
        upper = self.polytopes.convex_hull(corners)
        return factorial(k) * top**k - self.polytopes.ehrhart_volume_oracle(upper)

    def kouchnirenko_milnor(self, f: ToricFunction, cone: Cone) -> int:
        """Milnor number of a convenient f on C^n: sum over coordinate subspaces of signed lower volumes."""
        if not self.cones.is_standard_octant(cone):
            raise HypothesisViolation("the Kouchnirenko oracle needs the standard first-octant cone")
        n = cone.ambient_rank
        if not self.is_convenient(f, n):
            raise HypothesisViolation(f"{f.name} is not convenient: its support misses a coordinate axis")
        mu = (-1) ** n
        for size in range(1, n + 1):
            for coordinates in itertools.combinations(range(n), size):
                restricted = [
                    tuple(v[i] for i in coordinates)
                    for v in f.support
                    if all(v[j] == 0 for j in range(n) if j not in coordinates)
                ]
                mu += (-1) ** (n - size) * self._lower_volume(restricted)
        logger.debug(f"Kouchnirenko Milnor number of {f.name}: {mu}")
        return mu

    def brasselet_row(self, f: ToricFunction, cone: Cone, faces: Sequence[Face], eu: EuTable) -> OracleRow:
        """B_{f,C^n}(0) against 1 + (-1)^(n-1) mu."""
        report = self.invariants.brasselet_hypersurface(f, cone, faces, eu)
        mu = self.kouchnirenko_milnor(f, cone)
        expected = 1 + (-1) ** (cone.ambient_rank - 1) * mu
        computed = report.value if report.value is not None else 0
        return OracleRow(check="brasselet-vs-kouchnirenko", subject=f.name, computed=computed, oracle=expected,
                         agree=report.value == expected)

    def run_all(self, f: ToricFunction, cone: Cone, faces: Sequence[Face], eu: EuTable) -> list[OracleRow]:
        rows = self.volume_agreement(f, cone, faces)
        if self.cones.is_standard_octant(cone) and self.is_convenient(f, cone.ambient_rank):
            rows.append(self.brasselet_row(f, cone, faces, eu))
        else:
            logger.info(f"Kouchnirenko check skipped for {f.name}: needs a convenient function on C^n")
        return rows
