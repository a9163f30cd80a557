import itertools
import logging
from typing import Optional, Sequence

from app.errors import HypothesisViolation
from app.models import (
    Cone,
    Face,
    IntMatrix,
    IntVector,
    LatticePolytope,
    NewtonFacet,
    RestrictedNewtonData,
    SummandFace,
    SupportingFace,
    Term,
    ToricFunction,
)
from app.services.cone_service import ConeService
from app.services.lattice_service import LatticeService, dot
from app.services.polytope_service import PolytopeService

logger = logging.getLogger(__name__)


class NewtonService:
    """Service for Newton polygons of toric functions restricted to faces of the dual cone.

    Polygons are never materialized: Gamma_+(f) cap Delta is conv(supp f cap Delta) + Delta,
    handled in coordinates of the face lattice.
    """

    def __init__(self):
        self.lattice = LatticeService()
        self.cones = ConeService()
        self.polytopes = PolytopeService()

    def meets(self, fn: ToricFunction, face: Face) -> bool:
        """True iff Gamma_+(fn) meets the face, i.e. some exponent lies on it."""
        return any(self._on_face(face, v) for v in fn.support)

    def _on_face(self, face: Face, vector: Sequence[int]) -> bool:
        if face.dim == 0:
            return not any(vector)
        return all(dot(n, vector) == 0 for n in face.defining_normals)

    def local_support(self, fn: ToricFunction, face: Face) -> list[IntVector]:
        chart = self.lattice.chart(face.span_basis)
        return sorted(chart.to_local(v) for v in fn.support if self._on_face(face, v))

    def _require_meets(self, fn: ToricFunction, face: Face) -> None:
        if not self.meets(fn, face):
            raise HypothesisViolation(f"function's polygon misses this face ({fn.name} on {face.label})")

    def polyhedron_inequalities(
        self, points: Sequence[Sequence[int]], rays: Sequence[Sequence[int]]
    ) -> list[IntVector]:
        """Every facet inequality (a0, a), a0 + <a, y> >= 0, of conv(points) + cone(rays).

        The rays must span the space. The trivial inequality (1, 0, ..., 0) of the face at
        infinity is left out.
        """
        rank = len(rays[0]) + 1
        rows = [(1, *y) for y in points] + [(0, *r) for r in rays]
        normals = self.cones.facet_normals(rows, rank)
        return [n for n in normals if any(n[1:])]

    def _compact_facets(
        self, points: Sequence[IntVector], rays: Sequence[IntVector]
    ) -> list[tuple[IntVector, int, list[IntVector]]]:
        """(normal, level, tight points) for every compact facet of conv(points) + cone(rays)."""
        facets = []
        for a in self.polyhedron_inequalities(points, rays):
            direction = a[1:]
            if not all(dot(direction, r) > 0 for r in rays):
                continue
            normal = self.lattice.primitive_vector(direction)
            level = min(dot(normal, y) for y in points)
            tight = [y for y in points if dot(normal, y) == level]
            facets.append((normal, level, tight))
        facets.sort(key=lambda item: (item[0], item[1]))
        return facets

    def newton_restriction(self, fn: ToricFunction, cone: Cone, face: Face) -> RestrictedNewtonData:
        """Compact (dim Delta - 1)-dimensional faces of Gamma_+(fn) cap Delta with their primitive inner normals."""
        return self.product_polygon([fn], cone, face)

    def product_polygon(self, fns: Sequence[ToricFunction], cone: Cone, face: Face) -> RestrictedNewtonData:
        """Compact facets of Gamma_+(f_Delta) cap Delta for f_Delta = (product of the meeting priors) * f_k.

        `fns` lists the priors followed by f_k. Each facet carries its Minkowski summands, one
        supporting face per function in I(Delta) and f_k.
        """
        *priors, last = fns
        self._require_meets(last, face)
        involved = [fn for fn in priors if self.meets(fn, face)] + [last]
        chart = self.lattice.chart(face.span_basis)
        supports = [self.local_support(fn, face) for fn in involved]
        rays = self.cones.local_generators(cone, face)

        summed = sorted({tuple(map(sum, zip(*combo))) for combo in itertools.product(*supports)})
        facets = []
        for normal, level, tight in self._compact_facets(summed, rays):
            hull = self.polytopes.convex_hull(tight)
            summands = []
            for fn, support in zip(involved, supports):
                summand_level = min(dot(normal, y) for y in support)
                minimizers = [y for y in support if dot(normal, y) == summand_level]
                summands.append(
                    SummandFace(
                        function=fn.name,
                        vertices=self.polytopes.convex_hull(minimizers).vertices,
                        level=summand_level,
                    )
                )
            facets.append(
                NewtonFacet(
                    vertices=hull.vertices,
                    ambient_vertices=[chart.to_ambient(v) for v in hull.vertices],
                    normal=normal,
                    level=level,
                    summands=summands,
                )
            )
        logger.debug(f"{face.label}: {len(facets)} compact facets for {[fn.name for fn in involved]}")
        return RestrictedNewtonData(
            face_id=face.id, face_dim=face.dim, functions=[fn.name for fn in involved], facets=facets
        )

    def cone_over_facet(self, facet: LatticePolytope, face_lattice: IntMatrix) -> LatticePolytope:
        """conv(facet cup {0}) with reference lattice face_lattice."""
        if self.lattice.rank(facet.vertices) != facet.affine_dim + 1:
            raise HypothesisViolation("0 lies in the affine hull of the facet; the cone over it is degenerate")
        origin = tuple(0 for _ in facet.vertices[0])
        return self.polytopes.convex_hull([*facet.vertices, origin], face_lattice)

    def supporting_face(self, fn: ToricFunction, cone: Cone, face: Face, u: Sequence[int]) -> SupportingFace:
        """Minimizing face of <u, .> on Gamma_+(fn) cap Delta, and the u-part of fn."""
        self._require_meets(fn, face)
        if not self.cones.in_polar(cone, face, u):
            raise HypothesisViolation(f"functional {tuple(u)} is not in the polar cone of {face.label}")
        chart = self.lattice.chart(face.span_basis)
        support = self.local_support(fn, face)
        level = min(dot(u, y) for y in support)
        minimizers = {chart.to_ambient(y) for y in support if dot(u, y) == level}
        recession = [r for r in self.cones.local_generators(cone, face) if dot(u, r) == 0]
        terms = [term for term in fn.terms if tuple(term.exponent) in minimizers]
        u_part = ToricFunction(
            name=f"{fn.name}^({','.join(str(c) for c in u)})",
            terms=sorted(terms, key=lambda term: term.exponent),
        )
        return SupportingFace(
            face_id=face.id,
            normal=tuple(u),
            level=level,
            polytope=self.polytopes.convex_hull(sorted(minimizers)),
            recession_rays=recession,
            u_part=u_part,
        )

    def d_min(self, fn: ToricFunction, cone: Cone, face: Face, u: Sequence[int]) -> int:
        """Minimum of <u, .> over Gamma_+(fn) cap Delta, for u in the interior of the polar cone."""
        self._require_meets(fn, face)
        if not self.cones.in_polar_interior(cone, face, u):
            raise HypothesisViolation(f"functional {tuple(u)} is not in the interior of the polar of {face.label}")
        return min(dot(u, y) for y in self.local_support(fn, face))

    def generic_linear_form(
        self, cone: Cone, generators: Optional[Sequence[Sequence[int]]] = None, name: str = "l"
    ) -> ToricFunction:
        """A linear form supported on semigroup generators (the Hilbert basis when none are given)."""
        support = [tuple(g) for g in generators] if generators else self.cones.hilbert_basis(cone)
        for g in support:
            if not any(g):
                raise HypothesisViolation("function must vanish at the fixed point; semigroup generator is 0")
            if not self.cones.contains(cone, g):
                raise HypothesisViolation(f"semigroup generator {g} is outside the dual cone")
        terms = [Term(exponent=g, coefficient="1") for g in sorted(set(support))]
        return ToricFunction(name=name, terms=terms, generic_linear=True)
