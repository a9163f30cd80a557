import itertools
import logging
import os
from math import comb, factorial
from typing import Optional, Sequence

from sympy import Poly, Symbol, interpolate

from app.errors import HypothesisViolation
from app.models import IntMatrix, IntVector, LatticePolytope
from app.services.cone_service import ConeService
from app.services.lattice_service import LatticeService, dot

logger = logging.getLogger(__name__)


def _sub(a: Sequence[int], b: Sequence[int]) -> IntVector:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def _add(a: Sequence[int], b: Sequence[int]) -> IntVector:
    return tuple(x + y for x, y in zip(a, b, strict=True))


class PolytopeService:
    """Service for lattice polytopes: convex hulls, normalized and mixed volumes, Minkowski sums."""

    MAX_DILATION_POINTS = int(os.environ.get("TORIC_MAX_DILATION_POINTS", "2000000"))

    def __init__(self):
        self.lattice = LatticeService()
        self.cones = ConeService()

    def convex_hull(self, points: Sequence[Sequence[int]], lattice: Optional[IntMatrix] = None) -> LatticePolytope:
        """Vertices of conv(points).

        The reference lattice is `lattice` when given, otherwise the saturated lattice of
        directions of the affine hull.
        """
        if not points:
            raise HypothesisViolation("convex hull of an empty point set")
        unique = sorted({tuple(p) for p in points})
        rank = len(unique[0])
        if any(len(p) != rank for p in unique):
            raise HypothesisViolation("points of a polytope must share one ambient rank")

        base = unique[0]
        directions = self.lattice.sublattice_basis([_sub(p, base) for p in unique], rank)
        reference = directions if lattice is None else tuple(tuple(row) for row in lattice)
        affine_dim = len(directions)
        if affine_dim == 0:
            return LatticePolytope(vertices=[base], reference_lattice=reference, affine_dim=0)

        chart = self.lattice.chart(directions)
        local = [chart.to_local(_sub(p, base)) for p in unique]
        normals = self._homogenized_normals(local)
        vertices = []
        for p, y in zip(unique, local):
            tight = [n for n in normals if n[0] + dot(n[1:], y) == 0]
            if self.lattice.rank(tight) == affine_dim:
                vertices.append(p)
        logger.debug(f"hull of {len(unique)} points: {len(vertices)} vertices, affine dim {affine_dim}")
        return LatticePolytope(vertices=vertices, reference_lattice=reference, affine_dim=affine_dim)

    def _homogenized_normals(self, local_points: Sequence[Sequence[int]]) -> list[IntVector]:
        """Facet inequalities (a0, a) with a0 + <a, y> >= 0 of a full-dimensional local point set."""
        rank = len(local_points[0]) + 1
        return self.cones.facet_normals([(1, *y) for y in local_points], rank)

    def direction_lattice(self, polytope: LatticePolytope) -> IntMatrix:
        base = polytope.vertices[0]
        rank = len(base)
        return self.lattice.sublattice_basis([_sub(v, base) for v in polytope.vertices], rank)

    def _local_vertices(self, polytope: LatticePolytope) -> list[IntVector]:
        """Vertices in coordinates of the reference lattice, translated so the first vertex is 0."""
        if polytope.affine_dim != len(polytope.reference_lattice):
            raise HypothesisViolation(
                f"polytope of affine dimension {polytope.affine_dim} is degenerate in a reference lattice "
                f"of rank {len(polytope.reference_lattice)}"
            )
        base = polytope.vertices[0]
        if polytope.reference_lattice and len(polytope.reference_lattice[0]) != len(base):
            raise HypothesisViolation("reference lattice and vertices have different ambient ranks")
        chart = self.lattice.chart(polytope.reference_lattice)
        return [chart.to_local(_sub(v, base)) for v in polytope.vertices]

    def normalized_volume(self, polytope: LatticePolytope) -> int:
        """n! times the Euclidean volume in reference-lattice coordinates, by a placing triangulation."""
        local = self._local_vertices(polytope)
        if polytope.affine_dim == 0:
            return 1
        return self._placing_volume(local)

    def _placing_volume(self, points: list[IntVector]) -> int:
        n = len(points[0])
        simplex = [0]
        for i in range(1, len(points)):
            if self.lattice.rank([_sub(points[j], points[0]) for j in simplex[1:] + [i]]) == len(simplex):
                simplex.append(i)
            if len(simplex) == n + 1:
                break
        if len(simplex) < n + 1:
            raise HypothesisViolation("polytope is not full-dimensional in its reference lattice")

        # (n + 1) times the centroid of the first simplex stays interior to every later hull
        interior = tuple(sum(points[i][k] for i in simplex) for k in range(n))

        def orient(facet: tuple[int, ...], q: Sequence[int], scale: int = 1) -> int:
            origin = tuple(scale * c for c in points[facet[0]])
            rows = [tuple(scale * c for c in _sub(points[i], points[facet[0]])) for i in facet[1:]]
            return self.lattice.determinant(rows + [_sub(q, origin)])

        volume = abs(self.lattice.determinant([_sub(points[i], points[simplex[0]]) for i in simplex[1:]]))
        facets = [tuple(f) for f in itertools.combinations(simplex, n)]
        inside = {f: orient(f, interior, n + 1) for f in facets}

        for index in range(len(points)):
            if index in simplex:
                continue
            x = points[index]
            visible = []
            for f in facets:
                side = orient(f, x)
                if side != 0 and (side > 0) != (inside[f] > 0):
                    visible.append((f, side))
            if not visible:
                continue
            ridges: dict[tuple[int, ...], int] = {}
            for f, side in visible:
                volume += abs(side)
                for ridge in itertools.combinations(f, n - 1):
                    ridges[ridge] = ridges.get(ridge, 0) + 1
            hidden = {f for f, _ in visible}
            facets = [f for f in facets if f not in hidden]
            for ridge, count in ridges.items():
                if count == 1:
                    facet = (*ridge, index)
                    facets.append(facet)
                    inside[facet] = orient(facet, interior, n + 1)
        return volume

    def ehrhart_volume_oracle(self, polytope: LatticePolytope) -> int:
        """Normalized volume read off the leading coefficient of the Ehrhart polynomial."""
        local = self._local_vertices(polytope)
        n = polytope.affine_dim
        if n == 0:
            return 1
        normals = self._homogenized_normals(local)
        low = [min(y[k] for y in local) for k in range(n)]
        high = [max(y[k] for y in local) for k in range(n)]
        box = 1
        for lo, hi in zip(low, high):
            box *= n * (hi - lo) + 1
        if box > self.MAX_DILATION_POINTS:
            raise HypothesisViolation(f"dilation box of {box} points exceeds TORIC_MAX_DILATION_POINTS")

        counts = []
        for t in range(n + 1):
            ranges = [range(t * lo, t * hi + 1) for lo, hi in zip(low, high)]
            counts.append(
                sum(1 for y in itertools.product(*ranges) if all(t * a[0] + dot(a[1:], y) >= 0 for a in normals))
            )
        t = Symbol("t")
        ehrhart = Poly(interpolate(list(zip(range(n + 1), counts)), t), t)
        if ehrhart.degree() != n:
            raise HypothesisViolation(f"Ehrhart polynomial has degree {ehrhart.degree()}, expected {n}")
        leading = ehrhart.LC() * factorial(n)
        if not leading.is_Integer:
            raise HypothesisViolation(f"Ehrhart leading term gives non-integral volume {leading}")
        logger.debug(f"Ehrhart counts {counts} give normalized volume {leading}")
        return int(leading)

    def minkowski_sum(self, p: LatticePolytope, q: LatticePolytope) -> LatticePolytope:
        if len(p.vertices[0]) != len(q.vertices[0]):
            raise HypothesisViolation("Minkowski summands live in lattices of different rank")
        return self.convex_hull([_add(a, b) for a in p.vertices for b in q.vertices])

    def scale(self, polytope: LatticePolytope, factor: int) -> LatticePolytope:
        if factor == 0:
            origin = tuple(0 for _ in polytope.vertices[0])
            return LatticePolytope(vertices=[origin], reference_lattice=(), affine_dim=0)
        return self.convex_hull([tuple(factor * c for c in v) for v in polytope.vertices])

    def mixed_volume(self, polytopes: Sequence[tuple[LatticePolytope, int]], lattice: IntMatrix) -> int:
        """Normalized mixed volume MV(P_1^(m_1), ..., P_r^(m_r)) with respect to `lattice`.

        Inclusion-exclusion over Minkowski sums of dilates; every summand is first translated
        to one of its vertices and rewritten in lattice coordinates.
        """
        n = len(lattice)
        total = sum(m for _, m in polytopes)
        if any(m < 0 for _, m in polytopes):
            raise HypothesisViolation("mixed volume multiplicities must be nonnegative")
        if total != n:
            raise HypothesisViolation(f"total multiplicity {total} does not match lattice rank {n}")
        if n == 0:
            return 1

        chart = self.lattice.chart(lattice)
        identity = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        local = []
        for polytope, multiplicity in polytopes:
            if multiplicity == 0:
                continue
            base = polytope.vertices[0]
            points = [chart.to_local(_sub(v, base)) for v in polytope.vertices]
            local.append((self.convex_hull(points, identity), multiplicity))

        signed = 0
        for counts in itertools.product(*(range(m + 1) for _, m in local)):
            if not any(counts):
                continue
            weight = (-1) ** (n - sum(counts))
            for (_, m), s in zip(local, counts):
                weight *= comb(m, s)
            summed: Optional[LatticePolytope] = None
            for (polytope, _), s in zip(local, counts):
                if s == 0:
                    continue
                dilate = self.scale(polytope, s)
                summed = dilate if summed is None else self.minkowski_sum(summed, dilate)
            if summed is None or summed.affine_dim < n:
                continue
            summed = summed.model_copy(update={"reference_lattice": identity})
            signed += weight * self.normalized_volume(summed)

        if signed % factorial(n) != 0:
            raise HypothesisViolation("mixed volume inclusion-exclusion did not produce an integer")
        return signed // factorial(n)

    def contains(self, polytope: LatticePolytope, point: Sequence[int]) -> bool:
        """Exact membership of a lattice point in the polytope."""
        point = tuple(point)
        base = polytope.vertices[0]
        if polytope.affine_dim == 0:
            return point == base
        directions = self.direction_lattice(polytope)
        chart = self.lattice.chart(directions)
        coords = chart.to_local_rational(_sub(point, base))
        if coords is None:
            return False
        local = [chart.to_local(_sub(v, base)) for v in polytope.vertices]
        return all(a[0] + sum(c * y for c, y in zip(a[1:], coords)) >= 0 for a in self._homogenized_normals(local))
