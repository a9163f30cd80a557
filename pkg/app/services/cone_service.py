import itertools
import logging
from fractions import Fraction
from typing import Optional, Sequence

from sympy import Matrix

from app.errors import HypothesisViolation
from app.models import Cone, Face, IntVector, PolarCone, parse_face_label
from app.services.lattice_service import LatticeService, dot

logger = logging.getLogger(__name__)


class ConeService:
    """Service for rational polyhedral cones: duality, face lattices and orbit smoothness."""

    MAX_HILBERT_CANDIDATES = 200_000

    def __init__(self):
        self.lattice = LatticeService()

    def facet_normals(self, generators: Sequence[Sequence[int]], rank: int) -> list[IntVector]:
        """Extreme rays of {a : <a, g> >= 0 for every generator g} by double description.

        The generators must span R^rank. The result is the list of primitive inner facet
        normals of cone(generators), sorted.
        """
        rows = [tuple(g) for g in generators if any(g)]
        if self.lattice.rank(rows) < rank:
            raise HypothesisViolation("generators do not span a full-dimensional cone")

        basis: list[int] = []
        for index, row in enumerate(rows):
            if self.lattice.rank([rows[i] for i in basis] + [row]) > len(basis):
                basis.append(index)
            if len(basis) == rank:
                break
        inverse = Matrix([list(rows[i]) for i in basis]).inv()
        rays = [self._integral_column(inverse, j) for j in range(rank)]
        processed = list(basis)

        for index, row in enumerate(rows):
            if index in basis:
                continue
            values = [dot(row, ray) for ray in rays]
            if all(v >= 0 for v in values):
                processed.append(index)
                continue
            zero_sets = [frozenset(i for i in processed if dot(rows[i], ray) == 0) for ray in rays]
            positive = [i for i, v in enumerate(values) if v > 0]
            negative = [i for i, v in enumerate(values) if v < 0]
            kept = [rays[i] for i, v in enumerate(values) if v >= 0]
            for p in positive:
                for n in negative:
                    common = zero_sets[p] & zero_sets[n]
                    if len(common) < rank - 2:
                        continue
                    # combinatorial adjacency: no third ray is tight on all of `common`
                    if any(common <= zero_sets[r] for r in range(len(rays)) if r not in (p, n)):
                        continue
                    combined = [values[p] * b - values[n] * a for a, b in zip(rays[p], rays[n])]
                    kept.append(self.lattice.primitive_vector(combined))
            rays = list(dict.fromkeys(kept))
            processed.append(index)
        return sorted(set(rays))

    def _integral_column(self, inverse: Matrix, column: int) -> IntVector:
        entries = [inverse[i, column] for i in range(inverse.rows)]
        return self.lattice.integral_scaling([Fraction(int(e.p), int(e.q)) for e in entries])

    def contains_line(self, generators: Sequence[Sequence[int]], rank: int) -> bool:
        """True iff cone(generators) contains a line, checked inside the span of the generators."""
        vectors = [tuple(g) for g in generators if any(g)]
        if not vectors:
            return False
        span = self.lattice.sublattice_basis(vectors, rank)
        chart = self.lattice.chart(span)
        local = [chart.to_local(v) for v in vectors]
        return self.lattice.rank(self.facet_normals(local, len(span))) < len(span)

    def _check_pointed_full(self, generators: list[IntVector], rank: int, what: str) -> None:
        if self.contains_line(generators, rank):
            raise HypothesisViolation(f"{what} contains a line")
        if self.lattice.rank(generators) < rank:
            raise HypothesisViolation(f"{what} is not full-dimensional")

    def dual_cone(self, generators_of_sigma_check: Sequence[Sequence[int]], rank: int) -> Cone:
        """Build the cone from generators of the dual cone (in M); the rays of sigma (in N) are computed."""
        for g in generators_of_sigma_check:
            if len(g) != rank:
                raise HypothesisViolation(f"generator {tuple(g)} does not have length {rank}")
        primitive = [self.lattice.primitive_vector(g) for g in generators_of_sigma_check if any(g)]
        self._check_pointed_full(primitive, rank, "the dual cone")
        normals = self.facet_normals(primitive, rank)
        if self.lattice.rank(normals) < rank:
            raise HypothesisViolation("dual cone generators contain a line (sigma is not full-dimensional)")

        extreme: list[IntVector] = []
        for g in dict.fromkeys(primitive):
            tight = [n for n in normals if dot(n, g) == 0]
            if self.lattice.rank(tight) == rank - 1:
                extreme.append(g)
        logger.debug(f"dual cone: {len(extreme)} extreme generators, {len(normals)} rays of sigma")
        return Cone(ambient_rank=rank, generators=extreme, dual_generators=normals)

    def cone_from_sigma(self, sigma_generators: Sequence[Sequence[int]], rank: int) -> Cone:
        """Build the cone from generators of sigma (in N); the dual cone generators are sorted lexicographically."""
        for g in sigma_generators:
            if len(g) != rank:
                raise HypothesisViolation(f"generator {tuple(g)} does not have length {rank}")
        primitive = [self.lattice.primitive_vector(g) for g in sigma_generators if any(g)]
        self._check_pointed_full(primitive, rank, "sigma")
        return self.dual_cone(self.facet_normals(primitive, rank), rank)

    def enumerate_faces(self, cone: Cone) -> list[Face]:
        """Every face of the dual cone, from {0} to the whole cone, ordered by (dim, id)."""
        gens = cone.generators
        zero_sets = [frozenset(i for i, g in enumerate(gens) if dot(n, g) == 0) for n in cone.dual_generators]
        full = frozenset(range(len(gens)))
        seen = {full}
        frontier = [full]
        while frontier:
            current = frontier.pop()
            for zero_set in zero_sets:
                smaller = current & zero_set
                if smaller not in seen:
                    seen.add(smaller)
                    frontier.append(smaller)

        faces = []
        for members in seen:
            vectors = [gens[i] for i in sorted(members)]
            span_basis = self.lattice.sublattice_basis(vectors, cone.ambient_rank)
            normals = [n for n in cone.dual_generators if all(dot(n, v) == 0 for v in vectors)]
            faces.append(
                Face(
                    id=tuple(i + 1 for i in sorted(members)),
                    dim=len(span_basis),
                    span_basis=span_basis,
                    defining_normals=normals,
                )
            )
        faces.sort(key=lambda face: (face.dim, face.id))
        return faces

    def face_generators(self, cone: Cone, face: Face) -> list[IntVector]:
        return [cone.generators[i - 1] for i in face.id]

    def local_generators(self, cone: Cone, face: Face) -> list[IntVector]:
        """Generators of the face in coordinates of its span basis."""
        chart = self.lattice.chart(face.span_basis)
        return [chart.to_local(g) for g in self.face_generators(cone, face)]

    def polar_of_face(self, cone: Cone, face: Face) -> PolarCone:
        """Polar cone of the face inside the dual of its own lattice, in dual-basis coordinates."""
        if face.dim == 0:
            logger.debug("polar of the zero face is the trivial space")
            return PolarCone(face_id=face.id, dim=0, generators=[], trivial=True)
        generators = self.facet_normals(self.local_generators(cone, face), face.dim)
        return PolarCone(face_id=face.id, dim=face.dim, generators=generators)

    def in_polar_interior(self, cone: Cone, face: Face, u: Sequence[int]) -> bool:
        if len(u) != face.dim:
            raise HypothesisViolation(f"functional {tuple(u)} does not have length {face.dim} for {face.label}")
        return all(dot(u, g) > 0 for g in self.local_generators(cone, face))

    def in_polar(self, cone: Cone, face: Face, u: Sequence[int]) -> bool:
        if len(u) != face.dim:
            raise HypothesisViolation(f"functional {tuple(u)} does not have length {face.dim} for {face.label}")
        return all(dot(u, g) >= 0 for g in self.local_generators(cone, face))

    def smooth_along_orbit(self, cone: Cone, face: Face) -> bool:
        """True iff the face of sigma dual to this face is generated by part of a Z-basis of N."""
        tau = face.defining_normals
        if not tau:
            return True
        if self.lattice.rank(tau) != len(tau):
            return False
        return all(d == 1 for d in self.lattice.elementary_divisors(tuple(tau)))

    def is_standard_octant(self, cone: Cone) -> bool:
        rank = cone.ambient_rank
        units = {tuple(1 if i == j else 0 for j in range(rank)) for i in range(rank)}
        return len(cone.generators) == rank and set(cone.generators) == units

    def contains(self, cone: Cone, vector: Sequence[int]) -> bool:
        return all(dot(n, vector) >= 0 for n in cone.dual_generators)

    def hilbert_basis(self, cone: Cone) -> list[IntVector]:
        """Minimal generating set of the semigroup of lattice points in the dual cone.

        Every irreducible element lies in the zonotope spanned by the extreme rays, so
        candidates are the cone's lattice points in the zonotope's bounding box.
        """
        rank = cone.ambient_rank
        low = [sum(min(0, g[k]) for g in cone.generators) for k in range(rank)]
        high = [sum(max(0, g[k]) for g in cone.generators) for k in range(rank)]
        size = 1
        for lo, hi in zip(low, high):
            size *= hi - lo + 1
        if size > self.MAX_HILBERT_CANDIDATES:
            raise HypothesisViolation(
                f"Hilbert basis search box has {size} points; supply semigroup_generators instead"
            )
        candidates = [
            point
            for point in itertools.product(*(range(lo, hi + 1) for lo, hi in zip(low, high)))
            if any(point) and self.contains(cone, point)
        ]
        basis = []
        for x in candidates:
            reducible = any(
                y != x and self.contains(cone, tuple(a - b for a, b in zip(x, y))) for y in candidates
            )
            if not reducible:
                basis.append(x)
        return sorted(basis)

    def face_by_label(self, faces: list[Face], label: str) -> Face:
        try:
            face_id = parse_face_label(label)
        except ValueError as e:
            logger.error(f"Bad face label: {e}")
            raise HypothesisViolation(str(e)) from e
        face = self.find_face(faces, face_id)
        if face is None:
            raise HypothesisViolation(f"no face with label '{label}'")
        return face

    def find_face(self, faces: list[Face], face_id: IntVector) -> Optional[Face]:
        return next((face for face in faces if face.id == face_id), None)
