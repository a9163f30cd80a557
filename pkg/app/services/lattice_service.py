import logging
from fractions import Fraction
from math import gcd, lcm
from typing import Optional, Sequence

from sympy import ZZ, Matrix
from sympy.matrices.normalforms import invariant_factors, smith_normal_decomp

from app.errors import HypothesisViolation
from app.models import IntMatrix, IntVector

logger = logging.getLogger(__name__)


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v, strict=True))


def _identity(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        return -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _freeze(rows: list[list[int]]) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in rows)


class LatticeChart:
    """Coordinates of vectors in the rational span of a lattice basis.

    to_local solves y . basis = v exactly; to_ambient maps back.
    """

    def __init__(self, basis: IntMatrix):
        self.basis = basis
        self.rank = len(basis)
        self.ambient_rank = len(basis[0]) if basis else 0
        if self.rank == 0:
            self._pivots: list[int] = []
            self._inverse: list[list[Fraction]] = []
            return
        matrix = Matrix([list(row) for row in basis])
        _, pivots = matrix.rref()
        if len(pivots) != self.rank:
            raise HypothesisViolation("lattice basis vectors are linearly dependent")
        # basis rows restricted to the pivot columns form an invertible square matrix
        self._pivots = [int(p) for p in pivots]
        inverse = matrix.extract(list(range(self.rank)), self._pivots).inv()
        self._inverse = [
            [Fraction(int(inverse[i, j].p), int(inverse[i, j].q)) for j in range(self.rank)] for i in range(self.rank)
        ]

    def to_local_rational(self, vector: Sequence[int]) -> Optional[tuple[Fraction, ...]]:
        """Coordinates of vector in the basis, or None when it is outside the span."""
        if self.rank == 0:
            return () if not any(vector) else None
        picked = [vector[p] for p in self._pivots]
        coords = tuple(sum((picked[i] * self._inverse[i][j] for i in range(self.rank)), Fraction(0))
                       for j in range(self.rank))
        rebuilt = self.to_ambient_rational(coords)
        if any(rebuilt[i] != vector[i] for i in range(self.ambient_rank)):
            return None
        return coords

    def to_local(self, vector: Sequence[int]) -> IntVector:
        coords = self.to_local_rational(vector)
        if coords is None:
            raise HypothesisViolation(f"vector {tuple(vector)} is not in the span of the lattice")
        if any(c.denominator != 1 for c in coords):
            raise HypothesisViolation(f"vector {tuple(vector)} is not a point of the lattice")
        return tuple(int(c) for c in coords)

    def to_ambient_rational(self, coords: Sequence[Fraction | int]) -> tuple[Fraction, ...]:
        return tuple(sum((Fraction(coords[i]) * self.basis[i][k] for i in range(self.rank)), Fraction(0))
                     for k in range(self.ambient_rank))

    def to_ambient(self, coords: Sequence[int]) -> IntVector:
        return tuple(sum(coords[i] * self.basis[i][k] for i in range(self.rank)) for k in range(self.ambient_rank))


class LatticeService:
    """Service for exact integer linear algebra: normal forms, primitive vectors and saturated sublattices."""

    def hermite_normal_form(self, m: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
        """Row-style Hermite normal form.

        Returns (h, u) with u unimodular and u . m = h. Pivots of h are positive, entries
        above a pivot are reduced into [0, pivot) and zero rows come last.
        """
        rows = len(m)
        cols = len(m[0]) if rows else 0
        h = [list(row) for row in m]
        u = _identity(rows)
        pivot_row = 0
        for col in range(cols):
            if pivot_row == rows:
                break
            for i in range(pivot_row + 1, rows):
                b = h[i][col]
                if b == 0:
                    continue
                a = h[pivot_row][col]
                g, x, y = _extended_gcd(a, b)
                p, q = -b // g, a // g
                for target in (h, u):
                    top, bottom = target[pivot_row], target[i]
                    target[pivot_row] = [x * s + y * t for s, t in zip(top, bottom)]
                    target[i] = [p * s + q * t for s, t in zip(top, bottom)]
            pivot = h[pivot_row][col]
            if pivot == 0:
                continue
            if pivot < 0:
                h[pivot_row] = [-v for v in h[pivot_row]]
                u[pivot_row] = [-v for v in u[pivot_row]]
                pivot = -pivot
            for i in range(pivot_row):
                factor = h[i][col] // pivot
                if factor:
                    h[i] = [s - factor * t for s, t in zip(h[i], h[pivot_row])]
                    u[i] = [s - factor * t for s, t in zip(u[i], u[pivot_row])]
            pivot_row += 1
        return _freeze(h), _freeze(u)

    def smith_normal_form(self, m: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
        """Return (d, left, right) with left . m . right = d diagonal and d_1 | d_2 | ..."""
        rows = len(m)
        cols = len(m[0]) if rows else 0
        if rows == 0 or cols == 0:
            return _freeze([[0] * cols for _ in range(rows)]), _freeze(_identity(rows)), _freeze(_identity(cols))
        d, left, right = smith_normal_decomp(Matrix([list(row) for row in m]), domain=ZZ)
        d_rows = [[int(d[i, j]) for j in range(cols)] for i in range(rows)]
        left_rows = [[int(left[i, j]) for j in range(rows)] for i in range(rows)]
        for i in range(min(rows, cols)):
            if d_rows[i][i] < 0:
                d_rows[i][i] = -d_rows[i][i]
                left_rows[i] = [-v for v in left_rows[i]]
        right_rows = [[int(right[i, j]) for j in range(cols)] for i in range(cols)]
        return _freeze(d_rows), _freeze(left_rows), _freeze(right_rows)

    def elementary_divisors(self, m: IntMatrix) -> list[int]:
        rows = len(m)
        cols = len(m[0]) if rows else 0
        if rows == 0 or cols == 0:
            return []
        factors = [abs(int(f)) for f in invariant_factors(Matrix([list(row) for row in m]), domain=ZZ)]
        return factors + [0] * (min(rows, cols) - len(factors))

    def primitive_vector(self, v: Sequence[int]) -> IntVector:
        g = gcd(*v) if v else 0
        if g == 0:
            raise HypothesisViolation("the zero vector has no primitive direction")
        return tuple(c // g for c in v)

    def rank(self, vectors: Sequence[Sequence[int]]) -> int:
        nonzero = [list(v) for v in vectors if any(v)]
        if not nonzero:
            return 0
        return int(Matrix(nonzero).rank())

    def determinant(self, rows: Sequence[Sequence[int]]) -> int:
        if not rows:
            return 1
        return int(Matrix([list(r) for r in rows]).det(method="bareiss"))

    def integer_kernel(self, m: Sequence[Sequence[int]], ambient_rank: int) -> IntMatrix:
        """Basis of {x in Z^n : m . x = 0}; the kernel lattice is saturated by construction."""
        rows = [tuple(r) for r in m if any(r)]
        if not rows:
            return _freeze(_identity(ambient_rank))
        transposed = tuple(tuple(rows[i][k] for i in range(len(rows))) for k in range(ambient_rank))
        h, u = self.hermite_normal_form(transposed)
        kernel = [u[i] for i in range(ambient_rank) if not any(h[i])]
        if not kernel:
            return ()
        reduced, _ = self.hermite_normal_form(tuple(kernel))
        return tuple(row for row in reduced if any(row))

    def sublattice_basis(self, span_vectors: Sequence[Sequence[int]], ambient_rank: int) -> IntMatrix:
        """Basis of M cap (rational span of the inputs), in Hermite normal form."""
        vectors = [tuple(v) for v in span_vectors if any(v)]
        for v in vectors:
            if len(v) != ambient_rank:
                raise HypothesisViolation(f"vector {v} does not have length {ambient_rank}")
        if not vectors:
            return ()
        orthogonal = self.integer_kernel(vectors, ambient_rank)
        if not orthogonal:
            return _freeze(_identity(ambient_rank))
        return self.integer_kernel(orthogonal, ambient_rank)

    def chart(self, basis: IntMatrix) -> LatticeChart:
        return LatticeChart(basis)

    def integral_scaling(self, values: Sequence[Fraction]) -> IntVector:
        """Smallest positive multiple of a rational vector that is integral and primitive."""
        denominator = lcm(*(v.denominator for v in values)) if values else 1
        scaled = [int(v * denominator) for v in values]
        if not any(scaled):
            raise HypothesisViolation("the zero vector has no primitive direction")
        return self.primitive_vector(scaled)
