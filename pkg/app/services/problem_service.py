import json
import logging
import os
from fractions import Fraction
from pathlib import Path

from pydantic import ValidationError

from app.errors import HypothesisViolation, SchemaError
from app.models import (
    Cone,
    Deformation,
    FunctionSpec,
    ProblemContext,
    ProblemFile,
    Term,
    ToricFunction,
    parse_face_label,
)
from app.services.cone_service import ConeService
from app.services.newton_service import NewtonService

logger = logging.getLogger(__name__)


def _location(loc: tuple) -> str:
    parts = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(("." if parts else "") + str(item))
    return "".join(parts) or "(root)"


class ProblemService:
    """Service for reading, validating and materializing problem files."""

    MAX_RANK = int(os.environ.get("TORIC_MAX_RANK", "8"))
    VARIETY_KEYS = ("X", "Xg")

    def __init__(self):
        self.cones = ConeService()
        self.newton = NewtonService()

    def load(self, path: Path) -> ProblemFile:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Cannot read problem file {path}: {e}")
            raise SchemaError([f"{path}: cannot read file ({e.strerror})"]) from e
        return self.parse_problem(text)

    def parse_problem(self, text: str) -> ProblemFile:
        """Validated problem, or SchemaError carrying one message per offending location."""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            logger.error(f"Malformed problem file: {e}")
            raise SchemaError([f"line {e.lineno} column {e.colno}: {e.msg}"]) from e
        if not isinstance(data, dict):
            raise SchemaError(["(root): a problem file must be a JSON object"])

        try:
            problem = ProblemFile.model_validate(data)
        except ValidationError as e:
            logger.error(f"Problem file failed schema validation with {e.error_count()} errors")
            raise SchemaError([f"{_location(err['loc'])}: {err['msg']}" for err in e.errors()]) from e

        errors = self._structural_errors(problem)
        if errors:
            raise SchemaError(errors)
        try:
            cone = self._build_cone(problem)
        except HypothesisViolation as e:
            logger.error(f"Problem cone rejected: {e}")
            key = "cone_generators" if problem.cone_generators is not None else "dual_cone_generators"
            raise SchemaError([f"{key}: {e}"]) from e
        errors = self._support_errors(problem, cone)
        if errors:
            raise SchemaError(errors)
        logger.info(f"Parsed problem of rank {problem.lattice_rank} with {len(problem.functions)} functions")
        return problem

    def _structural_errors(self, problem: ProblemFile) -> list[str]:
        errors = []
        rank = problem.lattice_rank
        if rank > self.MAX_RANK:
            errors.append(f"lattice_rank: {rank} exceeds the supported maximum {self.MAX_RANK} (TORIC_MAX_RANK)")

        given = [key for key in ("cone_generators", "dual_cone_generators") if getattr(problem, key) is not None]
        if len(given) != 1:
            errors.append("(root): exactly one of cone_generators or dual_cone_generators is required")
        for key in ("cone_generators", "dual_cone_generators", "semigroup_generators"):
            vectors = getattr(problem, key) or []
            if key in given and not vectors:
                errors.append(f"{key}: at least one generator is required")
            for i, vector in enumerate(vectors):
                if len(vector) != rank:
                    errors.append(f"{key}[{i}]: length {len(vector)} does not match lattice_rank {rank}")
                elif key != "semigroup_generators" and not any(vector):
                    errors.append(f"{key}[{i}]: generator must be nonzero")

        for name, spec in problem.functions.items():
            errors.extend(self._function_errors(name, spec, rank))

        for variety, entries in problem.euler_obstruction.items():
            if variety not in self.VARIETY_KEYS:
                errors.append(f"euler_obstruction.{variety}: variety must be one of X, Xg")
            for label in entries:
                try:
                    parse_face_label(label)
                except ValueError as e:
                    logger.error(f"Bad Euler obstruction face label: {e}")
                    errors.append(f"euler_obstruction.{variety}.{label}: {e}")

        for name, deformation in problem.deformations.items():
            for i, ref in enumerate([deformation.base, *deformation.perturbations]):
                if ref not in problem.functions:
                    where = "base" if i == 0 else f"perturbations[{i - 1}]"
                    errors.append(f"deformations.{name}.{where}: unknown function '{ref}'")

        for name, points in problem.polytopes.items():
            if not points:
                errors.append(f"polytopes.{name}: a polytope needs at least one point")
            for i, point in enumerate(points):
                if len(point) != rank:
                    errors.append(f"polytopes.{name}[{i}]: length {len(point)} does not match lattice_rank {rank}")
        return errors

    def _function_errors(self, name: str, spec: FunctionSpec, rank: int) -> list[str]:
        errors = []
        if not spec.terms and not spec.generic_linear:
            errors.append(f"functions.{name}: a function needs terms (or generic_linear: true)")
        seen: set[tuple[int, ...]] = set()
        for i, term in enumerate(spec.terms):
            where = f"functions.{name}.terms[{i}]"
            exponent = tuple(term.exp)
            if len(exponent) != rank:
                errors.append(f"{where}.exp: length {len(exponent)} does not match lattice_rank {rank}")
            elif not any(exponent):
                errors.append(f"{where}.exp: function must vanish at the fixed point (exponent {list(exponent)})")
            if exponent in seen:
                errors.append(f"{where}.exp: duplicate exponent {list(exponent)}")
            seen.add(exponent)
            try:
                coefficient = Fraction(term.coeff)
            except (ValueError, ZeroDivisionError) as e:
                logger.error(f"Bad coefficient in {where}: {e}")
                errors.append(f"{where}.coeff: '{term.coeff}' is not an exact rational")
                continue
            if coefficient == 0:
                errors.append(f"{where}.coeff: coefficient must be nonzero")
        return errors

    def _support_errors(self, problem: ProblemFile, cone: Cone) -> list[str]:
        errors = []
        for name, spec in problem.functions.items():
            for i, term in enumerate(spec.terms):
                if not self.cones.contains(cone, term.exp):
                    errors.append(f"functions.{name}.terms[{i}].exp: support outside dual cone ({term.exp})")
        for i, vector in enumerate(problem.semigroup_generators or []):
            if not any(vector) or not self.cones.contains(cone, vector):
                errors.append(f"semigroup_generators[{i}]: generator must be a nonzero point of the dual cone")
        return errors

    def _build_cone(self, problem: ProblemFile) -> Cone:
        if problem.cone_generators is not None:
            return self.cones.cone_from_sigma(problem.cone_generators, problem.lattice_rank)
        return self.cones.dual_cone(problem.dual_cone_generators or [], problem.lattice_rank)

    def _function(self, name: str, spec: FunctionSpec, problem: ProblemFile, cone: Cone) -> ToricFunction:
        if spec.generic_linear and not spec.terms:
            return self.newton.generic_linear_form(cone, problem.semigroup_generators, name)
        terms = [
            Term(exponent=tuple(term.exp), coefficient=str(Fraction(term.coeff)))
            for term in sorted(spec.terms, key=lambda term: term.exp)
        ]
        return ToricFunction(name=name, terms=terms, generic_linear=spec.generic_linear)

    def build_context(self, problem: ProblemFile) -> ProblemContext:
        """Cone, faces, functions and deformations of a validated problem."""
        cone = self._build_cone(problem)
        faces = self.cones.enumerate_faces(cone)
        functions = {
            name: self._function(name, spec, problem, cone) for name, spec in sorted(problem.functions.items())
        }
        deformations = {
            name: Deformation(
                name=name,
                base=functions[spec.base],
                perturbations=[functions[p] for p in spec.perturbations],
                parameter=spec.parameter,
            )
            for name, spec in sorted(problem.deformations.items())
        }
        logger.debug(f"Context: {len(faces)} faces, functions {sorted(functions)}")
        return ProblemContext(problem=problem, cone=cone, faces=faces, functions=functions, deformations=deformations)
