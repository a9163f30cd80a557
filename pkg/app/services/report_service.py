import logging
from typing import Any, Optional

from app.errors import HypothesisViolation
from app.models import (
    CommandFlags,
    Deformation,
    EuTable,
    Face,
    FaceRow,
    LatticePolytope,
    MilnorMode,
    ProblemContext,
    ReportDocument,
    ToricFunction,
    VarietyLabel,
)
from app.services.cone_service import ConeService
from app.services.eu_table_service import EuTableService
from app.services.family_service import FamilyService
from app.services.invariant_service import InvariantService
from app.services.lattice_service import LatticeService
from app.services.newton_service import NewtonService
from app.services.oracle_service import OracleService
from app.services.polytope_service import PolytopeService

logger = logging.getLogger(__name__)

COMMANDS = (
    "faces",
    "orbits",
    "newton",
    "chi",
    "volume",
    "mixed-volume",
    "brasselet",
    "brasselet-ci",
    "morse",
    "milnor-cn",
    "family-check",
    "oracle",
)


class ReportService:
    """Service for running a command on a problem context and assembling the report document."""

    def __init__(self, workers: int = 1):
        self.lattice = LatticeService()
        self.cones = ConeService()
        self.polytopes = PolytopeService()
        self.newton = NewtonService()
        self.eu_tables = EuTableService()
        self.invariants = InvariantService(workers)
        self.families = FamilyService(workers)
        self.oracles = OracleService(workers)

    def run_command(self, command: str, ctx: ProblemContext, flags: CommandFlags) -> ReportDocument:
        logger.info(f"Running {command}")
        match command:
            case "faces":
                result = {"count": len(ctx.faces)}
            case "orbits":
                result = self._orbits(ctx, flags)
            case "newton":
                result = self._newton(ctx, flags)
            case "chi":
                result = self._chi(ctx, flags)
            case "volume":
                result = self._volume(ctx, flags)
            case "mixed-volume":
                result = self._mixed_volume(ctx, flags)
            case "brasselet":
                f = self._function(ctx, flags.function, "-f/--function")
                report = self.invariants.brasselet_hypersurface(
                    f, ctx.cone, ctx.faces, self._eu(ctx, VarietyLabel.AMBIENT), hypotheses=ctx.problem.hypotheses
                )
                result = report.model_dump(mode="json")
            case "brasselet-ci":
                result = self._brasselet_ci(ctx, flags)
            case "morse":
                f = self._function(ctx, flags.function, "-f/--function")
                g = self._function(ctx, flags.hypersurface, "-g/--hypersurface")
                report = self.invariants.morse_count(
                    f,
                    g,
                    ctx.cone,
                    ctx.faces,
                    self._eu(ctx, VarietyLabel.AMBIENT),
                    self._eu(ctx, VarietyLabel.HYPERSURFACE, g),
                    refined=ctx.problem.refined_strata,
                    hypotheses=ctx.problem.hypotheses,
                )
                result = report.model_dump(mode="json")
            case "milnor-cn":
                g = self._function(ctx, flags.hypersurface, "-g/--hypersurface")
                report = self.invariants.milnor_cn_relation(
                    g,
                    ctx.cone,
                    ctx.faces,
                    self._eu(ctx, VarietyLabel.HYPERSURFACE, g),
                    mode=self._milnor_mode(flags.mode),
                    hypotheses=ctx.problem.hypotheses,
                )
                result = report.model_dump(mode="json")
            case "family-check":
                result = self._family(ctx, flags)
            case "oracle":
                result = self._oracle(ctx, flags)
            case _:
                raise HypothesisViolation(f"unknown command '{command}'; expected one of {', '.join(COMMANDS)}")

        faces = [
            FaceRow(face=face.label, dim=face.dim, generators=list(face.id),
                    smooth=self.cones.smooth_along_orbit(ctx.cone, face))
            for face in ctx.faces
        ]
        return ReportDocument(
            command=command,
            problem=ctx.problem.model_dump(mode="json", exclude_none=True),
            faces=faces,
            result=result,
        )

    def _function(self, ctx: ProblemContext, name: Optional[str], flag: str) -> ToricFunction:
        if name is None:
            raise HypothesisViolation(f"this command needs a function name ({flag})")
        fn = ctx.functions.get(name)
        if fn is None:
            known = ", ".join(sorted(ctx.functions)) or "none"
            raise HypothesisViolation(f"unknown function '{name}' (problem defines: {known})")
        return fn

    def _eu(self, ctx: ProblemContext, variety: VarietyLabel, g: Optional[ToricFunction] = None) -> EuTable:
        entries = ctx.problem.euler_obstruction.get(variety.value)
        return self.eu_tables.resolve_eu_table(ctx.cone, ctx.faces, entries, variety, g)

    def _milnor_mode(self, mode: Optional[str]) -> Optional[MilnorMode]:
        match mode:
            case None:
                return None
            case "solve" | "solve-for-m":
                return MilnorMode.SOLVE
            case "relation" | "emit-relation":
                return MilnorMode.RELATION
            case _:
                raise HypothesisViolation(f"unknown milnor-cn mode '{mode}'; expected solve or relation")

    def _selected_faces(self, ctx: ProblemContext, flags: CommandFlags) -> list[Face]:
        if flags.face is None:
            return ctx.faces
        return [self.cones.face_by_label(ctx.faces, flags.face)]

    def _orbits(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        g = self._function(ctx, flags.hypersurface or flags.function, "-g/--hypersurface")
        critical = self.invariants.critical_orbits(g, ctx.cone, ctx.faces)
        return {"function": g.name, "critical_orbits": [face.label for face in critical]}

    def _newton(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        f = self._function(ctx, flags.function, "-f/--function")
        restrictions = []
        for face in self._selected_faces(ctx, flags):
            if face.dim == 0 or not self.newton.meets(f, face):
                if flags.face is not None:
                    self.newton.newton_restriction(f, ctx.cone, face)
                continue
            data = self.newton.product_polygon([f], ctx.cone, face)
            restrictions.append({"face": face.label, **data.model_dump(mode="json")})
        return {"function": f.name, "support": [list(v) for v in f.support], "restrictions": restrictions}

    def _chi(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        f = self._function(ctx, flags.function, "-f/--function")
        if flags.face is not None:
            faces = self._selected_faces(ctx, flags)
        else:
            faces = [face for face in ctx.faces if face.dim > 0 and self.newton.meets(f, face)]
        values = self.invariants.map_faces(lambda face: self.invariants.chi_orbit(f, ctx.cone, face), faces)
        return {
            "function": f.name,
            "orbits": [{"face": face.label, "dim": face.dim, "chi": chi} for face, chi in zip(faces, values)],
        }

    def _named_polytopes(self, ctx: ProblemContext, flags: CommandFlags) -> list[tuple[str, LatticePolytope]]:
        names = flags.polytopes or sorted(ctx.problem.polytopes)
        if not names:
            raise HypothesisViolation("no polytopes given (--polytope NAME, defined under 'polytopes')")
        result = []
        for name in names:
            points = ctx.problem.polytopes.get(name)
            if points is None:
                raise HypothesisViolation(f"unknown polytope '{name}'")
            result.append((name, self.polytopes.convex_hull(points)))
        return result

    def _volume(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        rows = []
        for name, polytope in self._named_polytopes(ctx, flags):
            rows.append(
                {
                    "polytope": name,
                    "vertices": [list(v) for v in polytope.vertices],
                    "affine_dim": polytope.affine_dim,
                    "volume": self.polytopes.normalized_volume(polytope),
                }
            )
        return {"polytopes": rows}

    def _mixed_volume(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        named = self._named_polytopes(ctx, flags)
        multiplicities: dict[str, int] = {}
        for name, _ in named:
            multiplicities[name] = multiplicities.get(name, 0) + 1
        polytopes = dict(named)
        rank = len(named[0][1].vertices[0])
        directions = [
            tuple(a - b for a, b in zip(v, polytope.vertices[0])) for _, polytope in named for v in polytope.vertices
        ]
        lattice = self.lattice.sublattice_basis(directions, rank)
        value = self.polytopes.mixed_volume([(polytopes[name], m) for name, m in multiplicities.items()], lattice)
        return {
            "polytopes": [name for name, _ in named],
            "lattice": [list(row) for row in lattice],
            "mixed_volume": value,
        }

    def _brasselet_ci(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        f = self._function(ctx, flags.function, "-f/--function")
        priors = [self._function(ctx, name, "--prior") for name in flags.priors]
        if priors:
            g = priors[0] if len(priors) == 1 else None
            eu = self._eu(ctx, VarietyLabel.HYPERSURFACE, g)
        else:
            eu = self._eu(ctx, VarietyLabel.AMBIENT)
        report = self.invariants.brasselet_complete_intersection(
            priors, f, ctx.cone, ctx.faces, eu, hypotheses=ctx.problem.hypotheses
        )
        return report.model_dump(mode="json")

    def _family(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        if flags.family is None:
            raise HypothesisViolation("family-check needs a deformation name (--family)")
        f_family = self._deformation(ctx, flags.family)
        if flags.hypersurface_family is None:
            check = self.families.newton_constancy_check(f_family, ctx.cone, ctx.faces)
            return {"constancy": check.model_dump(mode="json")}
        g_family = self._deformation(ctx, flags.hypersurface_family)
        report = self.families.family_invariant_report(
            f_family,
            g_family,
            ctx.cone,
            ctx.faces,
            self._eu(ctx, VarietyLabel.AMBIENT),
            self._eu(ctx, VarietyLabel.HYPERSURFACE, g_family.base),
            hypotheses=ctx.problem.hypotheses,
        )
        return {"family": report.model_dump(mode="json")}

    def _deformation(self, ctx: ProblemContext, name: str) -> Deformation:
        deformation = ctx.deformations.get(name)
        if deformation is None:
            raise HypothesisViolation(f"unknown deformation '{name}'")
        return deformation

    def _oracle(self, ctx: ProblemContext, flags: CommandFlags) -> dict[str, Any]:
        rows = []
        if flags.function is not None:
            f = self._function(ctx, flags.function, "-f/--function")
            rows.extend(self.oracles.run_all(f, ctx.cone, ctx.faces, self._eu(ctx, VarietyLabel.AMBIENT)))
        if flags.polytopes or (flags.function is None and ctx.problem.polytopes):
            rows.extend(self.oracles.volume_row(name, p) for name, p in self._named_polytopes(ctx, flags)
                        if p.affine_dim == len(p.reference_lattice))
        if not rows:
            raise HypothesisViolation("oracle needs a function (-f) or polytopes to check")
        return {"checks": [row.model_dump(mode="json") for row in rows], "all_agree": all(row.agree for row in rows)}
