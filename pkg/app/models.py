import re
from enum import Enum
from typing import Any, Optional

from sqlmodel import Field, SQLModel

IntVector = tuple[int, ...]
IntMatrix = tuple[IntVector, ...]

FORMAT_VERSION = "1.0"

_FACE_LABEL = re.compile(r"^\s*(?:face)?\s*\{?\s*([0-9,\s]*?)\s*\}?\s*$")


def face_label(face_id: IntVector) -> str:
    """Canonical label of a face: `origin` for {0}, otherwise `face{i,j}` with 1-based generator indices."""
    if not face_id:
        return "origin"
    return "face{" + ",".join(str(i) for i in face_id) + "}"


def parse_face_label(text: str) -> IntVector:
    """Inverse of face_label; also accepts `{1,3}`, `1,3` and `{}`."""
    if text.strip().lower() in ("origin", "0", "{}", "face{}", ""):
        return ()
    match = _FACE_LABEL.match(text)
    if match is None:
        raise ValueError(f"unreadable face label '{text}'")
    parts = [p for p in re.split(r"[,\s]+", match.group(1)) if p]
    if not parts:
        return ()
    indices = sorted({int(p) for p in parts})
    if indices[0] < 1:
        raise ValueError(f"face label '{text}' uses generator index below 1")
    return tuple(indices)


class VarietyLabel(str, Enum):
    AMBIENT = "X"
    HYPERSURFACE = "Xg"


class EuProvenance(str, Enum):
    DEFAULT_SMOOTH = "default-smooth"
    USER_SUPPLIED = "user-supplied"
    UNKNOWN = "unknown"


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


class MilnorMode(str, Enum):
    SOLVE = "solve-for-m"
    RELATION = "emit-relation"


class MorseMode(str, Enum):
    ORBIT = "orbit-stratified"
    LINEAR_FORM = "linear-form"
    REFINED = "refined-strata"


# Lattice geometry (non-persistent schemas)
class Cone(SQLModel, table=False):
    ambient_rank: int = Field(ge=1)
    generators: list[IntVector]  # extreme rays of the dual cone, in M
    dual_generators: list[IntVector]  # extreme rays of sigma, in N


class Face(SQLModel, table=False):
    id: IntVector = Field(default=())
    dim: int = Field(ge=0)
    span_basis: IntMatrix = Field(default=())
    defining_normals: list[IntVector] = Field(default_factory=list)

    @property
    def label(self) -> str:
        return face_label(self.id)


class PolarCone(SQLModel, table=False):
    face_id: IntVector
    dim: int = Field(ge=0)
    generators: list[IntVector] = Field(default_factory=list)
    trivial: bool = False


class LatticePolytope(SQLModel, table=False):
    vertices: list[IntVector]
    reference_lattice: IntMatrix = Field(default=())
    affine_dim: int = Field(ge=0)


class Term(SQLModel, table=False):
    exponent: IntVector
    coefficient: str = Field(default="1", max_length=200)  # exact rational "p/q"


class ToricFunction(SQLModel, table=False):
    name: str = Field(max_length=100)
    terms: list[Term]
    generic_linear: bool = False

    @property
    def support(self) -> list[IntVector]:
        return sorted(term.exponent for term in self.terms)


class SummandFace(SQLModel, table=False):
    function: str
    vertices: list[IntVector]  # face coordinates
    level: int


class NewtonFacet(SQLModel, table=False):
    vertices: list[IntVector]  # face coordinates
    ambient_vertices: list[IntVector]
    normal: IntVector  # dual-basis coordinates of the face lattice
    level: int
    summands: list[SummandFace] = Field(default_factory=list)


class RestrictedNewtonData(SQLModel, table=False):
    face_id: IntVector
    face_dim: int = Field(ge=0)
    functions: list[str]
    facets: list[NewtonFacet] = Field(default_factory=list)


class SupportingFace(SQLModel, table=False):
    face_id: IntVector
    normal: IntVector
    level: int
    polytope: LatticePolytope
    recession_rays: list[IntVector] = Field(default_factory=list)
    u_part: ToricFunction


class EuEntry(SQLModel, table=False):
    face_id: IntVector
    value: Optional[int] = None
    provenance: EuProvenance = EuProvenance.UNKNOWN


class EuTable(SQLModel, table=False):
    variety_label: VarietyLabel
    entries: list[EuEntry] = Field(default_factory=list)

    def entry(self, face_id: IntVector) -> Optional[EuEntry]:
        for entry in self.entries:
            if entry.face_id == face_id:
                return entry
        return None


class RefinedStratum(SQLModel, table=False):
    label: str = Field(max_length=100)
    chi: int
    eu_x: int
    eu_xg: int


# Report schemas
class FacetTerm(SQLModel, table=False):
    normal: IntVector
    level: int
    vertices: list[IntVector]
    volume: Optional[int] = None
    d: Optional[int] = None
    k: Optional[int] = None


class FaceTerm(SQLModel, table=False):
    face: str
    dim: int
    sign: int
    m_face: int = 1
    weight: int  # sum of Vol_Z(Gamma_i) or of d_i * K_i
    eu: Optional[int] = None
    eu_symbol: str
    contribution: str
    facets: list[FacetTerm] = Field(default_factory=list)


class BrasseletTable(SQLModel, table=False):
    kind: str
    functions: list[str]
    variety_label: VarietyLabel
    terms: list[FaceTerm] = Field(default_factory=list)
    excluded_faces: list[str] = Field(default_factory=list)
    total: Optional[int] = None
    total_expression: str


class CorrectionTerm(SQLModel, table=False):
    stratum: str
    chi: int
    eu_x: Optional[int] = None
    eu_xg: Optional[int] = None
    contribution: str


class InvariantReport(SQLModel, table=False):
    kind: str
    functions: list[str]
    mode: Optional[str] = None
    tables: list[BrasseletTable] = Field(default_factory=list)
    critical_orbits: list[str] = Field(default_factory=list)
    corrections: list[CorrectionTerm] = Field(default_factory=list)
    value: Optional[int] = None
    value_expression: str = ""
    relation: Optional[str] = None
    hypotheses: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)


class Deformation(SQLModel, table=False):
    name: str = Field(max_length=100)
    base: ToricFunction
    perturbations: list[ToricFunction] = Field(default_factory=list)
    parameter: str = Field(default="t", max_length=20)


class ConstancyWitness(SQLModel, table=False):
    function: str
    point: IntVector
    normal: IntVector
    level: int
    pairing: int


class ConstancyReport(SQLModel, table=False):
    family: str
    verdict: Verdict
    witnesses: list[ConstancyWitness] = Field(default_factory=list)
    inequalities_checked: int = Field(default=0, ge=0)
    facet_disjointness: bool


class FamilyReport(SQLModel, table=False):
    f_family: str
    g_family: str
    f_check: ConstancyReport
    g_check: ConstancyReport
    members_compared: int = Field(ge=1)
    identical: bool
    report: InvariantReport
    m: Optional[int] = None
    relation: Optional[str] = None
    hypotheses: list[str] = Field(default_factory=list)


class OracleRow(SQLModel, table=False):
    check: str
    subject: str
    computed: int
    oracle: int
    agree: bool


# Problem file schemas
class TermSpec(SQLModel, table=False):
    exp: list[int]
    coeff: str = Field(default="1", max_length=200)


class FunctionSpec(SQLModel, table=False):
    terms: list[TermSpec] = Field(default_factory=list)
    generic_linear: bool = False


class DeformationSpec(SQLModel, table=False):
    base: str
    perturbations: list[str] = Field(default_factory=list)
    parameter: str = Field(default="t", max_length=20)


class ProblemFile(SQLModel, table=False):
    format_version: int = Field(default=1, ge=1)
    lattice_rank: int = Field(ge=1)
    cone_generators: Optional[list[list[int]]] = None
    dual_cone_generators: Optional[list[list[int]]] = None
    semigroup_generators: Optional[list[list[int]]] = None
    functions: dict[str, FunctionSpec] = Field(default_factory=dict)
    euler_obstruction: dict[str, dict[str, int]] = Field(default_factory=dict)
    hypotheses: list[str] = Field(default_factory=list)
    deformations: dict[str, DeformationSpec] = Field(default_factory=dict)
    polytopes: dict[str, list[list[int]]] = Field(default_factory=dict)
    refined_strata: list[RefinedStratum] = Field(default_factory=list)


class ProblemContext(SQLModel, table=False):
    problem: ProblemFile
    cone: Cone
    faces: list[Face]
    functions: dict[str, ToricFunction] = Field(default_factory=dict)
    deformations: dict[str, Deformation] = Field(default_factory=dict)


class CommandFlags(SQLModel, table=False):
    json_output: bool = False
    parallel: int = Field(default=1, ge=1)
    function: Optional[str] = None
    hypersurface: Optional[str] = None
    priors: list[str] = Field(default_factory=list)
    face: Optional[str] = None
    polytopes: list[str] = Field(default_factory=list)
    mode: Optional[str] = None
    family: Optional[str] = None
    hypersurface_family: Optional[str] = None


class FaceRow(SQLModel, table=False):
    face: str
    dim: int
    generators: list[int]
    smooth: bool


class ReportDocument(SQLModel, table=False):
    format_version: str = FORMAT_VERSION
    command: str
    problem: dict[str, Any]
    faces: list[FaceRow] = Field(default_factory=list)
    result: dict[str, Any] = Field(default_factory=dict)
