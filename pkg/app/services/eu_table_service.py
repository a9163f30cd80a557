import logging
from typing import Mapping, Optional

from app.errors import HypothesisViolation
from app.models import Cone, EuEntry, EuProvenance, EuTable, Face, ToricFunction, VarietyLabel
from app.services.cone_service import ConeService
from app.services.newton_service import NewtonService

logger = logging.getLogger(__name__)


class EuTableService:
    """Service for local Euler obstruction tables indexed by the faces of the dual cone."""

    def __init__(self):
        self.cones = ConeService()
        self.newton = NewtonService()

    def resolve_eu_table(
        self,
        cone: Cone,
        faces: list[Face],
        user_entries: Optional[Mapping[str, int]],
        variety_label: VarietyLabel,
        g: Optional[ToricFunction] = None,
    ) -> EuTable:
        """Fill a table from user entries and smoothness defaults.

        On X every orbit in the smooth locus gets 1. On X^g an orbit gets 1 when X is smooth
        along it and g meets its face, so that T_Delta cap X^g is a smooth hypersurface of the
        orbit; without g only the dense orbit is defaulted. Anything else stays unknown.
        """
        dense = max(faces, key=lambda face: (face.dim, len(face.id)))
        defaults = set()
        for face in faces:
            if not self.cones.smooth_along_orbit(cone, face):
                continue
            match variety_label:
                case VarietyLabel.AMBIENT:
                    defaults.add(face.id)
                case VarietyLabel.HYPERSURFACE:
                    if face.id == dense.id or (g is not None and self.newton.meets(g, face)):
                        defaults.add(face.id)

        supplied: dict[tuple[int, ...], int] = {}
        for label, value in (user_entries or {}).items():
            face = self.cones.face_by_label(faces, label)
            if face.id in supplied and supplied[face.id] != value:
                raise HypothesisViolation(
                    f"conflicting Euler obstruction values for {variety_label.value} on {face.label}"
                )
            supplied[face.id] = value

        entries = []
        for face in faces:
            value = supplied.get(face.id)
            if face.id in defaults:
                if value is not None and value != 1:
                    raise HypothesisViolation(
                        f"Eu_{variety_label.value}({face.label}) = {value} contradicts Eu = 1 along a smooth orbit"
                    )
                provenance = EuProvenance.USER_SUPPLIED if value is not None else EuProvenance.DEFAULT_SMOOTH
                entries.append(EuEntry(face_id=face.id, value=1, provenance=provenance))
            elif value is not None:
                entries.append(EuEntry(face_id=face.id, value=value, provenance=EuProvenance.USER_SUPPLIED))
            else:
                entries.append(EuEntry(face_id=face.id, value=None, provenance=EuProvenance.UNKNOWN))
        unknown = sum(1 for entry in entries if entry.provenance == EuProvenance.UNKNOWN)
        logger.debug(f"Eu table for {variety_label.value}: {len(entries)} faces, {unknown} unknown")
        return EuTable(variety_label=variety_label, entries=entries)
