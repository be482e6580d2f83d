"""
Service des courbes de capabilité du convertisseur (chargement, sélection, évaluation)
"""
import hashlib
import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple

from pydantic import ValidationError

from app.core.exceptions import CurveFileError
from app.core.models import CapabilityCurve, CapabilityCurveSet, Disk, HalfSpace, Setpoint
from app.storage.conf_reader import ConfSection, read_conf_sections

logger = logging.getLogger(__name__)

CURVE_KEYS = {"vac_pu", "vdc_pu", "halfspace", "disk", "soc_scale"}


class CapabilityService:
    """Service de gestion des régions de capabilité (P, Q)"""

    def _numbers(self, raw: str, count: int, line: int, key: str) -> List[float]:
        try:
            values = [float(x) for x in raw.split()]
        except ValueError:
            raise CurveFileError(line, f"valeur numérique invalide {raw!r}", key=key)
        if len(values) != count:
            raise CurveFileError(line, f"{count} valeur(s) attendue(s), {len(values)} lue(s)", key=key)
        return values

    def _parse_section(self, section: ConfSection) -> CapabilityCurve:
        """Construit une courbe à partir d'une section [curve]"""
        fields: Dict[str, float] = {}
        halfspaces: List[HalfSpace] = []
        disks: List[Disk] = []

        for entry in section.entries:
            if entry.name not in CURVE_KEYS:
                raise CurveFileError(entry.line, "clé inconnue", key=entry.key)
            try:
                if entry.name == "halfspace":
                    a, b, c = self._numbers(entry.value, 3, entry.line, entry.key)
                    halfspaces.append(HalfSpace(a=a, b=b, c=c))
                elif entry.name == "disk":
                    p0, q0, r = self._numbers(entry.value, 3, entry.line, entry.key)
                    disks.append(Disk(p0=p0, q0=q0, r=r))
                else:
                    if entry.name in fields:
                        raise CurveFileError(entry.line, "clé déjà définie", key=entry.key)
                    fields[entry.name] = self._numbers(entry.value, 1, entry.line, entry.key)[0]
            except ValidationError as e:
                raise CurveFileError(entry.line, e.errors()[0]["msg"], key=entry.key)

        for required in ("vac_pu", "vdc_pu"):
            if required not in fields:
                raise CurveFileError(section.line, "clé manquante", key=f"curve.{required}")
        try:
            return CapabilityCurve(
                v_ac_key=fields["vac_pu"],
                v_dc_key=fields["vdc_pu"],
                halfspaces=tuple(halfspaces),
                disks=tuple(disks),
                soc_scale=fields.get("soc_scale", 1.0),
            )
        except ValidationError as e:
            raise CurveFileError(section.line, e.errors()[0]["msg"])

    def parse_curves(self, text: str) -> CapabilityCurveSet:
        """
        Lit un ensemble de courbes à partir du texte d'un fichier de courbes

        Args:
            text: Contenu du fichier (sections [curve] répétées)

        Returns:
            Ensemble de courbes validé

        Raises:
            CurveFileError: Erreur de syntaxe, région vide ou origine non intérieure
        """
        curves = []
        for section in read_conf_sections(text):
            if section.name != "curve":
                line = section.entries[0].line if not section.name else section.line
                raise CurveFileError(line, f"section inattendue {section.name!r} (attendu [curve])")
            curves.append(self._parse_section(section))

        if not curves:
            raise CurveFileError(None, "aucune courbe définie")
        try:
            return CapabilityCurveSet(curves=tuple(curves))
        except ValidationError as e:
            raise CurveFileError(None, e.errors()[0]["msg"])

    def load_curves(self, path: Path) -> CapabilityCurveSet:
        """
        Charge un fichier de courbes de capabilité

        Args:
            path: Chemin du fichier

        Returns:
            Ensemble de courbes validé
        """
        path = Path(path)
        if not path.is_file():
            raise CurveFileError(None, f"fichier de courbes introuvable: {path}")
        curve_set = self.parse_curves(path.read_text(encoding="utf-8"))
        logger.info(f"{len(curve_set.curves)} courbes de capabilité chargées depuis {path}")
        return curve_set

    def select_curve(self, curve_set: CapabilityCurveSet, v_ac: float, v_dc: float) -> CapabilityCurve:
        """
        Sélectionne la courbe dont les tensions de référence sont les plus proches

        En cas d'égalité, la courbe de plus petite tension DC (région plus petite) est retenue.
        """
        def distance(curve: CapabilityCurve) -> Tuple[float, float]:
            d = (v_ac - curve.v_ac_key) ** 2 + (v_dc - curve.v_dc_key) ** 2
            return round(d, 12), curve.v_dc_key

        return min(curve_set.curves, key=distance)

    def h_eval(self, curve: CapabilityCurve, s: Setpoint) -> float:
        """
        Marge de capabilité : maximum des violations signées des contraintes

        La consigne est divisée par le facteur soc_scale de la courbe.

        Returns:
            Valeur <= 0 si et seulement si la consigne est admissible
        """
        p = s.p / curve.soc_scale
        q = s.q / curve.soc_scale
        margins = [h.a * p + h.b * q - h.c for h in curve.halfspaces]
        margins += [math.hypot(p - d.p0, q - d.q0) - d.r for d in curve.disks]
        return max(margins)

    def is_feasible(self, curve: CapabilityCurve, s: Setpoint, tol: float = 0.0) -> bool:
        """Vérifie l'appartenance d'une consigne à la région de capabilité"""
        return self.h_eval(curve, s) <= tol

    def curve_hash(self, curve: CapabilityCurve) -> str:
        """Empreinte md5 de la représentation canonique d'une courbe"""
        return hashlib.md5(curve.canonical_key().encode()).hexdigest()

    def bounding_box(self, curve: CapabilityCurve) -> Tuple[float, float, float, float]:
        """
        Boîte englobante de la région (coordonnées réelles)

        Intersection des boîtes des disques, resserrée par les demi-plans
        parallèles aux axes.

        Returns:
            (p_min, p_max, q_min, q_max)
        """
        p_min = q_min = -math.inf
        p_max = q_max = math.inf
        for p0, q0, r in curve.scaled_disks():
            p_min, p_max = max(p_min, p0 - r), min(p_max, p0 + r)
            q_min, q_max = max(q_min, q0 - r), min(q_max, q0 + r)
        for a, b, c in curve.scaled_halfspaces():
            if b == 0.0:
                if a > 0:
                    p_max = min(p_max, c / a)
                else:
                    p_min = max(p_min, c / a)
            elif a == 0.0:
                if b > 0:
                    q_max = min(q_max, c / b)
                else:
                    q_min = max(q_min, c / b)
        return p_min, p_max, q_min, q_max


# Instance du service
capability_service = CapabilityService()
