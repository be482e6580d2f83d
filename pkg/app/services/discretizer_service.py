"""
Service de discrétisation : rayons maximaux par direction et projection rapide
"""
import logging
import math
from pathlib import Path
from typing import Any, Dict, Tuple

from app.core.config import settings
from app.core.models import (
    CapabilityCurve,
    RayTable,
    Setpoint,
    StaticContext,
    TableContext,
    TTCParams,
)
from app.services.capability_service import capability_service
from app.storage import files
from app.storage.cache import cache_response

logger = logging.getLogger(__name__)


def _free_table_key(service, ctx: StaticContext, resolution: float) -> Tuple[str, Dict[str, Any]]:
    """Clé d'une table non contrainte par le SoC : courbe, résolution et rendement"""
    params = {
        "curve_hash": capability_service.curve_hash(ctx.curve),
        "resolution": resolution,
        "eta": ctx.eta,
    }
    return "free_table", params


# Marge angulaire pour absorber l'arrondi de atan2 avant le plafond
ANGLE_EPS = 1e-9
AXIS_EPS = 1e-12
# Marge relative sur le carré du plus petit rayon
INNER_SHRINK = 1.0 - 1e-12


class DiscretizerService:
    """Service de construction et d'utilisation des tables de rayons"""

    def __init__(self):
        """Initialisation du service"""
        self.iterations = settings.BISECTION_ITERATIONS
        self.upper = settings.RAY_UPPER_BOUND_PU
        self.resolution = settings.TABLE_RESOLUTION_DEG
        self.rebuild_margin = settings.SOC_REBUILD_MARGIN

    def static_context(
        self,
        curve: CapabilityCurve,
        p_dc_bounds: Tuple[float, float],
        eta: float,
        v_ac: float,
        v_dc: float,
        soc: float
    ) -> StaticContext:
        """Assemble le contexte statique (tensions et SoC mesurés)"""
        return StaticContext(curve=curve, p_dc_bounds=p_dc_bounds, eta=eta, v_ac=v_ac, v_dc=v_dc, soc=soc)

    def _ray_feasible(self, r: float, cos_t: float, sin_t: float, ctx: StaticContext, gain: float) -> bool:
        s = Setpoint(p=r * cos_t, q=r * sin_t)
        if capability_service.h_eval(ctx.curve, s) > 0:
            return False
        p_dc = gain * s.p
        return ctx.p_dc_bounds[0] <= p_dc <= ctx.p_dc_bounds[1]

    def ray_max(self, theta: float, ctx: StaticContext) -> float:
        """
        Rayon maximal admissible dans la direction theta, par dichotomie

        L'origine étant intérieure et la région convexe, les rayons admissibles
        forment un intervalle [0, r_max].

        Args:
            theta: Angle [degrés] dans (0, 360]
            ctx: Contexte statique

        Returns:
            Rayon maximal [pu] (borne inférieure de la dichotomie, toujours admissible)
        """
        rad = math.radians(theta)
        cos_t, sin_t = math.cos(rad), math.sin(rad)
        # Sur les axes, la composante nulle doit l'être exactement
        if abs(cos_t) < AXIS_EPS:
            cos_t = 0.0
        if abs(sin_t) < AXIS_EPS:
            sin_t = 0.0
        # Branche du rendement selon le signe de la composante active
        gain = ctx.eta if cos_t < 0 else 1.0 / ctx.eta

        lo, hi = 0.0, self.upper
        if self._ray_feasible(hi, cos_t, sin_t, ctx, gain):
            return hi
        for _ in range(self.iterations):
            mid = 0.5 * (lo + hi)
            if self._ray_feasible(mid, cos_t, sin_t, ctx, gain):
                lo = mid
            else:
                hi = mid
        return lo

    def build_table(self, ctx: StaticContext, resolution: float = None) -> RayTable:
        """
        Construit la table des rayons maximaux, un rayon par pas angulaire

        Args:
            ctx: Contexte statique
            resolution: Pas angulaire [degrés], diviseur de 360

        Returns:
            Table de 360/resolution entrées
        """
        resolution = resolution or self.resolution
        count = round(360.0 / resolution)
        if abs(count * resolution - 360.0) > 1e-9:
            raise ValueError(f"la résolution {resolution} ne divise pas 360°")
        smax = tuple(self.ray_max(k * resolution, ctx) for k in range(1, count + 1))
        context = TableContext(
            v_ac=ctx.v_ac,
            v_dc=ctx.v_dc,
            soc=ctx.soc,
            curve_hash=capability_service.curve_hash(ctx.curve),
        )
        logger.debug(f"Table de {count} rayons construite (v_ac={ctx.v_ac:.4f}, v_dc={ctx.v_dc:.4f}, soc={ctx.soc:.4f})")
        return RayTable(smax=smax, resolution_deg=resolution, context=context)

    def angle_deg(self, s0: Setpoint, resolution: float = 1.0) -> float:
        """
        Angle polaire de la consigne ramené à (0, 360] puis arrondi au pas supérieur

        P = 0 donne 90 (Q >= 0) ou 270 (Q < 0).
        """
        if s0.p == 0.0:
            return 90.0 if s0.q >= 0 else 270.0
        theta = math.degrees(math.atan2(s0.q, s0.p))
        if theta <= 0.0:
            theta += 360.0
        k = max(1, math.ceil(theta / resolution - ANGLE_EPS))
        return k * resolution

    def fast_project(self, s0: Setpoint, table: RayTable) -> Setpoint:
        """
        Projection radiale rapide à l'aide de la table

        Args:
            s0: Consigne initiale
            table: Table construite pour le contexte courant

        Returns:
            s0 inchangée si son module ne dépasse pas le rayon de sa direction,
            sinon le point de rayon maximal dans la direction arrondie
        """
        p, q = s0.p, s0.q
        # Strictement à l'intérieur du plus petit rayon : aucune recherche d'angle
        if p * p + q * q < table.inner_radius * table.inner_radius * INNER_SHRINK:
            return s0
        if p == 0.0:
            if q == 0.0:
                return s0
            theta = 90.0 if q > 0 else 270.0
        else:
            theta = math.degrees(math.atan2(q, p))
            if theta <= 0.0:
                theta += 360.0
        resolution = table.resolution_deg
        k = max(1, math.ceil(theta / resolution - ANGLE_EPS))
        smax = table.smax[k - 1]
        if math.hypot(p, q) <= smax:
            return s0
        rad = math.radians(k * resolution)
        return Setpoint.model_construct(p=smax * math.cos(rad), q=smax * math.sin(rad))

    def _bounds_free(self, ctx: StaticContext, battery: TTCParams) -> bool:
        """Vrai si les bornes de SoC ne peuvent limiter aucun rayon et que le SoC est loin de ses limites"""
        p_lo, p_hi = ctx.p_dc_bounds
        free = p_hi >= self.upper / ctx.eta and p_lo <= -self.upper * ctx.eta
        span = battery.soc_max - battery.soc_min
        margin = self.rebuild_margin * span
        away = battery.soc_min + margin < ctx.soc < battery.soc_max - margin
        return free and away

    def table_for_state(self, ctx: StaticContext, battery: TTCParams, resolution: float = None) -> RayTable:
        """
        Table adaptée à l'état courant

        Tant que les bornes de SoC ne limitent pas les rayons, la table ne dépend
        que de la courbe sélectionnée : elle est alors partagée via le cache. Près
        d'une limite de SoC, la table est reconstruite à chaque appel.
        """
        resolution = resolution or self.resolution
        if not self._bounds_free(ctx, battery):
            logger.debug(f"SoC proche d'une limite ({ctx.soc:.4f}), table reconstruite")
            return self.build_table(ctx, resolution)
        return self._free_table(ctx, resolution)

    @cache_response("discretizer", key_func=_free_table_key)
    def _free_table(self, ctx: StaticContext, resolution: float) -> RayTable:
        logger.info(
            f"Construction de la table de rayons (courbe v_ac={ctx.curve.v_ac_key}, "
            f"v_dc={ctx.curve.v_dc_key})"
        )
        return self.build_table(ctx, resolution)

    def write_table(self, table: RayTable, path: Path) -> Path:
        """Écrit une table (en-tête de contexte + colonnes deg, smax_pu)"""
        return files.write_table(table, path)

    def read_table(self, path: Path) -> RayTable:
        """Relit une table écrite par write_table"""
        return files.read_table(path)


# Instance du service
discretizer_service = DiscretizerService()
