"""
Service de statisme : consignes initiales à partir des écarts de fréquence et de tension
"""
import logging
from typing import Tuple

from app.core.models import BaseQuantities, DroopConfig, GridMeasurement, Setpoint
from app.core.units import QuantityKind, from_pu, to_pu

logger = logging.getLogger(__name__)


class DroopService:
    """Service de calcul des consignes initiales par statisme"""

    def initial_setpoint(
        self,
        m: GridMeasurement,
        cfg: DroopConfig,
        base: BaseQuantities
    ) -> Setpoint:
        """
        Calcule la consigne initiale (P0, Q0) associée à une mesure réseau

        Aucune saturation n'est appliquée : la projection en aval s'en charge.

        Args:
            m: Mesure de fréquence et de tension
            cfg: Coefficients et bandes mortes
            base: Grandeurs de base

        Returns:
            Consigne initiale en per-unit
        """
        delta_f = m.f - base.f_nom
        p0 = 0.0
        if abs(delta_f) > cfg.db_f:
            p0 = to_pu(cfg.alpha * 1e6 * delta_f, base, QuantityKind.POWER)

        # Écart de tension mesuré en volts côté AC
        delta_v = from_pu(m.v_ac, base, QuantityKind.AC_VOLTAGE) - base.v_ac_base
        q0 = 0.0
        if abs(delta_v) > cfg.db_v:
            q0 = to_pu(cfg.beta * 1e3 * delta_v, base, QuantityKind.POWER)

        return Setpoint(p=p0, q=q0)

    def coefficients_from_limits(
        self,
        p_max: float,
        q_max: float,
        df_max: float,
        dv_max: float,
        base: BaseQuantities
    ) -> Tuple[float, float]:
        """
        Déduit les coefficients de statisme des limites de la batterie

        Le coefficient est la puissance maximale divisée par l'écart maximal
        observé, avec le signe stabilisant (sous-fréquence => décharge).

        Args:
            p_max: Puissance active maximale [pu]
            q_max: Puissance réactive maximale [pu]
            df_max: Écart de fréquence maximal [Hz]
            dv_max: Écart de tension maximal [V]
            base: Grandeurs de base

        Returns:
            (alpha [MW/Hz], beta [kVar/V])
        """
        if df_max <= 0 or dv_max <= 0:
            raise ValueError("les écarts maximaux doivent être strictement positifs")
        alpha = -from_pu(p_max, base, QuantityKind.POWER) / 1e6 / df_max
        beta = -from_pu(q_max, base, QuantityKind.POWER) / 1e3 / dv_max
        return alpha, beta


# Instance du service
droop_service = DroopService()
