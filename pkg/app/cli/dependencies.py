"""
Dépendances partagées par les commandes (configuration, courbes, état, problème)
"""
import logging
from pathlib import Path
from typing import Optional

from app.core.config import load_config, settings
from app.core.exceptions import ConfigError
from app.core.models import BatteryState, BessConfig, CapabilityCurveSet, ProjectionProblem, Setpoint
from app.services.battery_service import battery_service
from app.services.capability_service import capability_service
from app.services.droop_service import droop_service
from app.services.optimizer_service import optimizer_service

logger = logging.getLogger(__name__)


def get_config(path: Optional[str]) -> BessConfig:
    """
    Charge la configuration indiquée par --config (./bess.conf par défaut)

    Args:
        path: Chemin fourni sur la ligne de commande

    Returns:
        Configuration validée
    """
    return load_config(Path(path) if path else settings.DEFAULT_CONFIG_PATH)


def get_curves(path: Optional[str], config: BessConfig, config_path: Optional[str] = None) -> CapabilityCurveSet:
    """
    Charge les courbes de capabilité : --curves, sinon la clé curves.path de la configuration

    Un chemin relatif de la configuration est résolu depuis le dossier du fichier de configuration.
    """
    if path:
        return capability_service.load_curves(Path(path))
    if config.curves_path:
        curves_path = Path(config.curves_path)
        if not curves_path.is_absolute():
            config_dir = Path(config_path).parent if config_path else settings.DEFAULT_CONFIG_PATH.parent
            curves_path = config_dir / curves_path
        return capability_service.load_curves(curves_path)
    raise ConfigError("curves.path", None, "aucun fichier de courbes (--curves ou curves.path)")


def get_state(config: BessConfig, soc: Optional[float], v_dc: Optional[float] = None) -> BatteryState:
    """
    État de la batterie au repos pour le SoC demandé (soc_init par défaut)

    Une tension DC mesurée peut remplacer la tension au repos.
    """
    soc = config.soc_init if soc is None else soc
    state = battery_service.rest_state(config.battery, soc, config.vc_init)
    if v_dc is not None:
        state = state.model_copy(update={"v_dc": v_dc})
    return state


def get_problem(
    config: BessConfig,
    curves: CapabilityCurveSet,
    s0: Setpoint,
    v_ac: float,
    state: BatteryState
) -> ProjectionProblem:
    """Assemble le problème de projection pour une consigne et un état"""
    curve = capability_service.select_curve(curves, v_ac, state.v_dc)
    return optimizer_service.build_problem(s0, curve, state, config)


def get_droop(
    config: BessConfig,
    alpha: Optional[float] = None,
    df_max: Optional[float] = None,
    dv_max: Optional[float] = None
) -> BessConfig:
    """
    Applique les réglages de statisme de la ligne de commande

    Avec les écarts maximaux observés, alpha et beta sont déduits des limites
    droop.p_max_pu et droop.q_max_pu ; --alpha reste prioritaire.
    """
    droop = config.droop
    if (df_max is None) != (dv_max is None):
        raise ConfigError("droop", None, "--df-max et --dv-max doivent être fournis ensemble")
    if df_max is not None:
        derived_alpha, derived_beta = droop_service.coefficients_from_limits(
            droop.p_max, droop.q_max, df_max, dv_max, config.base
        )
        logger.info(f"Statisme déduit des limites : alpha={derived_alpha:.4g} MW/Hz, beta={derived_beta:.4g} kVar/V")
        droop = droop.model_copy(update={"alpha": derived_alpha, "beta": derived_beta})
    if alpha is not None:
        droop = droop.model_copy(update={"alpha": alpha})
    return config.model_copy(update={"droop": droop})
