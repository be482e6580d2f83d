"""
Conversion des grandeurs SI en per-unit (et inversement)
"""
from enum import Enum
from typing import Union

from app.core.exceptions import UnknownQuantityError
from app.core.models import BaseQuantities


class QuantityKind(str, Enum):
    """Types de grandeurs convertibles"""
    POWER = "power"
    DC_VOLTAGE = "dc_voltage"
    AC_VOLTAGE = "ac_voltage"
    CURRENT = "current"


def base_value(base: BaseQuantities, kind: Union[QuantityKind, str]) -> float:
    """
    Retourne la valeur de base correspondant au type de grandeur

    Args:
        base: Grandeurs de base du système
        kind: Type de grandeur

    Returns:
        Valeur de base en unités SI

    Raises:
        UnknownQuantityError: Si le type de grandeur n'est pas géré
    """
    try:
        kind = QuantityKind(kind)
    except ValueError:
        raise UnknownQuantityError(f"Type de grandeur inconnu: {kind!r}")

    if kind is QuantityKind.POWER:
        return base.s_base
    if kind is QuantityKind.DC_VOLTAGE:
        return base.v_dc_base
    if kind is QuantityKind.AC_VOLTAGE:
        return base.v_ac_base
    # Courant de base côté DC
    return base.i_base


def to_pu(value: float, base: BaseQuantities, kind: Union[QuantityKind, str]) -> float:
    """Convertit une valeur SI en per-unit"""
    return value / base_value(base, kind)


def from_pu(value: float, base: BaseQuantities, kind: Union[QuantityKind, str]) -> float:
    """Convertit une valeur per-unit en unités SI"""
    return value * base_value(base, kind)
