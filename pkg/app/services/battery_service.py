"""
Service de modélisation de la batterie (modèle à trois constantes de temps)
"""
import logging
import math
from typing import Tuple, Union

import numpy as np

from app.core.exceptions import InfeasibleError
from app.core.models import BaseQuantities, BatteryState, TTCParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class BatteryService:
    """Service du modèle de batterie : tension, état de charge et bornes de puissance"""

    def __init__(self):
        """Initialisation du service"""
        self.soc_tol = 1e-9

    def ocv(self, soc: float, params: TTCParams) -> float:
        """Tension à vide E = a + b·SoC [pu]"""
        return params.a + params.b * soc

    def c_max_lookup(self, i: float, params: TTCParams) -> float:
        """
        Capacité maximale [A·h] interpolée linéairement sur |i|

        Les valeurs hors de la table sont bornées aux extrémités.
        """
        currents, capacities = zip(*params.c_max_table)
        return float(np.interp(abs(i), currents, capacities))

    def min_capacity(self, params: TTCParams) -> float:
        """Plus petite capacité de la table [A·h], minorant de c_max_lookup"""
        return min(c for _, c in params.c_max_table)

    def branch_gain(self, p_ac0: float, eta: float) -> float:
        """Rapport P_dc / P_ac : eta en charge (P0 < 0), 1/eta sinon"""
        return eta if p_ac0 < 0 else 1.0 / eta

    def p_dc_of_p_ac(self, p_ac: float, p_ac0_sign: float, eta: float) -> float:
        """
        Puissance côté DC correspondant à une puissance AC

        Args:
            p_ac: Puissance active AC [pu]
            p_ac0_sign: Signe de la consigne initiale (choisit la branche)
            eta: Rendement du convertisseur

        Returns:
            Puissance DC [pu]
        """
        return p_ac * self.branch_gain(p_ac0_sign, eta)

    def update_vc(
        self,
        state: BatteryState,
        params: TTCParams,
        dt: float,
        p_dc: float = 0.0
    ) -> Tuple[float, float, float]:
        """
        Met à jour les tensions des trois condensateurs sur un pas dt

        Discrétisation exacte avec courant bloqué sur le pas : le courant
        v_s/R_s = P_dc/v_dc est calculé à partir de la tension DC de l'état.

        Args:
            state: État de la batterie au début du pas
            params: Paramètres du modèle
            dt: Durée du pas [s]
            p_dc: Puissance DC appliquée [pu]

        Returns:
            Nouvelles tensions des condensateurs [pu]
        """
        if dt <= 0:
            raise ValueError("le pas de temps doit être strictement positif")
        current = p_dc / state.v_dc
        new_vc = []
        for vc, (r, c) in zip(state.vc, params.branches):
            decay = math.exp(-dt / (r * c))
            new_vc.append(vc * decay + r * current * (1.0 - decay))
        return tuple(new_vc)

    def upper_root(self, c: ArrayLike, r_s: float, p_dc: ArrayLike) -> ArrayLike:
        """
        Plus grande racine de v² - c·v + r_s·p_dc = 0 (avec c = E - Σvc)

        Retourne nan lorsque le discriminant est négatif.
        """
        disc = np.asarray(c) ** 2 - 4.0 * r_s * np.asarray(p_dc)
        with np.errstate(invalid="ignore"):
            root = (c + np.sqrt(disc)) / 2.0
        if np.ndim(root) == 0:
            return float(root)
        return root

    def solve_vdc(
        self,
        vc: Tuple[float, float, float],
        soc: float,
        p_dc: float,
        params: TTCParams
    ) -> float:
        """
        Tension du bus DC : plus grande racine de v² + (Σvc - E)·v + P_dc·R_s = 0

        Args:
            vc: Tensions des condensateurs [pu]
            soc: État de charge
            p_dc: Puissance DC [pu]
            params: Paramètres du modèle

        Returns:
            Tension DC [pu]

        Raises:
            InfeasibleError: "discriminant" si pas de racine réelle,
                "bounds" si la racine sort des bornes de tension
        """
        c = self.ocv(soc, params) - sum(vc)
        disc = c * c - 4.0 * params.r_s * p_dc
        if disc < 0:
            raise InfeasibleError("discriminant", f"p_dc = {p_dc:.6g} pu, discriminant = {disc:.3e}")
        v = (c + math.sqrt(disc)) / 2.0
        if not params.v_dc_min <= v <= params.v_dc_max:
            raise InfeasibleError(
                "bounds",
                f"v_dc = {v:.6g} pu hors de [{params.v_dc_min:.6g}, {params.v_dc_max:.6g}]"
            )
        return v

    def soc_step(
        self,
        state: BatteryState,
        p_dc: float,
        v_dc: float,
        dt: float,
        params: TTCParams,
        base: BaseQuantities
    ) -> Tuple[float, bool]:
        """
        Fait évoluer l'état de charge sur un pas (la décharge fait baisser le SoC)

        Args:
            state: État au début du pas
            p_dc: Puissance DC appliquée [pu]
            v_dc: Tension DC du pas [pu]
            dt: Durée du pas [s]
            params: Paramètres du modèle
            base: Grandeurs de base (courant de base)

        Returns:
            (SoC borné à [0, 1], indicateur de dépassement)
        """
        if v_dc <= 0:
            raise ValueError("la tension DC doit être strictement positive")
        i_pu = p_dc / v_dc
        amps = i_pu * base.i_base
        soc = state.soc - amps * (dt / 3600.0) / self.c_max_lookup(i_pu, params)
        violated = soc < 0.0 or soc > 1.0
        if violated:
            logger.warning(f"SoC hors de [0, 1] ({soc:.6g}), valeur bornée")
        return min(1.0, max(0.0, soc)), violated

    def soc_power_bounds(
        self,
        state: BatteryState,
        params: TTCParams,
        tick: float,
        base: BaseQuantities
    ) -> Tuple[float, float]:
        """
        Bornes de puissance DC garantissant que le SoC reste dans [soc_min, soc_max]
        après une période à puissance constante

        Pendant la période, la tension DC peut descendre jusqu'à v_dc_min et le
        courant réel, donc la capacité, s'écarter de celui de la période
        précédente. Les bornes utilisent la plus petite tension et la plus
        petite capacité atteignables.

        Returns:
            (p_dc_min <= 0, p_dc_max >= 0) [pu]
        """
        capacity = self.min_capacity(params)
        v_dc = min(state.v_dc, params.v_dc_min)
        factor = capacity * v_dc / (base.i_base * tick / 3600.0)
        p_max = max(0.0, (state.soc - params.soc_min) * factor)
        p_min = min(0.0, -(params.soc_max - state.soc) * factor)
        return p_min, p_max

    def rest_state(
        self,
        params: TTCParams,
        soc: float,
        vc: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    ) -> BatteryState:
        """État au repos (puissance nulle) pour un SoC et des tensions de condensateurs"""
        v_dc = self.solve_vdc(vc, soc, 0.0, params)
        return BatteryState(soc=soc, vc=vc, v_dc=v_dc, i_prev=0.0)

    def apply_power(
        self,
        state: BatteryState,
        p_ac: float,
        eta: float,
        params: TTCParams,
        base: BaseQuantities,
        tick: float,
        delta_t: float,
        check_bounds: bool = True
    ) -> Tuple[BatteryState, bool]:
        """
        Applique une puissance AC pendant une période, par pas internes delta_t

        La branche du rendement suit le signe de la puissance appliquée. À chaque
        pas : mise à jour des condensateurs, tension DC, puis état de charge.

        Args:
            state: État initial
            p_ac: Puissance active appliquée [pu]
            eta: Rendement du convertisseur
            params: Paramètres du modèle
            base: Grandeurs de base
            tick: Durée de la période [s]
            delta_t: Pas interne [s]
            check_bounds: Si False, la tension DC n'est pas confrontée à ses bornes

        Returns:
            (nouvel état, indicateur de dépassement du SoC)

        Raises:
            InfeasibleError: Si la tension DC n'existe pas ou sort de ses bornes
        """
        steps = max(1, int(round(tick / delta_t)))
        dt = tick / steps
        p_dc = self.p_dc_of_p_ac(p_ac, p_ac, eta)
        violated = False

        for _ in range(steps):
            vc = self.update_vc(state, params, dt, p_dc)
            if check_bounds:
                v_dc = self.solve_vdc(vc, state.soc, p_dc, params)
            else:
                c = self.ocv(state.soc, params) - sum(vc)
                v_dc = self.upper_root(c, params.r_s, p_dc)
                if not math.isfinite(v_dc) or v_dc <= 0:
                    raise InfeasibleError("discriminant", "aucune tension DC au repos")
            soc, step_violated = self.soc_step(state, p_dc, v_dc, dt, params, base)
            violated = violated or step_violated
            state = BatteryState(soc=soc, vc=vc, v_dc=v_dc, i_prev=p_dc / v_dc)

        return state, violated

    def within_soc_limits(self, soc: float, params: TTCParams) -> bool:
        """Vérifie que le SoC est dans [soc_min, soc_max] (tolérance 1e-9)"""
        return params.soc_min - self.soc_tol <= soc <= params.soc_max + self.soc_tol


# Instance du service
battery_service = BatteryService()
