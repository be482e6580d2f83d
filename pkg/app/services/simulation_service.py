"""
Service de simulation en boucle fermée : trace réseau -> statisme -> projection -> batterie
"""
import logging
import math
import time
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.signal import lfilter
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import InfeasibleError
from app.core.models import (
    BaseQuantities,
    BatteryState,
    BessConfig,
    CapabilityCurveSet,
    EnergyMetrics,
    GridMeasurement,
    OUParams,
    ProjectionProblem,
    ProjectionStatus,
    Setpoint,
    SimulationMethod,
    TickLog,
    TickRecord,
    TickStatus,
    Trace,
)
from app.core.units import QuantityKind, from_pu
from app.services.battery_service import battery_service
from app.services.capability_service import capability_service
from app.services.discretizer_service import discretizer_service
from app.services.droop_service import droop_service
from app.services.optimizer_service import optimizer_service
from app.storage.files import tick_log_frame

logger = logging.getLogger(__name__)

# Sonde appelée à chaque pas : (indice, problème, mesure, état avant application)
TickHook = Callable[[int, ProjectionProblem, GridMeasurement, BatteryState], None]

ZERO = Setpoint(p=0.0, q=0.0)


class SimulationService:
    """Service de génération de traces et de simulation de la boucle de contrôle"""

    def __init__(self):
        """Initialisation du service"""
        self.show_progress = settings.SHOW_PROGRESS

    def default_ou_params(self) -> OUParams:
        """Paramètres OU issus de la configuration de l'application"""
        return OUParams(
            reversion=settings.OU_REVERSION,
            f_volatility=settings.OU_F_VOLATILITY,
            v_volatility=settings.OU_V_VOLATILITY,
        )

    def _ou_path(self, rng: np.random.Generator, n: int, mean: float, volatility: float, reversion: float, dt: float) -> np.ndarray:
        """
        Trajectoire d'Ornstein-Uhlenbeck discrétisée exactement (x_k = a·x_{k-1} + s·ε_k)

        La trajectoire démarre à la moyenne.
        """
        noise = rng.standard_normal(n)
        noise[0] = 0.0
        if reversion > 0:
            decay = math.exp(-reversion * dt)
            scale = volatility * math.sqrt((1.0 - decay ** 2) / (2.0 * reversion))
        else:
            decay = 1.0
            scale = volatility * math.sqrt(dt)
        return mean + lfilter([scale], [1.0, -decay], noise)

    def gen_trace(self, seed: int, duration: float, params: OUParams = None, dt: float = 0.1) -> Trace:
        """
        Génère une trace synthétique de fréquence et de tension AC

        Args:
            seed: Graine du générateur (même graine => trace identique)
            duration: Durée [s]
            params: Paramètres des processus OU
            dt: Pas d'échantillonnage [s]

        Returns:
            Trace à pas uniforme
        """
        if duration <= 0:
            raise ValueError("la durée doit être strictement positive")
        params = params or self.default_ou_params()
        n = max(1, int(round(duration / dt)))
        rng = np.random.default_rng(seed)

        f = self._ou_path(rng, n, params.f_mean, params.f_volatility, params.reversion, dt)
        v = self._ou_path(rng, n, params.v_mean, params.v_volatility, params.reversion, dt)
        samples = tuple(
            GridMeasurement(t=round(k * dt, 9), f=float(f[k]), v_ac=float(v[k]))
            for k in range(n)
        )
        logger.info(f"Trace générée : {n} échantillons, graine {seed}")
        return Trace(samples=samples, dt=dt)

    def _project(
        self,
        method: SimulationMethod,
        prob: ProjectionProblem,
        initial_feasible: bool,
        config: BessConfig,
        state: BatteryState,
        v_ac: float,
        resolution: Optional[float]
    ) -> Tuple[Setpoint, TickStatus, float]:
        """Applique la méthode de projection et mesure sa durée [µs]"""
        s0 = prob.s0
        if method is SimulationMethod.OPTIMIZER:
            start = time.perf_counter_ns()
            result = optimizer_service.solve(prob)
            latency = (time.perf_counter_ns() - start) / 1000.0
            if result.status is ProjectionStatus.INFEASIBLE:
                return ZERO, TickStatus.INFEASIBLE, latency
            if result.status is ProjectionStatus.PASSTHROUGH:
                return result.s, TickStatus.PASSTHROUGH, latency
            return result.s, TickStatus.PROJECTED, latency

        if method is SimulationMethod.FAST:
            ctx = discretizer_service.static_context(
                prob.curve, prob.p_dc_bounds, config.control.eta, v_ac, state.v_dc, state.soc
            )
            table = discretizer_service.table_for_state(ctx, config.battery, resolution)
            start = time.perf_counter_ns()
            s = discretizer_service.fast_project(s0, table)
            latency = (time.perf_counter_ns() - start) / 1000.0
            return s, TickStatus.PASSTHROUGH if s is s0 else TickStatus.PROJECTED, latency

        # Protection constructeur : consigne nulle dès que la consigne initiale est infaisable
        start = time.perf_counter_ns()
        s = s0 if initial_feasible else ZERO
        latency = (time.perf_counter_ns() - start) / 1000.0
        return s, TickStatus.PASSTHROUGH if initial_feasible else TickStatus.ZEROED, latency

    def simulate(
        self,
        trace: Trace,
        method: SimulationMethod,
        config: BessConfig,
        curves: CapabilityCurveSet,
        resolution: float = None,
        on_tick: TickHook = None
    ) -> Tuple[TickLog, EnergyMetrics]:
        """
        Simule la boucle de contrôle sur une trace

        À chaque période : statisme, sélection de la courbe, bornes de SoC,
        projection selon la méthode, application à la batterie par pas internes,
        puis enregistrement. Une infaisabilité de la batterie rejoue la période à
        puissance nulle.

        Args:
            trace: Trace de mesures
            method: Méthode de projection (opt, fast, baseline)
            config: Configuration complète
            curves: Courbes de capabilité
            resolution: Résolution des tables de rayons (méthode fast)
            on_tick: Sonde optionnelle appelée avant chaque projection

        Returns:
            (journal, métriques d'énergie)
        """
        method = SimulationMethod(method)
        base, control, battery = config.base, config.control, config.battery
        tick = control.tick
        n_ticks = max(1, int(round(trace.duration / tick)))
        state = battery_service.rest_state(battery, config.soc_init, config.vc_init)
        records = []
        counts = {status: 0 for status in TickStatus}

        ticks = range(n_ticks)
        if self.show_progress:
            ticks = tqdm(ticks, desc=f"simulation {method.value}")

        for k in ticks:
            t = round(k * tick, 9)
            index = min(len(trace.samples) - 1, int(math.floor(t / trace.dt + 1e-9)))
            m = trace.samples[index]

            # 1. Consigne initiale et problème de projection
            s0 = droop_service.initial_setpoint(m, config.droop, base)
            curve = capability_service.select_curve(curves, m.v_ac, state.v_dc)
            prob = optimizer_service.build_problem(s0, curve, state, config)
            initial_feasible = optimizer_service.is_initial_feasible(prob)
            if on_tick is not None:
                on_tick(k, prob, m, state)

            # 2. Projection
            if s0.is_zero():
                s, status, latency = s0, TickStatus.IDLE, 0.0
            else:
                s, status, latency = self._project(method, prob, initial_feasible, config, state, m.v_ac, resolution)

            # 3. Application à la batterie
            try:
                new_state, violated = battery_service.apply_power(
                    state, s.p, control.eta, battery, base, tick, control.delta_t
                )
            except InfeasibleError as e:
                logger.warning(f"t = {t} s : batterie infaisable ({e}), puissance nulle appliquée")
                s, status = ZERO, TickStatus.PLANT_INFEASIBLE
                new_state, violated = battery_service.apply_power(
                    state, 0.0, control.eta, battery, base, tick, control.delta_t, check_bounds=False
                )

            if violated or not battery_service.within_soc_limits(new_state.soc, battery):
                logger.warning(f"t = {t} s : SoC hors limites ({new_state.soc:.9f})")
                status = TickStatus.SOC_VIOLATION
            elif status is TickStatus.INFEASIBLE:
                logger.warning(f"t = {t} s : aucune consigne admissible, puissance nulle appliquée")

            state = new_state
            counts[status] += 1
            records.append(TickRecord(
                t=t,
                f=m.f,
                v_ac=m.v_ac,
                p0=s0.p,
                q0=s0.q,
                p=s.p,
                q=s.q,
                v_dc=state.v_dc,
                soc=state.soc,
                initial_feasible=initial_feasible,
                latency_us=latency,
                status=status,
            ))

        log = TickLog(records=records)
        metrics = self.metrics_from_log(tick_log_frame(log), base, tick)
        summary = ", ".join(f"{s.value}={n}" for s, n in counts.items() if n)
        logger.info(
            f"Simulation {method.value} terminée : {n_ticks} pas ({summary}), "
            f"TDE={metrics.tde:.3f} kWh, TCE={metrics.tce:.3f} kWh, TSE={metrics.tse:.3f} kWh"
        )
        return log, metrics

    def infer_tick(self, frame: pd.DataFrame, default: float = None) -> float:
        """Période de la boucle déduite de la colonne des temps (arrondie à 1e-9 s)"""
        times = frame["t_s"].to_numpy(dtype=float)
        if len(times) < 2:
            if default is None:
                raise ValueError("impossible de déduire la période d'un journal de moins de deux pas")
            return default
        return round(float(np.median(np.diff(times))), 9)

    def metrics_from_log(self, frame: pd.DataFrame, base: BaseQuantities, tick: float = None) -> EnergyMetrics:
        """
        Énergies déchargée, chargée et maintenue [kWh] à partir d'un journal

        TSE somme |p|·Δt sur les pas dont la consigne initiale était infaisable.

        Args:
            frame: Journal (colonnes p_pu et initial_feasible)
            base: Grandeurs de base (puissance de base)
            tick: Période [s], déduite des temps si None

        Returns:
            Métriques d'énergie
        """
        tick = self.infer_tick(frame) if tick is None else tick
        p = frame["p_pu"].to_numpy(dtype=float)
        sustained = ~frame["initial_feasible"].to_numpy(dtype=bool)
        watts = [from_pu(x, base, QuantityKind.POWER) for x in p]
        to_kwh = tick / 3.6e6

        tde = math.fsum(w for w in watts if w > 0) * to_kwh
        tce = math.fsum(-w for w in watts if w < 0) * to_kwh
        tse = math.fsum(abs(w) for w, out in zip(watts, sustained) if out) * to_kwh
        return EnergyMetrics(tde=tde, tce=tce, tse=tse)


# Instance du service
simulation_service = SimulationService()
