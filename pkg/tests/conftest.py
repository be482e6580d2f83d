"""
Fixtures partagées par les tests
"""
import math
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
import pytest

from app.core.config import load_config
from app.core.models import (
    BatteryState,
    BessConfig,
    CapabilityCurve,
    CapabilityCurveSet,
    Disk,
    HalfSpace,
    ProjectionProblem,
    Setpoint,
)
from app.services.battery_service import battery_service
from app.services.capability_service import capability_service
from app.storage.cache import clear_cache

ROOT_DIR = Path(__file__).resolve().parent.parent
CONFIG_PATH = ROOT_DIR / "bess.conf"
CURVES_PATH = ROOT_DIR / "curves.conf"

# Bornes de puissance DC assez larges pour ne jamais limiter
WIDE_BOUNDS = (-100.0, 100.0)


@pytest.fixture(autouse=True)
def _empty_cache():
    """Chaque test démarre avec un cache de tables vide"""
    clear_cache()
    yield
    clear_cache()


@pytest.fixture(scope="session")
def config() -> BessConfig:
    return load_config(CONFIG_PATH)


@pytest.fixture(scope="session")
def default_curves() -> CapabilityCurveSet:
    return capability_service.load_curves(CURVES_PATH)


@pytest.fixture
def unit_disk() -> CapabilityCurve:
    return CapabilityCurve(v_ac_key=1.0, v_dc_key=1.0, disks=(Disk(p0=0.0, q0=0.0, r=1.0),))


@pytest.fixture
def clipped_disk() -> CapabilityCurve:
    """Disque unité limité à P <= 0.8"""
    return CapabilityCurve(
        v_ac_key=1.0,
        v_dc_key=1.0,
        disks=(Disk(p0=0.0, q0=0.0, r=1.0),),
        halfspaces=(HalfSpace(a=1.0, b=0.0, c=0.8),),
    )


@pytest.fixture
def rest_state(config) -> BatteryState:
    return battery_service.rest_state(config.battery, 0.5)


@pytest.fixture
def make_problem(unit_disk) -> Callable[..., ProjectionProblem]:
    """Fabrique de problèmes de projection (disque unité, bornes larges par défaut)"""
    def factory(
        p0: float,
        q0: float,
        curve: Optional[CapabilityCurve] = None,
        p_dc_bounds: Tuple[float, float] = WIDE_BOUNDS,
        e: float = 0.975,
        vc_sum: float = 0.0,
        v_bounds: Tuple[float, float] = (600.0 / 700.0, 800.0 / 700.0),
        xi: float = 1e-6,
        eta: float = 0.95,
        r_s: float = 0.04,
    ) -> ProjectionProblem:
        return ProjectionProblem(
            s0=Setpoint(p=p0, q=q0),
            curve=curve or unit_disk,
            vc_sum=vc_sum,
            e=e,
            r_s=r_s,
            eta=eta,
            p_dc_bounds=p_dc_bounds,
            v_bounds=v_bounds,
            xi=xi,
        )

    return factory


def random_problem(rng: np.random.Generator, curves: CapabilityCurveSet, config: BessConfig) -> ProjectionProblem:
    """
    Problème aléatoire à consigne initiale hors de la région : courbe, SoC,
    tensions des condensateurs et bornes de tension tirés au hasard
    """
    battery = config.battery
    curve = curves.curves[int(rng.integers(len(curves.curves)))]
    if rng.random() < 0.3:
        curve = curve.model_copy(update={"soc_scale": float(rng.uniform(0.7, 1.0))})

    draw = rng.random()
    if draw < 0.15:
        soc = battery.soc_max
    elif draw < 0.3:
        soc = battery.soc_min
    else:
        soc = float(rng.uniform(0.15, 0.85))
    vc = tuple(float(x) for x in rng.uniform(-0.01, 0.01, 3))
    e = battery_service.ocv(soc, battery)
    state = BatteryState(soc=soc, vc=vc, v_dc=e - sum(vc))
    p_dc_bounds = battery_service.soc_power_bounds(state, battery, config.control.tick, config.base)

    v_bounds = (battery.v_dc_min, battery.v_dc_max)
    if rng.random() < 0.5:
        v_bounds = (float(rng.uniform(0.90, 0.95)), float(rng.uniform(1.0, 1.05)))

    angle = rng.uniform(0.0, 2.0 * math.pi)
    radius = rng.uniform(1.05, 1.6)
    return ProjectionProblem(
        s0=Setpoint(p=radius * math.cos(angle), q=radius * math.sin(angle)),
        curve=curve,
        vc_sum=sum(vc),
        e=e,
        r_s=battery.r_s,
        eta=config.control.eta,
        p_dc_bounds=p_dc_bounds,
        v_bounds=v_bounds,
        xi=config.control.xi,
    )


@pytest.fixture
def sample_problem(default_curves, config) -> Callable[[np.random.Generator], ProjectionProblem]:
    """Tirage de problèmes aléatoires sur les courbes livrées"""
    return lambda rng: random_problem(rng, default_curves, config)


@pytest.fixture(scope="session")
def config_path() -> Path:
    return CONFIG_PATH


@pytest.fixture(scope="session")
def curves_path() -> Path:
    return CURVES_PATH
