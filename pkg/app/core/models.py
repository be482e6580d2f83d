"""
Modèles de données principaux
"""
import hashlib
import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, ValidationInfo, field_validator, model_validator


class FrozenModel(BaseModel):
    """Base des modèles immuables (partageables entre threads)"""
    model_config = ConfigDict(frozen=True)


class BaseQuantities(FrozenModel):
    """Grandeurs de base du système per-unit"""
    s_base: float = Field(720_000.0, gt=0)  # VA
    v_dc_base: float = Field(700.0, gt=0)  # V
    v_ac_base: float = Field(300.0, gt=0)  # V, côté basse tension du transformateur
    f_nom: float = Field(50.0, gt=0)  # Hz

    @property
    def i_base(self) -> float:
        """Courant de base côté DC [A]"""
        return self.s_base / self.v_dc_base


class Setpoint(FrozenModel):
    """Consigne de puissance (P, Q) en per-unit, P > 0 = décharge"""
    p: FiniteFloat
    q: FiniteFloat

    @property
    def magnitude(self) -> float:
        return math.hypot(self.p, self.q)

    def is_zero(self) -> bool:
        return self.p == 0.0 and self.q == 0.0


class GridMeasurement(FrozenModel):
    """Mesure horodatée de fréquence et de tension AC"""
    t: float  # s
    f: float = Field(gt=45.0, lt=55.0)  # Hz
    v_ac: float = Field(gt=0.5, lt=1.5)  # pu


class ControlParams(FrozenModel):
    """Paramètres de la boucle de contrôle"""
    delta_t: float = Field(0.05, gt=0)  # pas interne [s]
    tick: float = Field(0.1, gt=0)  # période de la boucle [s]
    eta: float = Field(0.95, gt=0, le=1)
    xi: float = Field(1e-6, gt=0)

    @field_validator("tick")
    @classmethod
    def tick_covers_delta_t(cls, v: float, info: ValidationInfo) -> float:
        delta_t = info.data.get("delta_t")
        if delta_t is not None and delta_t > v:
            raise ValueError("la période doit être supérieure ou égale au pas interne delta_t")
        return v


class DroopConfig(FrozenModel):
    """Coefficients et bandes mortes du statisme"""
    alpha: float = -8.0  # MW/Hz, signé
    beta: float = -8.39  # kVar/V, signé
    db_f: float = Field(0.01, ge=0)  # Hz
    db_v: float = Field(1.0, ge=0)  # V
    p_max: float = Field(1.0, gt=0)  # pu
    q_max: float = Field(1.0, gt=0)  # pu


class TTCParams(FrozenModel):
    """Paramètres du modèle de batterie à trois constantes de temps"""
    r_s: float = Field(0.04, gt=0, lt=0.045)
    r_1: float = Field(0.01, gt=0)
    r_2: float = Field(0.01, gt=0)
    r_3: float = Field(0.01, gt=0)
    c_1: float = Field(10.0, gt=0)
    c_2: float = Field(100.0, gt=0)
    c_3: float = Field(1000.0, gt=0)
    a: float = 0.90
    b: float = 0.15
    # (courant [pu], capacité [A·h])
    c_max_table: Tuple[Tuple[float, float], ...] = ((0.0, 800.0), (1.0, 800.0), (2.0, 780.0))
    soc_min: float = Field(0.1, ge=0, le=1)
    soc_max: float = Field(0.9, ge=0, le=1)
    v_dc_min: float = Field(600.0 / 700.0, gt=0)
    v_dc_max: float = Field(800.0 / 700.0, gt=0)

    @field_validator("c_max_table")
    @classmethod
    def check_table(cls, v: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        if len(v) < 2:
            raise ValueError("la table de capacité doit contenir au moins 2 points")
        currents = [i for i, _ in v]
        if any(b <= a for a, b in zip(currents, currents[1:])):
            raise ValueError("la table de capacité doit être triée par courant croissant")
        if any(c <= 0 for _, c in v):
            raise ValueError("les capacités doivent être strictement positives")
        return v

    @field_validator("soc_max")
    @classmethod
    def check_soc_order(cls, v: float, info: ValidationInfo) -> float:
        soc_min = info.data.get("soc_min")
        if soc_min is not None and v <= soc_min:
            raise ValueError("soc_max doit être strictement supérieur à soc_min")
        return v

    @field_validator("v_dc_max")
    @classmethod
    def check_vdc_order(cls, v: float, info: ValidationInfo) -> float:
        v_min = info.data.get("v_dc_min")
        if v_min is not None and v <= v_min:
            raise ValueError("v_dc_max doit être strictement supérieur à v_dc_min")
        return v

    @property
    def branches(self) -> Tuple[Tuple[float, float], ...]:
        """Couples (R_k, C_k) des trois branches RC"""
        return ((self.r_1, self.c_1), (self.r_2, self.c_2), (self.r_3, self.c_3))


class BatteryState(FrozenModel):
    """État de la batterie (valeur, jamais modifiée en place)"""
    soc: float = Field(ge=0, le=1)
    vc: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # pu
    v_dc: float = Field(gt=0)  # pu
    i_prev: float = 0.0  # pu

    @property
    def vc_sum(self) -> float:
        return self.vc[0] + self.vc[1] + self.vc[2]


class HalfSpace(FrozenModel):
    """Demi-plan a·P + b·Q <= c"""
    a: float
    b: float
    c: float

    @model_validator(mode="after")
    def check_normal(self) -> "HalfSpace":
        if self.a == 0.0 and self.b == 0.0:
            raise ValueError("demi-plan dégénéré (a = b = 0)")
        return self


class Disk(FrozenModel):
    """Disque (P - p0)² + (Q - q0)² <= r²"""
    p0: float
    q0: float
    r: float = Field(gt=0)


class CapabilityCurve(FrozenModel):
    """Région convexe (P, Q) du convertisseur pour un couple de tensions"""
    v_ac_key: float
    v_dc_key: float
    halfspaces: Tuple[HalfSpace, ...] = ()
    disks: Tuple[Disk, ...]
    soc_scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def check_region(self) -> "CapabilityCurve":
        if not self.disks:
            raise ValueError("au moins un disque est requis")
        # L'origine doit être strictement intérieure
        margin = max(
            [-h.c for h in self.halfspaces] + [math.hypot(d.p0, d.q0) - d.r for d in self.disks]
        )
        if margin >= 0:
            raise ValueError("l'origine n'est pas strictement intérieure à la région")
        return self

    def scaled_halfspaces(self) -> List[Tuple[float, float, float]]:
        """Demi-plans dans les coordonnées réelles (facteur soc_scale appliqué)"""
        s = self.soc_scale
        return [(h.a, h.b, h.c * s) for h in self.halfspaces]

    def scaled_disks(self) -> List[Tuple[float, float, float]]:
        """Disques dans les coordonnées réelles (facteur soc_scale appliqué)"""
        s = self.soc_scale
        return [(d.p0 * s, d.q0 * s, d.r * s) for d in self.disks]

    def canonical_key(self) -> str:
        """Représentation JSON canonique (pour les empreintes)"""
        return json.dumps(self.model_dump(), sort_keys=True)


class CapabilityCurveSet(FrozenModel):
    """Famille de courbes indexée par (v_ac, v_dc)"""
    curves: Tuple[CapabilityCurve, ...]

    @field_validator("curves")
    @classmethod
    def check_curves(cls, v: Tuple[CapabilityCurve, ...]) -> Tuple[CapabilityCurve, ...]:
        if not v:
            raise ValueError("l'ensemble de courbes est vide")
        keys = [(c.v_ac_key, c.v_dc_key) for c in v]
        if len(set(keys)) != len(keys):
            raise ValueError("clés (vac, vdc) en double")
        return v


class ProjectionStatus(str, Enum):
    """Statut d'une projection"""
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    PASSTHROUGH = "passthrough"


class ProjectionProblem(FrozenModel):
    """Données complètes d'un problème de projection de consigne"""
    s0: Setpoint
    curve: CapabilityCurve
    vc_sum: float
    e: float
    r_s: float = Field(gt=0)
    eta: float = Field(gt=0, le=1)
    p_dc_bounds: Tuple[float, float]
    v_bounds: Tuple[float, float]
    xi: float = Field(1e-6, gt=0)

    @field_validator("v_bounds")
    @classmethod
    def check_v_bounds(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not v[0] < v[1]:
            raise ValueError("bornes de tension non ordonnées")
        return v

    @field_validator("p_dc_bounds")
    @classmethod
    def check_p_bounds(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] > v[1]:
            raise ValueError("bornes de puissance DC non ordonnées")
        return v

    @property
    def branch_gain(self) -> float:
        """Gain P_dc / P_ac de la branche choisie par le signe de la consigne initiale"""
        return self.eta if self.s0.p < 0 else 1.0 / self.eta


class ProjectionResult(FrozenModel):
    """Résultat d'une projection"""
    s: Setpoint
    v_dc: float
    p_dc: float
    objective: float
    tight: bool
    status: ProjectionStatus


class TableContext(FrozenModel):
    """Contexte pour lequel une table de rayons a été construite"""
    v_ac: float
    v_dc: float
    soc: float
    curve_hash: str = ""


class RayTable(FrozenModel):
    """Table des rayons maximaux, indice k <-> angle k·resolution (k = 1..N)"""
    smax: Tuple[float, ...]
    resolution_deg: float = Field(1.0, gt=0)
    context: TableContext
    # Plus petit rayon de la table, toujours recalculé depuis smax
    inner_radius: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def derive_inner_radius(cls, data: Any) -> Any:
        if isinstance(data, dict):
            smax = data.get("smax")
            if smax is not None and len(smax) > 0:
                data = {**data, "inner_radius": min(float(r) for r in smax)}
        return data

    @model_validator(mode="after")
    def check_entries(self) -> "RayTable":
        expected = round(360.0 / self.resolution_deg)
        if len(self.smax) != expected:
            raise ValueError(f"la table doit contenir {expected} entrées")
        if any(not math.isfinite(r) or r < 0 for r in self.smax):
            raise ValueError("entrées de table négatives ou non finies")
        return self

    def entry(self, angle_deg: float) -> float:
        """Rayon maximal pour un angle multiple de la résolution"""
        return self.smax[round(angle_deg / self.resolution_deg) - 1]


class StaticContext(FrozenModel):
    """Contexte statique de discrétisation (tension et SoC mesurés)"""
    curve: CapabilityCurve
    p_dc_bounds: Tuple[float, float]
    eta: float = Field(gt=0, le=1)
    v_ac: float
    v_dc: float
    soc: float


class OUParams(FrozenModel):
    """Paramètres des processus d'Ornstein-Uhlenbeck du générateur de traces"""
    reversion: float = Field(0.1, ge=0)  # 1/s
    f_volatility: float = Field(0.02, ge=0)  # Hz/sqrt(s)
    v_volatility: float = Field(0.002, ge=0)  # pu/sqrt(s)
    f_mean: float = 50.0
    v_mean: float = 1.0


class Trace(FrozenModel):
    """Trace de mesures réseau à pas uniforme"""
    samples: Tuple[GridMeasurement, ...]
    dt: float = Field(gt=0)

    @model_validator(mode="after")
    def check_spacing(self) -> "Trace":
        if not self.samples:
            raise ValueError("trace vide")
        for prev, cur in zip(self.samples, self.samples[1:]):
            if abs((cur.t - prev.t) - self.dt) > 1e-6:
                raise ValueError(f"pas non uniforme à t = {cur.t}")
        return self

    @property
    def duration(self) -> float:
        return len(self.samples) * self.dt


class SimulationMethod(str, Enum):
    """Méthode de projection utilisée dans la boucle fermée"""
    OPTIMIZER = "opt"
    FAST = "fast"
    BASELINE = "baseline"


class TickStatus(str, Enum):
    """Statut d'un pas de contrôle"""
    IDLE = "idle"
    PASSTHROUGH = "passthrough"
    PROJECTED = "projected"
    INFEASIBLE = "infeasible"
    ZEROED = "zeroed"
    PLANT_INFEASIBLE = "plant_infeasible"
    SOC_VIOLATION = "soc_violation"


class TickRecord(FrozenModel):
    """Enregistrement d'un pas de contrôle"""
    t: float
    f: float
    v_ac: float
    p0: float
    q0: float
    p: float
    q: float
    v_dc: float
    soc: float = Field(ge=0, le=1)
    initial_feasible: bool
    latency_us: float
    status: TickStatus


class TickLog(BaseModel):
    """Journal d'une simulation (un enregistrement par pas)"""
    records: List[TickRecord] = []

    def column(self, name: str) -> List[Any]:
        return [getattr(r, name) for r in self.records]


class EnergyMetrics(FrozenModel):
    """Énergies déchargée, chargée et maintenue [kWh]"""
    tde: float = Field(ge=0)
    tce: float = Field(ge=0)
    tse: float = Field(ge=0)

    @model_validator(mode="after")
    def check_tse(self) -> "EnergyMetrics":
        if self.tse > self.tde + self.tce + 1e-9:
            raise ValueError("TSE ne peut excéder TDE + TCE")
        return self


class BessConfig(FrozenModel):
    """Configuration complète chargée depuis bess.conf"""
    base: BaseQuantities = BaseQuantities()
    control: ControlParams = ControlParams()
    droop: DroopConfig = DroopConfig()
    battery: TTCParams = TTCParams()
    soc_init: float = Field(0.5, ge=0, le=1)
    vc_init: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    curves_path: Optional[str] = None


class CacheKey(BaseModel):
    """Clé de cache pour les tables de rayons"""
    service: str
    query: str
    params: Dict[str, Any] = {}

    def get_key(self) -> str:
        """Génère une clé unique pour cette requête"""
        key_dict = {
            "service": self.service,
            "query": self.query,
            "params": self.params
        }
        key_str = json.dumps(key_dict, sort_keys=True)
        return hashlib.md5(key_str.encode()).hexdigest()
