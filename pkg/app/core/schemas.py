"""
Schémas Pydantic des fichiers CSV et des sorties de la ligne de commande
"""
import math
from typing import List

from pydantic import BaseModel

from app.core.models import ProjectionResult, Setpoint

# Colonnes des fichiers CSV
TRACE_COLUMNS: List[str] = ["t_s", "f_hz", "vac_pu"]
TICK_LOG_COLUMNS: List[str] = [
    "t_s", "f_hz", "vac_pu", "p0_pu", "q0_pu", "p_pu", "q_pu",
    "vdc_pu", "soc", "initial_feasible", "latency_us", "status",
]
METRICS_COLUMNS: List[str] = ["tde_kwh", "tce_kwh", "tse_kwh"]
TABLE_COLUMNS: List[str] = ["deg", "smax_pu"]
HISTOGRAM_COLUMNS: List[str] = ["bin_lo_us", "bin_hi_us", "count"]
SUMMARY_COLUMNS: List[str] = ["method", "median_us", "p99_us", "max_us", "count"]


class ProjectOutput(BaseModel):
    """Ligne imprimée par la commande `project`"""
    p: float
    q: float
    tight: bool
    status: str

    @classmethod
    def from_result(cls, result: ProjectionResult) -> "ProjectOutput":
        """Crée la sortie à partir d'un résultat de l'optimiseur"""
        return cls(p=result.s.p, q=result.s.q, tight=result.tight, status=result.status.value)

    @classmethod
    def from_setpoint(cls, s: Setpoint, tight: bool, status: str) -> "ProjectOutput":
        """Crée la sortie à partir d'une consigne de la méthode rapide"""
        return cls(p=s.p, q=s.q, tight=tight, status=status)

    def to_csv_line(self) -> str:
        return f"{self.p!r},{self.q!r},{str(self.tight).lower()},{self.status}"


class HistogramBin(BaseModel):
    """Classe d'un histogramme de latence [µs]"""
    bin_lo_us: float
    bin_hi_us: float
    count: int


class LatencySummary(BaseModel):
    """Résumé statistique des latences d'une méthode [µs]"""
    method: str
    median_us: float
    p99_us: float
    max_us: float
    count: int


class BenchReport(BaseModel):
    """Résultat complet d'un banc de latence"""
    opt_latencies_us: List[float]
    fast_latencies_us: List[float]
    opt_histogram: List[HistogramBin]
    fast_histogram: List[HistogramBin]
    summaries: List[LatencySummary]

    @property
    def median_ratio(self) -> float:
        """Rapport des médianes optimiseur / méthode rapide"""
        by_method = {s.method: s for s in self.summaries}
        fast = by_method["fast"].median_us
        return by_method["opt"].median_us / fast if fast > 0 else math.inf
