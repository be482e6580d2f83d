"""
Service de banc de latence : optimiseur exact contre projection rapide sur les mêmes entrées
"""
import logging
import time
from pathlib import Path
from typing import List

import numpy as np

from app.core.config import settings
from app.core.models import (
    BatteryState,
    BessConfig,
    CapabilityCurveSet,
    GridMeasurement,
    ProjectionProblem,
    SimulationMethod,
    Trace,
)
from app.core.schemas import BenchReport, HistogramBin, LatencySummary
from app.services.discretizer_service import discretizer_service
from app.services.optimizer_service import optimizer_service
from app.services.simulation_service import simulation_service
from app.storage import files

logger = logging.getLogger(__name__)


class BenchService:
    """Service de mesure des latences des deux méthodes de projection"""

    def __init__(self):
        """Initialisation du service"""
        self.warmup_ticks = settings.BENCH_WARMUP_TICKS
        self.bins = settings.BENCH_HISTOGRAM_BINS

    def histogram(self, latencies_us: List[float]) -> List[HistogramBin]:
        """Histogramme des latences [µs]"""
        if not latencies_us:
            return []
        counts, edges = np.histogram(np.asarray(latencies_us), bins=self.bins)
        return [
            HistogramBin(bin_lo_us=float(lo), bin_hi_us=float(hi), count=int(n))
            for lo, hi, n in zip(edges[:-1], edges[1:], counts)
        ]

    def summary(self, method: str, latencies_us: List[float]) -> LatencySummary:
        """Médiane, 99e centile et maximum des latences"""
        if not latencies_us:
            return LatencySummary(method=method, median_us=0.0, p99_us=0.0, max_us=0.0, count=0)
        values = np.asarray(latencies_us)
        return LatencySummary(
            method=method,
            median_us=float(np.median(values)),
            p99_us=float(np.percentile(values, 99)),
            max_us=float(values.max()),
            count=len(values),
        )

    def bench(
        self,
        trace: Trace,
        config: BessConfig,
        curves: CapabilityCurveSet,
        resolution: float = None
    ) -> BenchReport:
        """
        Mesure la durée de chaque appel de l'optimiseur et de la projection rapide

        La boucle fermée est simulée avec l'optimiseur ; à chaque pas, une sonde
        chronomètre les deux méthodes sur le même problème. Les premiers pas
        (préchauffage) sont exclus.

        Args:
            trace: Trace de mesures
            config: Configuration complète
            curves: Courbes de capabilité
            resolution: Résolution des tables de rayons

        Returns:
            Latences, histogrammes et résumés
        """
        opt_latencies: List[float] = []
        fast_latencies: List[float] = []

        def capture(index: int, prob: ProjectionProblem, m: GridMeasurement, state: BatteryState) -> None:
            ctx = discretizer_service.static_context(
                prob.curve, prob.p_dc_bounds, config.control.eta, m.v_ac, state.v_dc, state.soc
            )
            table = discretizer_service.table_for_state(ctx, config.battery, resolution)

            start = time.perf_counter_ns()
            optimizer_service.solve(prob)
            opt_ns = time.perf_counter_ns() - start

            start = time.perf_counter_ns()
            discretizer_service.fast_project(prob.s0, table)
            fast_ns = time.perf_counter_ns() - start

            if index >= self.warmup_ticks:
                opt_latencies.append(opt_ns / 1000.0)
                fast_latencies.append(fast_ns / 1000.0)

        simulation_service.simulate(trace, SimulationMethod.OPTIMIZER, config, curves, resolution, on_tick=capture)

        summaries = [self.summary("opt", opt_latencies), self.summary("fast", fast_latencies)]
        report = BenchReport(
            opt_latencies_us=opt_latencies,
            fast_latencies_us=fast_latencies,
            opt_histogram=self.histogram(opt_latencies),
            fast_histogram=self.histogram(fast_latencies),
            summaries=summaries,
        )
        for s in summaries:
            logger.info(
                f"Latence {s.method} : médiane {s.median_us:.1f} µs, p99 {s.p99_us:.1f} µs, "
                f"max {s.max_us:.1f} µs ({s.count} appels)"
            )
        return report

    def write_report(self, report: BenchReport, out_dir: Path) -> List[Path]:
        """Écrit latency_opt.csv, latency_fast.csv et latency_summary.csv dans out_dir"""
        out_dir = Path(out_dir)
        return [
            files.write_histogram(report.opt_histogram, out_dir / "latency_opt.csv"),
            files.write_histogram(report.fast_histogram, out_dir / "latency_fast.csv"),
            files.write_latency_summary(report.summaries, out_dir / "latency_summary.csv"),
        ]


# Instance du service
bench_service = BenchService()
