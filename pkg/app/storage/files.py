"""
Lecture et écriture des fichiers CSV (traces, journaux, métriques, tables, histogrammes)
"""
import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from app.core.exceptions import ConfigError
from app.core.models import EnergyMetrics, GridMeasurement, RayTable, TableContext, TickLog, Trace
from app.core.schemas import (
    HISTOGRAM_COLUMNS,
    METRICS_COLUMNS,
    SUMMARY_COLUMNS,
    TABLE_COLUMNS,
    TICK_LOG_COLUMNS,
    TRACE_COLUMNS,
    HistogramBin,
    LatencySummary,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_csv(path: PathLike, columns: List[str], **kwargs) -> pd.DataFrame:
    """Lit un CSV en conservant les flottants à l'identique et vérifie ses colonnes"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(None, None, f"fichier introuvable: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip", **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigError(None, None, f"{path}: CSV illisible ({e})")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ConfigError(None, 1, f"{path}: colonnes manquantes {missing}")
    return frame


def _write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


# --- Traces ---

def trace_frame(trace: Trace) -> pd.DataFrame:
    """Convertit une trace en DataFrame (colonnes t_s, f_hz, vac_pu)"""
    return pd.DataFrame(
        {
            "t_s": [m.t for m in trace.samples],
            "f_hz": [m.f for m in trace.samples],
            "vac_pu": [m.v_ac for m in trace.samples],
        },
        columns=TRACE_COLUMNS,
    )


def write_trace(trace: Trace, path: PathLike) -> Path:
    """Écrit une trace au format CSV"""
    path = _write_csv(trace_frame(trace), path)
    logger.info(f"Trace de {len(trace.samples)} échantillons écrite dans {path}")
    return path


def read_trace(path: PathLike, default_dt: float = 0.1) -> Trace:
    """
    Lit une trace CSV

    Args:
        path: Chemin du fichier
        default_dt: Pas utilisé si la trace ne contient qu'un échantillon

    Returns:
        Trace validée (pas uniforme)
    """
    frame = _read_csv(path, TRACE_COLUMNS)
    if frame.empty:
        raise ConfigError(None, None, f"{path}: trace vide")
    times = frame["t_s"].to_numpy(dtype=float)
    dt = round(float(np.median(np.diff(times))), 9) if len(times) > 1 else default_dt
    try:
        samples = tuple(
            GridMeasurement(t=t, f=f, v_ac=v)
            for t, f, v in zip(times, frame["f_hz"], frame["vac_pu"])
        )
        return Trace(samples=samples, dt=dt)
    except ValueError as e:
        raise ConfigError(None, None, f"{path}: trace invalide ({e})")


# --- Journaux de simulation ---

def tick_log_frame(log: TickLog) -> pd.DataFrame:
    """Convertit un journal de simulation en DataFrame aux colonnes du fichier"""
    rows = [
        (r.t, r.f, r.v_ac, r.p0, r.q0, r.p, r.q, r.v_dc, r.soc,
         r.initial_feasible, r.latency_us, r.status.value)
        for r in log.records
    ]
    return pd.DataFrame(rows, columns=TICK_LOG_COLUMNS)


def write_tick_log(log: TickLog, path: PathLike) -> Path:
    """Écrit un journal de simulation au format CSV"""
    path = _write_csv(tick_log_frame(log), path)
    logger.info(f"Journal de {len(log.records)} pas écrit dans {path}")
    return path


def read_tick_log(path: PathLike) -> pd.DataFrame:
    """Lit un journal de simulation (les flottants sont relus à l'identique)"""
    frame = _read_csv(path, TICK_LOG_COLUMNS)
    if frame["initial_feasible"].dtype != bool:
        frame["initial_feasible"] = frame["initial_feasible"].astype(str).str.lower() == "true"
    return frame


# --- Métriques ---

def write_metrics(metrics: EnergyMetrics, path: PathLike) -> Path:
    """Écrit les métriques d'énergie [kWh]"""
    frame = pd.DataFrame([[metrics.tde, metrics.tce, metrics.tse]], columns=METRICS_COLUMNS)
    return _write_csv(frame, path)


def read_metrics(path: PathLike) -> EnergyMetrics:
    """Lit un fichier de métriques d'énergie"""
    row = _read_csv(path, METRICS_COLUMNS).iloc[0]
    return EnergyMetrics(tde=float(row["tde_kwh"]), tce=float(row["tce_kwh"]), tse=float(row["tse_kwh"]))


# --- Tables de rayons ---

def write_table(table: RayTable, path: PathLike) -> Path:
    """
    Écrit une table de rayons, précédée d'un en-tête de commentaires décrivant son contexte

    Args:
        table: Table à écrire
        path: Chemin du fichier

    Returns:
        Chemin écrit
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    context = table.context
    header = [
        f"# v_ac = {context.v_ac!r}",
        f"# v_dc = {context.v_dc!r}",
        f"# soc = {context.soc!r}",
        f"# curve_hash = {context.curve_hash}",
        f"# resolution_deg = {table.resolution_deg!r}",
    ]
    degrees = [k * table.resolution_deg for k in range(1, len(table.smax) + 1)]
    frame = pd.DataFrame({"deg": degrees, "smax_pu": list(table.smax)}, columns=TABLE_COLUMNS)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(header) + "\n")
        frame.to_csv(handle, index=False)
    logger.info(f"Table de {len(table.smax)} rayons écrite dans {path}")
    return path


def _read_table_header(path: Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            name, sep, value = line[1:].partition("=")
            if sep:
                values[name.strip()] = value.strip()
    return values


def read_table(path: PathLike) -> RayTable:
    """Relit une table de rayons écrite par write_table"""
    frame = _read_csv(path, TABLE_COLUMNS, comment="#")
    header = _read_table_header(Path(path))
    try:
        context = TableContext(
            v_ac=float(header["v_ac"]),
            v_dc=float(header["v_dc"]),
            soc=float(header["soc"]),
            curve_hash=header.get("curve_hash", ""),
        )
        resolution = float(header.get("resolution_deg", 1.0))
        return RayTable(
            smax=tuple(float(r) for r in frame["smax_pu"]),
            resolution_deg=resolution,
            context=context,
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(None, None, f"{path}: table invalide ({e})")


# --- Banc de latence ---

def write_histogram(bins: List[HistogramBin], path: PathLike) -> Path:
    """Écrit un histogramme de latence"""
    frame = pd.DataFrame([b.model_dump() for b in bins], columns=HISTOGRAM_COLUMNS)
    return _write_csv(frame, path)


def write_latency_summary(summaries: List[LatencySummary], path: PathLike) -> Path:
    """Écrit le résumé (médiane, p99, max) des latences"""
    frame = pd.DataFrame([s.model_dump() for s in summaries], columns=SUMMARY_COLUMNS)
    return _write_csv(frame, path)
