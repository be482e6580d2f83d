"""
Configuration de l'application et chargement du fichier bess.conf
"""
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import ConfigError
from app.core.models import BaseQuantities, BessConfig, ControlParams, DroopConfig, TTCParams
from app.storage.conf_reader import ConfEntry, read_conf_file, read_conf_text

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Configuration principale de l'application"""

    # Nom et version de l'application
    APP_NAME: str = "BESS Setpoint Projector"
    APP_VERSION: str = "0.1.0"

    # Configuration du journal
    LOG_LEVEL: str = "INFO"

    # Fichiers par défaut
    DEFAULT_CONFIG_PATH: Path = Path("./bess.conf")

    # Tolérances du solveur
    CONSTRAINT_TOL: float = 1e-8
    MAX_PROJECTION_SWEEPS: int = 10_000
    PROJECTION_METHOD: str = "active_set"  # "active_set" ou "dykstra"

    # Discrétisation
    BISECTION_ITERATIONS: int = 60
    RAY_UPPER_BOUND_PU: float = 2.0
    TABLE_RESOLUTION_DEG: float = 1.0
    SOC_REBUILD_MARGIN: float = 0.02
    TABLE_CACHE_SIZE: int = 64

    # Oracle
    ORACLE_REFINE_LEVELS: int = 2

    # Générateur de traces (Ornstein-Uhlenbeck)
    OU_REVERSION: float = 0.1  # 1/s
    OU_F_VOLATILITY: float = 0.02  # Hz/sqrt(s)
    OU_V_VOLATILITY: float = 0.002  # pu/sqrt(s)

    # Banc de latence
    BENCH_WARMUP_TICKS: int = 100
    BENCH_HISTOGRAM_BINS: int = 50

    # Barre de progression pendant les simulations
    SHOW_PROGRESS: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


# Instance de configuration globale
settings = Settings()


def _float(raw: str) -> float:
    return float(raw)


def _table(raw: str) -> Tuple[Tuple[float, float], ...]:
    """Table "i1:c1, i2:c2, ..." -> ((i1, c1), (i2, c2), ...)"""
    pairs = []
    for item in raw.split(","):
        current, sep, capacity = item.strip().partition(":")
        if not sep:
            raise ValueError(f"couple invalide {item.strip()!r} (attendu courant:capacité)")
        pairs.append((float(current), float(capacity)))
    return tuple(pairs)


def _triple(raw: str) -> Tuple[float, float, float]:
    values = tuple(float(x) for x in raw.split())
    if len(values) != 3:
        raise ValueError("trois valeurs attendues")
    return values


def _text(raw: str) -> str:
    return raw


def _format_table(table: Tuple[Tuple[float, float], ...]) -> str:
    return ", ".join(f"{i!r}:{c!r}" for i, c in table)


def _format_triple(values: Tuple[float, float, float]) -> str:
    return " ".join(repr(v) for v in values)


# (clé du fichier, section du modèle, champ, lecteur, écrivain, obligatoire)
FIELD_MAP: List[Tuple[str, str, str, Callable[[str], Any], Callable[[Any], str], bool]] = [
    ("base.s_va", "base", "s_base", _float, repr, True),
    ("base.vdc_v", "base", "v_dc_base", _float, repr, True),
    ("base.vac_v", "base", "v_ac_base", _float, repr, True),
    ("base.f_hz", "base", "f_nom", _float, repr, True),
    ("control.delta_t_s", "control", "delta_t", _float, repr, True),
    ("control.tick_s", "control", "tick", _float, repr, True),
    ("control.eta", "control", "eta", _float, repr, True),
    ("control.xi", "control", "xi", _float, repr, True),
    ("droop.alpha_mw_per_hz", "droop", "alpha", _float, repr, False),
    ("droop.beta_kvar_per_v", "droop", "beta", _float, repr, False),
    ("droop.db_f_hz", "droop", "db_f", _float, repr, False),
    ("droop.db_v_v", "droop", "db_v", _float, repr, False),
    ("droop.p_max_pu", "droop", "p_max", _float, repr, False),
    ("droop.q_max_pu", "droop", "q_max", _float, repr, False),
    ("battery.rs_pu", "battery", "r_s", _float, repr, False),
    ("battery.r1_pu", "battery", "r_1", _float, repr, False),
    ("battery.r2_pu", "battery", "r_2", _float, repr, False),
    ("battery.r3_pu", "battery", "r_3", _float, repr, False),
    ("battery.c1_pu", "battery", "c_1", _float, repr, False),
    ("battery.c2_pu", "battery", "c_2", _float, repr, False),
    ("battery.c3_pu", "battery", "c_3", _float, repr, False),
    ("battery.ocv_a_pu", "battery", "a", _float, repr, False),
    ("battery.ocv_b_pu", "battery", "b", _float, repr, False),
    ("battery.cmax_table", "battery", "c_max_table", _table, _format_table, False),
    ("battery.soc_min", "battery", "soc_min", _float, repr, False),
    ("battery.soc_max", "battery", "soc_max", _float, repr, False),
    ("battery.vdc_min_pu", "battery", "v_dc_min", _float, repr, False),
    ("battery.vdc_max_pu", "battery", "v_dc_max", _float, repr, False),
    ("battery.soc_init", "state", "soc_init", _float, repr, False),
    ("battery.vc_init_pu", "state", "vc_init", _triple, _format_triple, False),
    ("curves.path", "state", "curves_path", _text, str, False),
]


SECTION_MODELS: Dict[str, Type[BaseModel]] = {
    "base": BaseQuantities,
    "control": ControlParams,
    "droop": DroopConfig,
    "battery": TTCParams,
}


def _index_entries(entries: List[ConfEntry]) -> Dict[str, ConfEntry]:
    """Indexe les entrées par clé complète, en refusant les doublons et les clés inconnues"""
    known = {key for key, *_ in FIELD_MAP}
    indexed: Dict[str, ConfEntry] = {}
    for entry in entries:
        if entry.key not in known:
            raise ConfigError(entry.key, entry.line, "clé inconnue")
        if entry.key in indexed:
            raise ConfigError(entry.key, entry.line, f"clé déjà définie ligne {indexed[entry.key].line}")
        indexed[entry.key] = entry
    return indexed


def build_config(entries: List[ConfEntry]) -> BessConfig:
    """
    Valide les entrées lues et construit la configuration complète

    Args:
        entries: Entrées (clé, valeur, ligne) lues dans le fichier

    Returns:
        Configuration validée

    Raises:
        ConfigError: Clé manquante, valeur mal formée ou hors bornes
    """
    indexed = _index_entries(entries)
    values: Dict[str, Dict[str, Any]] = {name: {} for name in list(SECTION_MODELS) + ["state"]}
    lines: Dict[Tuple[str, str], Tuple[str, Optional[int]]] = {}

    for key, section, field, reader, _, required in FIELD_MAP:
        lines[(section, field)] = (key, None)
        entry = indexed.get(key)
        if entry is None:
            if required:
                raise ConfigError(key, None, "clé manquante")
            continue
        lines[(section, field)] = (key, entry.line)
        try:
            values[section][field] = reader(entry.value)
        except ValueError as e:
            raise ConfigError(key, entry.line, f"valeur invalide {entry.value!r}: {e}")

    models: Dict[str, BaseModel] = {}
    for section, model_cls in SECTION_MODELS.items():
        try:
            models[section] = model_cls(**values[section])
        except ValidationError as e:
            error = e.errors()[0]
            field = str(error["loc"][0]) if error["loc"] else ""
            key, line = lines.get((section, field), (section, None))
            raise ConfigError(key, line, error["msg"])

    try:
        return BessConfig(**models, **values["state"])
    except ValidationError as e:
        error = e.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else ""
        key, line = lines.get(("state", field), ("battery", None))
        raise ConfigError(key, line, error["msg"])


def load_config(path: Path) -> BessConfig:
    """
    Charge et valide un fichier de configuration bess.conf

    Args:
        path: Chemin du fichier

    Returns:
        Configuration validée (grandeurs de base, contrôle, statisme, batterie)
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(None, None, f"fichier de configuration introuvable: {path}")
    config = build_config(read_conf_file(path))
    logger.debug(f"Configuration chargée depuis {path}")
    return config


def parse_config(text: str) -> BessConfig:
    """Variante de load_config travaillant sur le texte du fichier"""
    return build_config(read_conf_text(text))


def dump_config(config: BessConfig) -> str:
    """
    Sérialise une configuration au format bess.conf

    Le rechargement du texte produit redonne une configuration identique.
    """
    sources: Dict[str, BaseModel] = {
        "base": config.base,
        "control": config.control,
        "droop": config.droop,
        "battery": config.battery,
        "state": config,
    }
    lines: List[str] = []
    current_section = None
    for key, section, field, _, writer, _ in FIELD_MAP:
        value = getattr(sources[section], field)
        if value is None:
            continue
        file_section, name = key.split(".", 1)
        if file_section != current_section:
            if lines:
                lines.append("")
            lines.append(f"[{file_section}]")
            current_section = file_section
        lines.append(f"{name} = {writer(value)}")
    return "\n".join(lines) + "\n"
