"""
Hiérarchie des erreurs de l'application
"""
from typing import Optional


class BessError(Exception):
    """Erreur de base du projecteur de consignes"""


class UnknownQuantityError(BessError, ValueError):
    """Type de grandeur inconnu pour la conversion en per-unit"""


class ConfigError(BessError):
    """Erreur de lecture ou de validation d'un fichier de configuration"""

    def __init__(self, key: Optional[str], line: Optional[int], reason: str):
        self.key = key
        self.line = line
        self.reason = reason
        where = f"ligne {line}" if line is not None else "ligne inconnue"
        name = key if key else "<fichier>"
        super().__init__(f"{name} ({where}): {reason}")


class CurveFileError(ConfigError):
    """Erreur de lecture ou d'invariant dans un fichier de courbes de capabilité"""

    def __init__(self, line: Optional[int], reason: str, key: Optional[str] = None):
        super().__init__(key or "curve", line, reason)


class InfeasibleError(BessError):
    """
    Aucun point de fonctionnement admissible.

    reason vaut "discriminant" (pas de racine réelle), "bounds" (racine hors des
    bornes de tension DC) ou "region" (région de capabilité vide).
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        message = f"infaisable ({reason})"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class SolverDivergenceError(BessError):
    """Le nombre maximal de balayages de projection a été dépassé"""
