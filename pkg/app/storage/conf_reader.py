"""
Lecture du format texte à sections (`[section]`, `clé = valeur`, commentaires `#`)

Le lecteur conserve les numéros de ligne pour que les erreurs de validation
puissent désigner la ligne fautive.
"""
from pathlib import Path
from typing import List, NamedTuple

from app.core.exceptions import ConfigError


class ConfEntry(NamedTuple):
    """Une affectation `clé = valeur` du fichier"""
    key: str  # clé complète "section.nom"
    name: str  # nom sans la section
    value: str
    line: int
    block: int  # rang de la section (les sections répétées ont des rangs distincts)


class ConfSection(NamedTuple):
    """Une section et ses affectations"""
    name: str
    line: int
    entries: List[ConfEntry]


def read_conf_sections(text: str) -> List[ConfSection]:
    """
    Découpe le texte en sections

    Args:
        text: Contenu du fichier

    Returns:
        Liste des sections dans l'ordre du fichier; les affectations placées
        avant toute section sont regroupées dans une section de nom vide

    Raises:
        ConfigError: Ligne mal formée
    """
    sections: List[ConfSection] = [ConfSection("", 0, [])]
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(None, number, f"en-tête de section invalide: {raw.strip()!r}")
            sections.append(ConfSection(line[1:-1].strip(), number, []))
            continue
        name, sep, value = line.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(None, number, f"ligne mal formée: {raw.strip()!r}")
        section = sections[-1]
        key = f"{section.name}.{name}" if section.name else name
        section.entries.append(ConfEntry(key, name, value.strip(), number, len(sections) - 1))
    if not sections[0].entries:
        sections.pop(0)
    return sections


def read_conf_text(text: str) -> List[ConfEntry]:
    """Toutes les affectations du texte, sections aplaties"""
    return [entry for section in read_conf_sections(text) for entry in section.entries]


def read_conf_file(path: Path) -> List[ConfEntry]:
    """Toutes les affectations d'un fichier, sections aplaties"""
    return read_conf_text(Path(path).read_text(encoding="utf-8"))
