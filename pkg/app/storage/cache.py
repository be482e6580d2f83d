"""
Cache mémoire des tables de rayons
"""
import logging
from collections import OrderedDict
from functools import wraps
from typing import Any, Callable, Dict, Optional, Tuple, TypeVar, cast

from app.core.config import settings
from app.core.models import CacheKey

logger = logging.getLogger(__name__)

T = TypeVar('T')

# Entrées du cache, de la plus ancienne à la plus récente
_entries: "OrderedDict[str, Any]" = OrderedDict()


def get_or_create_cache(
    service: str,
    query: str,
    params: Dict[str, Any] = None,
    creator_func: Callable[[], T] = None,
    max_size: int = None
) -> Optional[T]:
    """
    Retourne l'entrée associée à la clé (service, requête, paramètres), en la
    construisant au premier appel

    Args:
        service: Nom du service (par exemple 'discretizer')
        query: Nom de la requête
        params: Paramètres identifiant l'entrée (sérialisés en JSON)
        creator_func: Constructeur appelé en cas d'absence
        max_size: Nombre maximal d'entrées (utilise la valeur par défaut si None)

    Returns:
        L'entrée, ou None si elle est absente et qu'aucun constructeur n'est fourni
    """
    if params is None:
        params = {}

    cache_key = CacheKey(service=service, query=query, params=params)
    key = cache_key.get_key()

    # Vérifier si l'entrée existe dans le cache
    if key in _entries:
        _entries.move_to_end(key)
        return cast(T, _entries[key])

    # Si la valeur n'existe pas et qu'une fonction de création est fournie
    if creator_func:
        value = creator_func()
        _entries[key] = value
        limit = max_size or settings.TABLE_CACHE_SIZE
        while len(_entries) > limit:
            _entries.popitem(last=False)
        logger.debug(f"Entrée ajoutée au cache {service}/{query} ({len(_entries)} entrées)")
        return value

    return None


def cache_response(
    service: str,
    key_func: Callable[..., Tuple[str, Dict[str, Any]]],
    max_size: int = None
):
    """
    Décorateur pour mettre en cache les résultats des fonctions

    Args:
        service: Nom du service
        key_func: Fonction générant (requête, paramètres) à partir des arguments
        max_size: Nombre maximal d'entrées conservées

    Returns:
        Décorateur
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            query, params = key_func(*args, **kwargs)
            return get_or_create_cache(
                service=service,
                query=query,
                params=params,
                creator_func=lambda: func(*args, **kwargs),
                max_size=max_size
            )

        return wrapper

    return decorator


def cache_size() -> int:
    """Nombre d'entrées actuellement en cache"""
    return len(_entries)


def clear_cache() -> None:
    """Vide le cache"""
    _entries.clear()
