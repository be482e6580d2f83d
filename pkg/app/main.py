"""
Point d'entrée principal de l'application (python -m app.main <commande>)
"""
import logging
import sys
from typing import List, Optional

from app.cli.commands import run
from app.core.config import settings

# Configuration du logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    """Lance la commande demandée et retourne son code de sortie"""
    logger.debug(f"Démarrage de {settings.APP_NAME} v{settings.APP_VERSION}")
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
