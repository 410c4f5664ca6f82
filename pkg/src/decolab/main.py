# src/decolab/main.py
"""
Punto de entrada de la CLI `decolab`.

Códigos de salida: 0 éxito, 1 algún chequeo falló, 2 error de un motor o del
escenario (DecolabError), 3 error inesperado.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .commands import catalog, check, run
from .core.config import settings
from .core.exceptions import DecolabError

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_ENGINE_ERROR = 2
EXIT_INTERNAL_ERROR = 3

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decolab",
        description="Laboratorio numérico de decoherencia energética y gravitatoria",
    )
    parser.add_argument("--version", action="version", version=f"decolab {__version__}")
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        help="nivel de logging (por defecto DECOLAB_LOG_LEVEL)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # ============================================================
    # SUB-COMANDOS
    # ============================================================
    run.register(subparsers)
    catalog.register(subparsers)
    check.register(subparsers)
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        report = args.handler(args)
    except DecolabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error = {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ENGINE_ERROR
    except Exception as e:
        logger.error(f"Error inesperado: {type(e).__name__}: {str(e)}", exc_info=True)
        if settings.is_development:
            print(f"error = {type(e).__name__}: {e}", file=sys.stderr)
        else:
            print("error = Error interno", file=sys.stderr)
        return EXIT_INTERNAL_ERROR

    if report is None or report.passed:
        return EXIT_OK
    failed = [c.name for c in report.checks if not c.passed]
    logger.error(f"Chequeos fallidos: {failed}")
    return EXIT_FAILED_CHECKS


if __name__ == "__main__":
    sys.exit(main())
