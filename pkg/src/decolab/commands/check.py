# src/decolab/commands/check.py
import argparse
import logging

from ..schemas.report import RunReport
from ..services.acceptance_service import run_acceptance

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "check",
        help="Ejecuta la batería de aceptación integrada",
        description="Ocho bloques de chequeos numéricos; imprime el RunReport.",
    )
    parser.add_argument("--quick", action="store_true", help="conjuntos y pasos reducidos")
    parser.add_argument("--seed", type=int, default=0, help="semilla maestra (por defecto 0)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> RunReport:
    report = run_acceptance(quick=args.quick, seed=args.seed)
    print(report.to_text(), end="")
    return report
