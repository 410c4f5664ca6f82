# src/decolab/commands/run.py
import argparse
import logging
from pathlib import Path

from ..schemas.report import RunReport
from ..services import scenario_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "run",
        help="Ejecuta un archivo de escenario",
        description="Valida el escenario, ejecuta su comando y escribe CSV + report.txt.",
    )
    parser.add_argument("scenario", type=Path, help="archivo de escenario JSON")
    parser.add_argument("--seed", type=int, default=None, help="sustituye la semilla del archivo")
    parser.add_argument("--out", default=None, help="sustituye output.path del archivo")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> RunReport:
    scenario = scenario_service.load_scenario(args.scenario)
    scenario = scenario_service.with_overrides(scenario, seed=args.seed, out=args.out)
    report = scenario_service.run(scenario)
    print(report.to_text(), end="")
    return report
