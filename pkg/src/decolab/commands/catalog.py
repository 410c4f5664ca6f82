# src/decolab/commands/catalog.py
"""Sub-comando list-commands: comandos de escenario y sus claves documentadas."""

import argparse
from typing import List

from ..schemas.scenario import PARAMETER_MODELS


def describe_commands() -> List[str]:
    lines = []
    for command, params_model in PARAMETER_MODELS.items():
        doc = (params_model.__doc__ or "").strip().splitlines()
        lines.append(f"{command}: {doc[0] if doc else ''}".rstrip())
        for name, field in params_model.model_fields.items():
            key = field.alias or name
            marker = "requerida" if field.is_required() else "opcional"
            hint = f" - {field.description}" if field.description else ""
            lines.append(f"    {key} ({marker}){hint}")
    return lines


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("list-commands", help="Lista los comandos de escenario y sus claves")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    print("\n".join(describe_commands()))
    return None
