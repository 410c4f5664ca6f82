# src/decolab/core/units.py
"""
Constantes físicas y conversión de unidades.

Internamente todo se lleva en SI. Las conversiones desde eV, g/cm³, cm, etc.
sólo ocurren en la capa de interfaz (escenarios de la CLI).
"""

import math
import re
from typing import Dict, Union

from pydantic import BaseModel, ConfigDict, Field

from .exceptions import InvalidParameterError, ScenarioError

# CODATA
HBAR = 1.0546e-34        # J·s
G_NEWTON = 6.674e-11     # m³·kg⁻¹·s⁻²
C_LIGHT = 2.998e8        # m·s⁻¹
TAU_PLANCK = 5.391e-44   # s
EV = 1.602e-19           # J por eV


class UnitsContext(BaseModel):
    """Constantes usadas por todos los motores (todas estrictamente positivas)."""
    hbar: float = Field(HBAR, gt=0, description="Constante de Planck reducida (J·s)")
    G: float = Field(G_NEWTON, gt=0, description="Constante gravitacional (m³·kg⁻¹·s⁻²)")
    c: float = Field(C_LIGHT, gt=0, description="Velocidad de la luz (m·s⁻¹)")
    tau_planck: float = Field(TAU_PLANCK, gt=0, description="Tiempo de Planck (s)")
    ev: float = Field(EV, gt=0, description="Julios por electronvoltio")

    model_config = ConfigDict(frozen=True)


DEFAULT_UNITS = UnitsContext()


def planck_time(units: UnitsContext = DEFAULT_UNITS) -> float:
    """√(ℏG/c⁵); sirve para contrastar el τ_Pl almacenado."""
    return math.sqrt(units.hbar * units.G / units.c ** 5)


# ============================================================
# TABLAS DE UNIDADES POR DIMENSIÓN
# ============================================================

UNIT_TABLE: Dict[str, Dict[str, float]] = {
    "energy": {
        "J": 1.0,
        "eV": EV,
        "keV": 1e3 * EV,
        "MeV": 1e6 * EV,
        "GeV": 1e9 * EV,
        "erg": 1e-7,
    },
    "time": {
        "s": 1.0,
        "ms": 1e-3,
        "us": 1e-6,
        "ns": 1e-9,
        "ps": 1e-12,
        "fs": 1e-15,
    },
    "length": {
        "m": 1.0,
        "cm": 1e-2,
        "mm": 1e-3,
        "um": 1e-6,
        "nm": 1e-9,
    },
    "mass": {
        "kg": 1.0,
        "g": 1e-3,
    },
    "density": {
        "kg/m3": 1.0,
        "g/cm3": 1e3,
    },
}

_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/0-9]*)\s*$")


def parse_quantity(value: Union[str, int, float], dimension: str) -> float:
    """
    Convierte un valor con sufijo de unidad a SI.

    Args:
        value: número (se interpreta ya en SI) o texto "<número> <unidad>"
        dimension: una de las claves de UNIT_TABLE

    Returns:
        Valor en unidades SI

    Raises:
        ScenarioError: si el texto no es parseable o la unidad no pertenece a la dimensión
    """
    if dimension not in UNIT_TABLE:
        raise InvalidParameterError(f"Dimensión desconocida: {dimension}")

    if isinstance(value, bool):
        raise ScenarioError("Se esperaba una cantidad numérica", {"value": value})
    if isinstance(value, (int, float)):
        return float(value)

    match = _QUANTITY_RE.match(str(value))
    if not match:
        raise ScenarioError(
            f"Cantidad ilegible: '{value}'",
            {"dimension": dimension},
        )

    number, unit = match.groups()
    table = UNIT_TABLE[dimension]
    if not unit:
        return float(number)
    if unit not in table:
        raise ScenarioError(
            f"Unidad '{unit}' no corresponde a la dimensión '{dimension}'",
            {"allowed": sorted(table)},
        )
    return float(number) * table[unit]


def g_per_cm3_to_si(density: float) -> float:
    return density * UNIT_TABLE["density"]["g/cm3"]
