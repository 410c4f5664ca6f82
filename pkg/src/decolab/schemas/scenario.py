# src/decolab/schemas/scenario.py
"""
Esquemas estrictos de los archivos de escenario.

Las cantidades físicas aceptan un número (SI) o un texto con sufijo de unidad
("1 eV", "1e-7 m"); se convierten a SI al validar. Cualquier clave no
documentada se rechaza.
"""

from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field

from ..core.config import settings
from ..core.exceptions import ScenarioError
from ..core.units import EV, parse_quantity

CommandName = Literal[
    "two-level-decay",
    "milburn-table",
    "mc-compare",
    "local-me",
    "dp-lumps",
    "critical-radius",
    "trace-demo",
]


def _quantity(dimension: str) -> BeforeValidator:
    def _parse(value: Any) -> float:
        try:
            return parse_quantity(value, dimension)
        except ScenarioError as e:
            # ValueError para que pydantic anote la ruta de la clave
            raise ValueError(str(e)) from e

    return BeforeValidator(_parse)


Energy = Annotated[float, _quantity("energy")]
Time = Annotated[float, _quantity("time")]
Length = Annotated[float, _quantity("length")]
Mass = Annotated[float, _quantity("mass")]
Density = Annotated[float, _quantity("density")]


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


# ============================================================
# PARÁMETROS POR COMANDO
# ============================================================

class TwoLevelDecayParams(_Params):
    """Superposición de dos niveles integrada con un EvolutionModel."""
    model: Literal[
        "global_double_commutator",
        "milburn_exact",
        "milburn_first_order",
        "adler_effective",
    ] = "global_double_commutator"
    delta_e: Energy
    tau: Time = Field(..., ge=0, description="τ, o τ_Pl en los modelos de Milburn")
    amplitudes: Tuple[float, float] = (0.7071067811865476, 0.7071067811865476)
    t_final: Optional[Time] = Field(None, gt=0, description="por defecto 5 tiempos de decoherencia")
    n_steps: Optional[int] = Field(None, ge=1, description="por defecto max(default_n_steps, recomendado)")
    record_every: int = Field(1, ge=1)


class MilburnTableParams(_Params):
    """Tiempos t_D con τ = τ_Pl en ambas convenciones."""
    energies: List[Energy] = Field(default_factory=lambda: [EV, 1e9 * EV, 1.0], min_length=1)
    tau: Optional[Time] = Field(None, gt=0, description="por defecto τ_Pl")


NoiseKind = Literal[
    "gaussian_global_time",
    "poisson_discrete_time",
    "fluctuating_planck",
    "gaussian_local_time_field",
    "local_fluctuating_planck",
]


class McCompareParams(_Params):
    """Conjunto estocástico frente a su ecuación maestra."""
    noise: NoiseKind
    delta_e: Energy
    tau: Time = Field(..., ge=0)
    t_final: Optional[Time] = Field(None, gt=0, description="por defecto un tiempo de decoherencia")
    n_times: int = Field(5, ge=1)
    n_traj: int = Field(default_factory=lambda: settings.default_n_traj, ge=2)
    n_steps: Optional[int] = Field(None, ge=1)
    n_cells: int = Field(2, ge=1, le=4, description="sitios (qubits) de los modelos locales")
    kernel: Literal["global", "diagonal"] = "diagonal"
    z_max: float = Field(5.0, gt=0)


class GridParams(_Params):
    dims: Union[int, Tuple[int, ...]]
    spacing: Length = Field(..., gt=0)


class LocalMeParams(_Params):
    """Superposición de dos ramas cuya diferencia de energía vive en algunas celdas."""
    grid: GridParams
    kernel: Literal["newtonian", "global", "diagonal"] = "newtonian"
    tau: Optional[Time] = Field(None, ge=0, description="requerido para global y diagonal")
    sigma: Optional[Length] = Field(None, gt=0, description="por defecto settings.default_sigma")
    const: float = Field(1.0, description="factor adimensional del kernel newtoniano")
    delta_e: Energy
    cells: List[int] = Field(default_factory=lambda: [0], min_length=1)
    t_final: Optional[Time] = Field(None, gt=0)
    n_steps: Optional[int] = Field(None, ge=1)
    record_every: int = Field(1, ge=1)


class DpLumpsParams(_Params):
    """Dos bolas uniformes desplazadas a lo largo de x."""
    radius: Length = Field(..., gt=0)
    displacement: Length = Field(..., ge=0, description="distancia entre centros")
    density: Density = Field(1000.0, gt=0)
    mass: Optional[Mass] = Field(None, gt=0, description="si se da, sustituye a density")
    resolution: int = Field(8, ge=1, description="R/a")
    spacing: Optional[Length] = Field(None, gt=0, description="por defecto R/resolution")
    sigma: Optional[Length] = Field(None, gt=0, description="por defecto max(default_sigma, a)")
    n_steps: Optional[int] = Field(None, ge=1)


class CriticalRadiusParams(_Params):
    density: Density = Field(1000.0, gt=0)
    r_min: Length = Field(1e-9, gt=0)
    r_max: Length = Field(1e-3, gt=0)
    n_radii: int = Field(61, ge=2)
    sigma_floor: Optional[Length] = Field(None, gt=0, description="por defecto settings.default_sigma")


class TraceDemoParams(_Params):
    """Cadena matricial adimensional integrada con leapfrog."""
    n: int = Field(4, ge=2)
    r_cells: int = Field(4, ge=1)
    omega2: float = Field(1.0, ge=0)
    lam: float = Field(0.01, ge=0, alias="lambda")
    kappa: float = 0.1
    dt: float = Field(1e-3, gt=0)
    n_steps: int = Field(10_000, ge=1)
    record_every: int = Field(100, ge=1)
    scale: float = Field(0.5, gt=0, description="escala de las entradas del estado aleatorio")
    matrix_coefficient: Optional[List[List[float]]] = None


PARAMETER_MODELS: Dict[str, type] = {
    "two-level-decay": TwoLevelDecayParams,
    "milburn-table": MilburnTableParams,
    "mc-compare": McCompareParams,
    "local-me": LocalMeParams,
    "dp-lumps": DpLumpsParams,
    "critical-radius": CriticalRadiusParams,
    "trace-demo": TraceDemoParams,
}

ScenarioParameters = Union[
    TwoLevelDecayParams,
    MilburnTableParams,
    McCompareParams,
    LocalMeParams,
    DpLumpsParams,
    CriticalRadiusParams,
    TraceDemoParams,
]


# ============================================================
# ESCENARIO
# ============================================================

class OutputSpec(BaseModel):
    path: str = Field(default_factory=lambda: settings.output_dir)
    format: Literal["csv"] = "csv"

    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioFile(BaseModel):
    """Forma del archivo antes de validar los parámetros del comando."""
    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    command: CommandName
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(0, ge=0)
    output: OutputSpec = Field(default_factory=OutputSpec)

    model_config = ConfigDict(extra="forbid")


class Scenario(BaseModel):
    """Escenario resuelto: parámetros tipados y en SI, con valores por defecto aplicados."""
    name: str
    command: CommandName
    parameters: ScenarioParameters
    seed: int = 0
    output: OutputSpec = Field(default_factory=OutputSpec)

    model_config = ConfigDict(frozen=True)

    def resolved(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "command": self.command,
            "parameters": self.parameters.model_dump(by_alias=True),
            "seed": self.seed,
            "output": self.output.model_dump(),
        }
