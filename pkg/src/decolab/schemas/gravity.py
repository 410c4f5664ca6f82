# src/decolab/schemas/gravity.py
"""Campos de densidad de masa, pares de grumos y resultados gravitatorios."""

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from ..core.exceptions import GridMismatchError
from .arrays import RealArray
from .kernels import CellGrid


class MassDensityField(BaseModel):
    """
    Densidad de masa por celda (kg·m⁻³), aplanada en orden C como cell_centers.

    `nominal_density` guarda la densidad del sólido antes de renormalizar la
    masa discretizada; es None para campos construidos a mano.
    """
    grid: CellGrid
    values: RealArray
    sigma: float = Field(..., gt=0, description="Ancho del suavizado gaussiano (m)")
    nominal_density: Optional[float] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    _centers: Optional[np.ndarray] = PrivateAttr(default=None)

    @field_validator("values", mode="before")
    @classmethod
    def _flatten(cls, value):
        return np.asarray(value, dtype=np.float64).reshape(-1)

    @model_validator(mode="after")
    def _check(self) -> "MassDensityField":
        if self.values.shape[0] != self.grid.n_cells:
            raise ValueError(f"{self.values.shape[0]} valores para {self.grid.n_cells} celdas")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("la densidad debe ser finita y ≥ 0")
        if self.sigma < self.grid.min_spacing:
            raise ValueError(
                f"σ = {self.sigma:.3e} m menor que el espaciado {self.grid.min_spacing:.3e} m"
            )
        return self

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    def centers(self) -> np.ndarray:
        if self._centers is None:
            self._centers = self.grid.centers()
        return self._centers

    def center_of_mass(self) -> np.ndarray:
        weights = self.values * self.grid.cell_volume
        return weights @ self.centers() / np.sum(weights)

    def scaled(self, factor: float) -> "MassDensityField":
        return self.model_copy(update={"values": self.values * factor, "nominal_density": None})

    def compatible_with(self, other: "MassDensityField") -> bool:
        return self.grid.same_as(other.grid) and math.isclose(self.sigma, other.sigma, rel_tol=1e-12)


class LumpPair(BaseModel):
    """Superposición de dos distribuciones de masa sobre la misma malla."""
    f1: MassDensityField
    f2: MassDensityField

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check(self) -> "LumpPair":
        if not self.f1.compatible_with(self.f2):
            raise GridMismatchError(
                "Los grumos no comparten malla y σ",
                {"sigma_1": self.f1.sigma, "sigma_2": self.f2.sigma},
            )
        if self.f1.total_mass <= 0 or self.f2.total_mass <= 0:
            raise ValueError("ambos grumos necesitan masa > 0")
        return self


class GravResult(BaseModel):
    """
    Energías D_nm = G∬f_n f_m K_σ (J), E_grav = ½(D₁₁+D₂₂−2D₁₂) y t_D = ℏ/E_grav.

    `e_grav_single_cross` = ½|D₁₁+D₂₂−D₁₂| y `t_d_interaction_only` = ℏ/D₁₂ se
    informan sólo como comparación.
    """
    d11: float = Field(..., ge=0)
    d22: float = Field(..., ge=0)
    d12: float = Field(..., ge=0)
    e_grav: float = Field(..., ge=0)
    t_d: float = Field(..., gt=0)
    e_grav_single_cross: float = Field(..., ge=0)
    t_d_interaction_only: float = Field(..., gt=0)
    identity_residual: float = Field(0.0, ge=0, description="|E_grav − ½(D₁₁+D₂₂−2D₁₂)| relativo")

    model_config = ConfigDict(frozen=True)


class RadiusSample(BaseModel):
    radius: float
    mass: float
    sigma: float
    t_dyn: float
    t_d: float

    model_config = ConfigDict(frozen=True)


class CriticalRadiusResult(BaseModel):
    """Radio donde t_dyn = MR²/ℏ cruza a t_D, con la tabla del barrido."""
    density: float
    r_crit: float
    table: List[RadiusSample]

    model_config = ConfigDict(frozen=True)
