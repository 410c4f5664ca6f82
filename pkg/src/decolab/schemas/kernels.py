# src/decolab/schemas/kernels.py
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.config import settings
from ..core.exceptions import GridTooLargeError
from .arrays import SquareReal

SYMMETRY_RTOL = 1e-15


class CellGrid(BaseModel):
    """
    Malla cartesiana de celdas r.

    `origin` es la esquina inferior de la malla; los centros de celda están en
    origin + (i + ½)·a por eje.
    """
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    spacing: Tuple[float, float, float] = Field(..., description="Lado de celda a por eje (m)")
    dims: Tuple[int, int, int] = Field(..., description="Número de celdas por eje")
    cell_cap: int = Field(default_factory=lambda: settings.max_cells)

    model_config = ConfigDict(frozen=True)

    @field_validator("spacing", mode="before")
    @classmethod
    def _broadcast_spacing(cls, value):
        if isinstance(value, (int, float)):
            return (float(value),) * 3
        return value

    @field_validator("dims", mode="before")
    @classmethod
    def _pad_dims(cls, value):
        if isinstance(value, int):
            return (value, 1, 1)
        value = tuple(value)
        return value + (1,) * (3 - len(value))

    @model_validator(mode="after")
    def _check(self) -> "CellGrid":
        if any(a <= 0 for a in self.spacing):
            raise ValueError("el espaciado de la malla debe ser > 0")
        if any(n < 1 for n in self.dims):
            raise ValueError("cada eje necesita al menos una celda")
        if self.n_cells > self.cell_cap:
            raise GridTooLargeError(
                "La malla supera el límite de celdas",
                {"n_cells": self.n_cells, "cap": self.cell_cap},
            )
        return self

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def min_spacing(self) -> float:
        return float(min(self.spacing))

    def centers(self) -> np.ndarray:
        """Centros de celda, forma (n_cells, 3), en orden C (x más lento)."""
        axes = [self.origin[k] + (np.arange(self.dims[k]) + 0.5) * self.spacing[k] for k in range(3)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def same_as(self, other: "CellGrid") -> bool:
        return (
            self.dims == other.dims
            and np.allclose(self.spacing, other.spacing, rtol=1e-12, atol=0.0)
            and np.allclose(self.origin, other.origin, rtol=1e-12, atol=1e-300)
        )


class CorrelationKernel(BaseModel):
    """Covarianza τ_rr′ de los tiempos locales (s)."""
    matrix: SquareReal
    variant: Literal["global", "diagonal", "newtonian", "custom"]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("matrix")
    @classmethod
    def _finite(cls, value: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(value)):
            raise ValueError("el kernel contiene valores no finitos")
        return value

    @property
    def n_cells(self) -> int:
        return self.matrix.shape[0]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T))) if self.matrix.size else 0.0


class NewtonianNoiseSpec(BaseModel):
    """
    Correlación del potencial newtoniano M[ΦΦ′] ∝ Gℏ/|r−r′| regularizada con
    suavizado gaussiano de ancho σ.
    """
    sigma: float = Field(default_factory=lambda: settings.default_sigma, gt=0, description="m")
    const: float = Field(1.0, description="Factor numérico adimensional")

    model_config = ConfigDict(frozen=True)
