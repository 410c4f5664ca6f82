# src/decolab/schemas/tracedyn.py
"""Modelo de dinámica de trazas (cadena matricial anarmónica) y su estado."""

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .arrays import ComplexArray, SquareComplex

TRACE_HERMITIAN_TOL = 1e-12


def _hermitian_residual(stack: np.ndarray) -> float:
    if stack.size == 0:
        return 0.0
    return float(np.max(np.abs(stack - np.conj(np.swapaxes(stack, -1, -2)))))


class TraceModelSpec(BaseModel):
    """
    𝐋 = Tr Σ_r (½q̇_r² − ½ω²q_r² − λq_r⁴ − κq_r q_{r+1}), cadena abierta, masa 1.

    `matrix_coefficient` (A hermítica) añade ½Tr(A q_r²) al potencial; rompe la
    invariancia unitaria y sólo se usa como control negativo.
    """
    n: int = Field(..., ge=2, description="Dimensión de las matrices")
    r_cells: int = Field(..., ge=1, description="Número de sitios")
    omega2: float = Field(0.0, ge=0, description="Coeficiente armónico (s⁻²)")
    lam: float = Field(0.0, ge=0, alias="lambda", description="Coeficiente cuártico")
    kappa: float = Field(0.0, description="Acoplamiento a primeros vecinos")
    matrix_coefficient: Optional[SquareComplex] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    @field_validator("omega2", "lam", "kappa")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("los coeficientes deben ser finitos")
        return value

    @model_validator(mode="after")
    def _check_coefficient(self) -> "TraceModelSpec":
        a = self.matrix_coefficient
        if a is not None:
            if a.shape != (self.n, self.n):
                raise ValueError(f"matrix_coefficient debe ser {self.n}×{self.n}")
            if _hermitian_residual(a) > TRACE_HERMITIAN_TOL * max(1.0, float(np.max(np.abs(a)))):
                raise ValueError("matrix_coefficient debe ser hermítica")
        return self

    @property
    def scalar_coefficients(self) -> bool:
        return self.matrix_coefficient is None


class TraceState(BaseModel):
    """Coordenadas q_r y momentos p_r hermíticos, pilas de forma (r_cells, n, n)."""
    q: ComplexArray
    p: ComplexArray
    t: float = 0.0

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check(self) -> "TraceState":
        if self.q.ndim != 3 or self.q.shape[1] != self.q.shape[2] or self.q.shape != self.p.shape:
            raise ValueError(f"q {self.q.shape} y p {self.p.shape} deben ser pilas (r, n, n) iguales")
        for name, stack in (("q", self.q), ("p", self.p)):
            scale = max(1.0, float(np.max(np.abs(stack))) if stack.size else 0.0)
            if _hermitian_residual(stack) > TRACE_HERMITIAN_TOL * scale:
                raise ValueError(f"{name} contiene matrices no hermíticas")
        return self

    @property
    def r_cells(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return self.q.shape[1]


class ConservationRow(BaseModel):
    t: float
    energy: float
    c_drift: float = Field(..., description="‖C̃(t) − C̃(0)‖_max")
    site_drifts: List[float] = Field(default_factory=list, description="‖[q_r,p_r](t) − [q_r,p_r](0)‖_max")


class ConservationRun(BaseModel):
    """Serie temporal de 𝐇 y de la deriva de C̃ en una integración larga."""
    rows: List[ConservationRow]
    c0_norm: float
    energy0: float
    final_state: TraceState

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def max_c_drift(self) -> float:
        return max((row.c_drift for row in self.rows), default=0.0)

    @property
    def max_energy_drift(self) -> float:
        return max((abs(row.energy - self.energy0) for row in self.rows), default=0.0)
