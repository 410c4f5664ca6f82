# src/decolab/schemas/evolution.py
"""Modelos de evolución determinista y trayectorias integradas."""

from typing import Annotated, List, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .arrays import ComplexArray, RealArray, SquareReal
from .kernels import CorrelationKernel
from .states import HERMITIAN_TOL, DenseHamiltonian, DensityMatrix, DiagonalHamiltonian

Hamiltonian = Union[DenseHamiltonian, DiagonalHamiltonian]


class LocalHamiltonian(BaseModel):
    """Descomposición H = Σ_r H_r en operadores hermíticos por celda (J)."""
    parts: List[ComplexArray]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("parts")
    @classmethod
    def _check_parts(cls, parts: List[np.ndarray]) -> List[np.ndarray]:
        if not parts:
            raise ValueError("se necesita al menos una parte local")
        dim = parts[0].shape
        for idx, part in enumerate(parts):
            if part.ndim != 2 or part.shape[0] != part.shape[1] or part.shape != dim:
                raise ValueError(f"parte {idx}: forma {part.shape} incompatible con {dim}")
            scale = max(float(np.max(np.abs(part))), np.finfo(float).tiny)
            if float(np.max(np.abs(part - part.conj().T))) > HERMITIAN_TOL * scale:
                raise ValueError(f"parte {idx} no hermítica")
        return parts

    @property
    def dim(self) -> int:
        return self.parts[0].shape[0]

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def stacked(self) -> np.ndarray:
        return np.stack(self.parts)

    def total(self) -> np.ndarray:
        """H = Σ_r H_r."""
        return np.sum(self.stacked(), axis=0)

    def commuting(self, rtol: float = 1e-12) -> bool:
        stack = self.stacked()
        scale = max(float(np.max(np.abs(stack))), np.finfo(float).tiny) ** 2
        for a in range(len(stack)):
            for b in range(a + 1, len(stack)):
                comm = stack[a] @ stack[b] - stack[b] @ stack[a]
                if float(np.max(np.abs(comm))) > rtol * scale:
                    return False
        return True


# ============================================================
# VARIANTES DE EvolutionModel
# ============================================================

class GlobalDoubleCommutator(BaseModel):
    """dρ/dt = −iℏ⁻¹[H,ρ] − ½τℏ⁻²[H,[H,ρ]]."""
    kind: Literal["global_double_commutator"] = "global_double_commutator"
    h: Hamiltonian
    tau: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class LocalDoubleCommutator(BaseModel):
    """dρ/dt = −iℏ⁻¹[H,ρ] − ½ℏ⁻² Σ τ_rr′ [H_r,[H_r′,ρ]]."""
    kind: Literal["local_double_commutator"] = "local_double_commutator"
    parts: LocalHamiltonian
    kernel: CorrelationKernel

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _sizes(self) -> "LocalDoubleCommutator":
        if self.kernel.n_cells != self.parts.n_parts:
            raise ValueError(
                f"el kernel tiene {self.kernel.n_cells} celdas y hay {self.parts.n_parts} partes"
            )
        return self


class MilburnExact(BaseModel):
    """Ecuación de saltos: dρ/dt = τ_Pl⁻¹[U ρ U† − ρ], U = e^{−iHτ_Pl/ℏ}."""
    kind: Literal["milburn_exact"] = "milburn_exact"
    h: Hamiltonian
    tau_planck: float = Field(..., gt=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class MilburnFirstOrder(BaseModel):
    """Desarrollo a primer orden en τ_Pl de la ecuación de saltos."""
    kind: Literal["milburn_first_order"] = "milburn_first_order"
    h: Hamiltonian
    tau_planck: float = Field(..., gt=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class AdlerEffective(BaseModel):
    """Canal de ℏ⁻¹ fluctuante sobre el Hamiltoniano efectivo."""
    kind: Literal["adler_effective"] = "adler_effective"
    h_eff: Hamiltonian
    tau: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class DiosiPenrosePointer(BaseModel):
    """Desfase con tasas Γ_nm en la base de estados puntero (grumos)."""
    kind: Literal["diosi_penrose_pointer"] = "diosi_penrose_pointer"
    rates: SquareReal = Field(..., description="Γ_nm en s⁻¹")
    h_diag: DiagonalHamiltonian

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _rates(self) -> "DiosiPenrosePointer":
        if self.rates.shape[0] != self.h_diag.dim:
            raise ValueError("Γ y H_diag tienen dimensiones distintas")
        if np.any(self.rates < 0):
            raise ValueError("las tasas Γ_nm deben ser ≥ 0")
        if np.any(np.diag(self.rates) != 0):
            raise ValueError("la diagonal de Γ debe ser nula")
        if np.any(self.rates != self.rates.T):
            raise ValueError("Γ debe ser simétrica")
        return self


EvolutionModel = Annotated[
    Union[
        GlobalDoubleCommutator,
        LocalDoubleCommutator,
        MilburnExact,
        MilburnFirstOrder,
        AdlerEffective,
        DiosiPenrosePointer,
    ],
    Field(discriminator="kind"),
]


class Trajectory(BaseModel):
    """Estados ρ(t) almacenados en una pila (n_times, d, d)."""
    times: RealArray
    rho: ComplexArray
    model: str

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check(self) -> "Trajectory":
        if self.times.ndim != 1 or self.rho.ndim != 3 or self.rho.shape[0] != self.times.shape[0]:
            raise ValueError("times y rho tienen formas incompatibles")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("los tiempos deben ser estrictamente crecientes")
        return self

    @property
    def states(self) -> List[DensityMatrix]:
        return [DensityMatrix(entries=r) for r in self.rho]

    @property
    def final_state(self) -> DensityMatrix:
        return DensityMatrix(entries=self.rho[-1])

    def element(self, i: int, j: int) -> np.ndarray:
        return np.asarray(self.rho[:, i, j])
