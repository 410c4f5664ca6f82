# src/decolab/schemas/states.py
"""
Tipos de estado cuántico y Hamiltonianos.

Todos son valores inmutables: los arreglos internos se marcan como de sólo
lectura al construirse, así que pueden compartirse entre hilos.
"""

from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from .arrays import ComplexArray, RealArray, SquareComplex

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


class DensityMatrix(BaseModel):
    """Matriz densidad ρ (compleja, hermítica, traza unidad, semidefinida positiva)."""
    entries: SquareComplex

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def element(self, i: int, j: int) -> complex:
        return complex(self.entries[i, j])


class SuperpositionSpec(BaseModel):
    """Superposición Σ cₙ|φₙ⟩ en la base propia de la energía."""
    amplitudes: ComplexArray
    energies: RealArray = Field(..., description="Energías propias Eₙ (J)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check_shapes(self) -> "SuperpositionSpec":
        if self.amplitudes.ndim != 1 or self.amplitudes.shape != self.energies.shape:
            raise ValueError("amplitudes y energías deben ser listas de igual longitud")
        if not np.all(np.isfinite(self.energies)):
            raise ValueError("las energías deben ser finitas")
        return self

    @property
    def norm_residual(self) -> float:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)

    def delta_e(self, m: int = 0, n: int = 1) -> float:
        return abs(float(self.energies[m] - self.energies[n]))


class DenseHamiltonian(BaseModel):
    """Hamiltoniano dado como matriz hermítica densa (J)."""
    kind: Literal["dense"] = "dense"
    matrix: SquareComplex

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    _eig: Optional[Tuple[np.ndarray, np.ndarray]] = PrivateAttr(default=None)

    @field_validator("matrix")
    @classmethod
    def _hermitian(cls, value: np.ndarray) -> np.ndarray:
        scale = max(float(np.max(np.abs(value))) if value.size else 0.0, np.finfo(float).tiny)
        residual = float(np.max(np.abs(value - value.conj().T))) if value.size else 0.0
        if residual > HERMITIAN_TOL * scale:
            raise ValueError(f"Hamiltoniano no hermítico (residuo relativo {residual / scale:.3e})")
        return value

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        """Autovalores y autovectores (columnas); se calculan una sola vez."""
        if self._eig is None:
            herm = 0.5 * (self.matrix + self.matrix.conj().T)
            energies, vectors = np.linalg.eigh(herm)
            self._eig = (energies, vectors)
        return self._eig

    def as_matrix(self) -> np.ndarray:
        return np.asarray(self.matrix)

    def norm(self) -> float:
        energies, _ = self.eigensystem()
        return float(np.max(np.abs(energies))) if energies.size else 0.0


class DiagonalHamiltonian(BaseModel):
    """Hamiltoniano diagonal en la base de trabajo (autovalores en J)."""
    kind: Literal["diagonal"] = "diagonal"
    eigenvalues: RealArray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("eigenvalues")
    @classmethod
    def _one_dimensional(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1:
            raise ValueError("los autovalores deben ser una lista")
        return value

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def eigensystem(self) -> Tuple[np.ndarray, None]:
        return np.asarray(self.eigenvalues), None

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(np.complex128)

    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0


HamiltonianSpec = Union[DenseHamiltonian, DiagonalHamiltonian]


class StateViolation(BaseModel):
    """Un invariante de DensityMatrix que no se cumple y su residuo medido."""
    invariant: Literal["shape", "finite", "hermitian", "trace", "positivity"]
    residual: float
    tolerance: float
