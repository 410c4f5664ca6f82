# src/decolab/core/quantum.py
"""
Sustrato cuántico: superposiciones, evolución unitaria y validación de ρ.

Las exponenciales de matrices se obtienen por autodescomposición del
Hamiltoniano (hermítico), de modo que la evolución es exacta. Las funciones
con prefijo `evolve_` trabajan sobre arreglos numpy y admiten tiempos
efectivos negativos o vectores de tiempos; las públicas operan sobre los
tipos de `schemas.states`.
"""

import logging
from typing import List, Union

import numpy as np

from .exceptions import DimensionMismatchError, InvalidParameterError, NormalizationError
from .units import DEFAULT_UNITS, UnitsContext
from ..schemas.states import (
    HERMITIAN_TOL,
    POSITIVITY_TOL,
    TRACE_TOL,
    DenseHamiltonian,
    DensityMatrix,
    DiagonalHamiltonian,
    HamiltonianSpec,
    StateViolation,
    SuperpositionSpec,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12


# ============================================================
# CONSTRUCCIÓN DE ESTADOS
# ============================================================

def make_superposition(spec: SuperpositionSpec) -> tuple[DensityMatrix, DiagonalHamiltonian]:
    """
    Construye ρ = |ψ⟩⟨ψ| en la base propia de la energía.

    Args:
        spec: amplitudes cₙ y energías Eₙ

    Returns:
        (ρ de rango 1, Hamiltoniano diagonal con las Eₙ)

    Raises:
        NormalizationError: si Σ|cₙ|² difiere de 1 en más de 1e-12
    """
    residual = spec.norm_residual
    if residual > NORMALIZATION_TOL:
        raise NormalizationError(
            "Las amplitudes no están normalizadas",
            {"invariant": "sum |c_n|^2 = 1", "residual": residual},
        )
    psi = np.asarray(spec.amplitudes)
    rho = np.outer(psi, psi.conj())
    return DensityMatrix(entries=rho), DiagonalHamiltonian(eigenvalues=spec.energies)


def pure_state(amplitudes) -> DensityMatrix:
    psi = np.asarray(amplitudes, dtype=np.complex128)
    return DensityMatrix(entries=np.outer(psi, psi.conj()))


# ============================================================
# EVOLUCIÓN UNITARIA
# ============================================================

def _check_dims(rho: np.ndarray, h: HamiltonianSpec) -> None:
    if rho.shape[-1] != h.dim:
        raise DimensionMismatchError(
            "Dimensiones de ρ y H no coinciden",
            {"rho_dim": rho.shape[-1], "h_dim": h.dim},
        )


def to_eigenbasis(rho: np.ndarray, h: HamiltonianSpec) -> np.ndarray:
    """ρ expresado en la base propia de H."""
    _, vectors = h.eigensystem()
    if vectors is None:
        return np.asarray(rho)
    return vectors.conj().T @ rho @ vectors


def from_eigenbasis(rho_eig: np.ndarray, h: HamiltonianSpec) -> np.ndarray:
    """Inversa de `to_eigenbasis`; admite pilas (..., d, d)."""
    _, vectors = h.eigensystem()
    if vectors is None:
        return rho_eig
    return vectors @ rho_eig @ vectors.conj().T


def evolve_in_eigenbasis(
    rho_eig: np.ndarray,
    energies: np.ndarray,
    times: Union[float, np.ndarray],
    hbar: float,
) -> np.ndarray:
    """
    Fase e^{−i(E_m−E_n)s/ℏ} sobre cada elemento ρ_mn, para uno o varios s.

    Con `times` de forma (k,) devuelve una pila (k, d, d).
    """
    gaps = energies[:, None] - energies[None, :]
    s = np.asarray(times, dtype=np.float64)
    phases = np.exp(-1j * np.multiply.outer(s, gaps) / hbar)
    return phases * rho_eig


def evolve_array(
    rho: np.ndarray,
    h: HamiltonianSpec,
    times: Union[float, np.ndarray],
    hbar: float,
) -> np.ndarray:
    """e^{−iHs/ℏ} ρ e^{+iHs/ℏ} para s real (también negativo) o vector de s."""
    _check_dims(rho, h)
    energies, _ = h.eigensystem()
    rho_eig = to_eigenbasis(rho, h)
    return from_eigenbasis(evolve_in_eigenbasis(rho_eig, energies, times, hbar), h)


def unitary_evolve(
    rho: DensityMatrix,
    h: HamiltonianSpec,
    t: float,
    units: UnitsContext = DEFAULT_UNITS,
) -> DensityMatrix:
    """
    ρ(t) = e^{−iHt/ℏ} ρ e^{+iHt/ℏ}.

    Raises:
        InvalidParameterError: si t < 0
        DimensionMismatchError: si las dimensiones no coinciden
    """
    if t < 0:
        raise InvalidParameterError("El tiempo de evolución debe ser ≥ 0", {"t": t})
    return DensityMatrix(entries=evolve_array(rho.entries, h, t, units.hbar))


def propagator(h: HamiltonianSpec, s: float, hbar: float) -> np.ndarray:
    """Matriz U = e^{−iHs/ℏ}."""
    energies, vectors = h.eigensystem()
    phases = np.exp(-1j * energies * s / hbar)
    if vectors is None:
        return np.diag(phases)
    return (vectors * phases) @ vectors.conj().T


# ============================================================
# VALIDACIÓN
# ============================================================

def validate_state(
    rho: Union[DensityMatrix, np.ndarray],
    positivity_tol: float = POSITIVITY_TOL,
) -> List[StateViolation]:
    """
    Devuelve la lista de invariantes de DensityMatrix violados.

    Lista vacía si y sólo si ρ es hermítica (1e-12), de traza unidad (1e-12)
    y semidefinida positiva (autovalor mínimo ≥ −positivity_tol).
    """
    arr = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    violations: List[StateViolation] = []

    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        violations.append(StateViolation(invariant="shape", residual=float("inf"), tolerance=0.0))
        return violations
    if not np.all(np.isfinite(arr)):
        violations.append(StateViolation(invariant="finite", residual=float("inf"), tolerance=0.0))
        return violations

    herm_residual = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
    if herm_residual > HERMITIAN_TOL:
        violations.append(
            StateViolation(invariant="hermitian", residual=herm_residual, tolerance=HERMITIAN_TOL)
        )

    trace_residual = abs(complex(np.trace(arr)) - 1.0)
    if trace_residual > TRACE_TOL:
        violations.append(
            StateViolation(invariant="trace", residual=trace_residual, tolerance=TRACE_TOL)
        )

    smallest = float(np.min(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))))
    if smallest < -positivity_tol:
        violations.append(
            StateViolation(invariant="positivity", residual=-smallest, tolerance=positivity_tol)
        )

    if violations:
        logger.debug(f"Estado inválido: {[v.invariant for v in violations]}")
    return violations


def purity(rho: DensityMatrix) -> float:
    """Tr ρ²."""
    return float(np.real(np.trace(rho.entries @ rho.entries)))


def hermitize(arr: np.ndarray) -> np.ndarray:
    return 0.5 * (arr + np.conj(np.swapaxes(arr, -1, -2)))


def as_hamiltonian(matrix) -> HamiltonianSpec:
    """Hamiltoniano diagonal si la matriz ya lo es; denso en otro caso."""
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim == 1:
        return DiagonalHamiltonian(eigenvalues=arr.real)
    off = arr - np.diag(np.diag(arr))
    if not np.any(off) and not np.any(np.diag(arr).imag):
        return DiagonalHamiltonian(eigenvalues=np.diag(arr).real)
    return DenseHamiltonian(matrix=arr)
