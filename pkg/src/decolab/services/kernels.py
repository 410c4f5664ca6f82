# src/decolab/services/kernels.py
"""
Kernels de correlación τ_rr′ de las incertidumbres locales del tiempo.

Incluye el kernel global (campo totalmente correlacionado), el diagonal
(celdas independientes) y el newtoniano con suavizado gaussiano, además de
la factorización usada para muestrear los campos δt_r.
"""

import logging

import numpy as np
from scipy.linalg import qr
from scipy.spatial.distance import cdist
from scipy.special import erf

from ..core.exceptions import InvalidParameterError, KernelNotPSDError
from ..core.units import DEFAULT_UNITS, UnitsContext
from ..schemas.kernels import SYMMETRY_RTOL, CellGrid, CorrelationKernel, NewtonianNoiseSpec

logger = logging.getLogger(__name__)

PSD_RTOL = 1e-10


# ============================================================
# GEOMETRÍA
# ============================================================

def cell_centers(grid: CellGrid) -> np.ndarray:
    """Centros de celda, forma (n_cells, 3), en orden C (x más lento)."""
    return grid.centers()


def smeared_coulomb(d, sigma: float) -> np.ndarray:
    """
    K_σ(d) = erf(d/2σ)/d, con K_σ(0) = 1/(σ√π).

    Es la energía de Coulomb entre dos gaussianas normalizadas de ancho σ
    separadas una distancia d.
    """
    d = np.asarray(d, dtype=np.float64)
    out = np.empty_like(d)
    zero = d == 0.0
    out[zero] = 1.0 / (sigma * np.sqrt(np.pi))
    nz = ~zero
    out[nz] = erf(d[nz] / (2.0 * sigma)) / d[nz]
    return out


# ============================================================
# CONSTRUCTORES
# ============================================================

def global_kernel(n_cells: int, tau: float) -> CorrelationKernel:
    """Todas las entradas iguales a τ: reduce el modelo local al global con H total."""
    if tau < 0:
        raise InvalidParameterError("τ debe ser ≥ 0", {"tau": tau})
    if n_cells < 1:
        raise InvalidParameterError("se necesita al menos una celda", {"n_cells": n_cells})
    return CorrelationKernel(matrix=np.full((n_cells, n_cells), float(tau)), variant="global")


def diagonal_kernel(taus) -> CorrelationKernel:
    """Celdas con fluctuaciones independientes de varianzas τ_rr."""
    taus = np.asarray(taus, dtype=np.float64)
    if np.any(taus < 0):
        raise InvalidParameterError("las varianzas locales deben ser ≥ 0", {"min": float(taus.min())})
    return CorrelationKernel(matrix=np.diag(taus), variant="diagonal")


def newtonian_kernel(
    grid: CellGrid,
    spec: NewtonianNoiseSpec,
    units: UnitsContext = DEFAULT_UNITS,
) -> CorrelationKernel:
    """
    τ_rr′ = const·Gℏc⁻⁴·K_σ(|r_r − r_r′|), evaluado en los centros de celda.

    El tamaño de la malla ya fue acotado por CellGrid (GridTooLargeError).
    """
    if spec.sigma < grid.min_spacing:
        logger.warning(
            f"σ = {spec.sigma:.3e} m es menor que el espaciado {grid.min_spacing:.3e} m; "
            "la regla del punto medio pierde precisión"
        )
    centers = cell_centers(grid)
    distances = cdist(centers, centers)
    prefactor = spec.const * units.G * units.hbar / units.c ** 4
    matrix = prefactor * smeared_coulomb(distances, spec.sigma)
    # simetría exacta frente al redondeo de cdist
    matrix = 0.5 * (matrix + matrix.T)
    logger.debug(f"Kernel newtoniano construido: {grid.n_cells} celdas, σ = {spec.sigma:.3e} m")
    return CorrelationKernel(matrix=matrix, variant="newtonian")


# ============================================================
# VALIDACIÓN Y FACTORIZACIÓN
# ============================================================

def _check_symmetric(k: CorrelationKernel) -> None:
    residual = k.symmetry_residual()
    if residual > SYMMETRY_RTOL * max(k.scale, np.finfo(float).tiny):
        raise KernelNotPSDError(
            "Kernel asimétrico",
            {"invariant": "symmetric", "residual": residual, "scale": k.scale},
        )


def validate_psd(k: CorrelationKernel) -> float:
    """Autovalor mínimo del kernel; el llamador lo compara con su tolerancia."""
    _check_symmetric(k)
    return float(np.linalg.eigvalsh(k.matrix)[0])


def require_psd(k: CorrelationKernel) -> None:
    """Lanza KernelNotPSDError si el kernel no es simétrico y PSD dentro de tolerancia."""
    _check_symmetric(k)
    eigenvalues = np.linalg.eigvalsh(k.matrix)
    floor = -PSD_RTOL * max(eigenvalues[-1], 0.0)
    if eigenvalues[0] < floor:
        raise KernelNotPSDError(
            "El kernel no es semidefinido positivo",
            {"invariant": "psd", "smallest": float(eigenvalues[0]), "largest": float(eigenvalues[-1])},
        )


def factor_for_sampling(k: CorrelationKernel) -> np.ndarray:
    """
    Factor triangular inferior L con L·Lᵀ = τ.

    Los autovalores negativos dentro de 1e-10·λ_max se fijan a cero antes de
    factorizar; así el kernel global (rango 1) da un factor de rango 1.

    Raises:
        KernelNotPSDError: si el kernel no es PSD dentro de tolerancia
    """
    _check_symmetric(k)
    eigenvalues, vectors = np.linalg.eigh(k.matrix)
    lam_max = max(float(eigenvalues[-1]), 0.0)
    floor = -PSD_RTOL * lam_max
    if eigenvalues[0] < floor:
        raise KernelNotPSDError(
            "No se puede factorizar un kernel no PSD",
            {"invariant": "psd", "smallest": float(eigenvalues[0]), "floor": floor},
        )
    clamped = np.where(eigenvalues < PSD_RTOL * lam_max, 0.0, eigenvalues)
    if np.any(clamped != eigenvalues):
        logger.debug(f"Autovalores anulados antes de factorizar: {int(np.sum(clamped != eigenvalues))}")

    # B·Bᵀ = τ; la QR de Bᵀ da R con Rᵀ·R = τ, es decir L = Rᵀ
    b = vectors * np.sqrt(clamped)
    r = qr(b.T, mode="r")[0]
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (signs[:, None] * r).T
