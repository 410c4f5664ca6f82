# src/decolab/services/master.py
"""
Motores deterministas: lados derechos de las cinco ecuaciones maestras,
integrador RK4 de paso fijo y extracción de tasas de decoherencia.
"""

import logging
import math
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

from ..core.exceptions import DimensionMismatchError, IntegrationError, InvalidParameterError
from ..core.quantum import from_eigenbasis, hermitize, to_eigenbasis, validate_state
from ..core.units import DEFAULT_UNITS, UnitsContext
from ..schemas.evolution import (
    AdlerEffective,
    DiosiPenrosePointer,
    EvolutionModel,
    GlobalDoubleCommutator,
    LocalDoubleCommutator,
    LocalHamiltonian,
    MilburnExact,
    MilburnFirstOrder,
    Trajectory,
)
from ..schemas.kernels import CorrelationKernel
from ..schemas.states import DensityMatrix, DiagonalHamiltonian, HamiltonianSpec
from .kernels import require_psd

logger = logging.getLogger(__name__)

TRACE_RENORM_TOL = 1e-12
TRACE_ABORT_TOL = 1e-6
INTEGRATED_POSITIVITY_TOL = 1e-8

RhsFunction = Callable[[np.ndarray], np.ndarray]
StateLike = Union[DensityMatrix, np.ndarray]


class DecoherenceConvention(str, Enum):
    NOMINAL = "nominal"         # t_D = ℏ²/(τΔE²)
    RATE_EXACT = "rate_exact"  # t_D = 2ℏ²/(τΔE²), inversa de la tasa τΔE²/2ℏ²


def _array(rho: StateLike) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _check_dim(rho: np.ndarray, dim: int) -> None:
    if rho.shape[-1] != dim:
        raise DimensionMismatchError(
            "Dimensiones de ρ y del generador no coinciden",
            {"rho_dim": rho.shape[-1], "generator_dim": dim},
        )


# ============================================================
# LADOS DERECHOS
# ============================================================

def rhs_global(
    h: HamiltonianSpec,
    tau: float,
    rho: StateLike,
    units: UnitsContext = DEFAULT_UNITS,
) -> np.ndarray:
    """−iℏ⁻¹[H,ρ] − ½τℏ⁻²[H,[H,ρ]] (s⁻¹)."""
    if tau < 0:
        raise InvalidParameterError("τ debe ser ≥ 0", {"tau": tau})
    arr = _array(rho)
    _check_dim(arr, h.dim)
    hm = h.as_matrix()
    comm = _commutator(hm, arr)
    return -1j / units.hbar * comm - 0.5 * tau / units.hbar ** 2 * _commutator(hm, comm)


def _local_dissipator(stack: np.ndarray, weighted: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # Σ_r [H_r, [K_r, ρ]] con K_r = Σ_r′ τ_rr′ H_r′
    inner = weighted @ rho - rho @ weighted
    return np.sum(stack @ inner - inner @ stack, axis=0)


def rhs_local(
    parts: LocalHamiltonian,
    kernel: CorrelationKernel,
    rho: StateLike,
    units: UnitsContext = DEFAULT_UNITS,
) -> np.ndarray:
    """−iℏ⁻¹[H,ρ] − ½ℏ⁻² Σ_rr′ τ_rr′ [H_r,[H_r′,ρ]] (s⁻¹)."""
    if kernel.n_cells != parts.n_parts:
        raise DimensionMismatchError(
            "El kernel y la descomposición local tienen tamaños distintos",
            {"kernel_cells": kernel.n_cells, "parts": parts.n_parts},
        )
    require_psd(kernel)
    arr = _array(rho)
    _check_dim(arr, parts.dim)
    stack = parts.stacked()
    weighted = np.tensordot(kernel.matrix, stack, axes=(1, 0))
    total = stack.sum(axis=0)
    return (
        -1j / units.hbar * _commutator(total, arr)
        - 0.5 / units.hbar ** 2 * _local_dissipator(stack, weighted, arr)
    )


def _gaps(h: HamiltonianSpec) -> np.ndarray:
    energies, _ = h.eigensystem()
    return energies[:, None] - energies[None, :]


def milburn_factors(h: HamiltonianSpec, tau_pl: float, hbar: float) -> np.ndarray:
    """(e^{−iω_mn τ_Pl} − 1)/τ_Pl en la base propia de H."""
    return np.expm1(-1j * _gaps(h) * tau_pl / hbar) / tau_pl


def rhs_milburn_exact(
    h: HamiltonianSpec,
    tau_pl: float,
    rho: StateLike,
    units: UnitsContext = DEFAULT_UNITS,
) -> np.ndarray:
    """τ_Pl⁻¹[e^{−iHτ_Pl/ℏ} ρ e^{iHτ_Pl/ℏ} − ρ], evaluado en la base propia."""
    if tau_pl <= 0:
        raise InvalidParameterError("τ_Pl debe ser > 0", {"tau_pl": tau_pl})
    arr = _array(rho)
    _check_dim(arr, h.dim)
    factors = milburn_factors(h, tau_pl, units.hbar)
    return from_eigenbasis(factors * to_eigenbasis(arr, h), h)


def _check_pointer_rates(rates: np.ndarray, dim: int) -> np.ndarray:
    rates = np.asarray(rates, dtype=np.float64)
    if rates.shape != (dim, dim):
        raise DimensionMismatchError("Γ y H_diag tienen dimensiones distintas", {"rates": rates.shape, "dim": dim})
    if np.any(rates < 0):
        raise InvalidParameterError("tasa Γ_nm negativa", {"invariant": "nonnegative", "min_rate": float(rates.min())})
    if np.any(rates != rates.T):
        raise InvalidParameterError(
            "Γ debe ser simétrica",
            {"invariant": "symmetric", "residual": float(np.max(np.abs(rates - rates.T)))},
        )
    if np.any(np.diag(rates) != 0):
        raise InvalidParameterError(
            "la diagonal de Γ debe ser nula",
            {"invariant": "zero_diagonal", "residual": float(np.max(np.abs(np.diag(rates))))},
        )
    return rates


def rhs_dp_pointer(
    rates: np.ndarray,
    h_diag: DiagonalHamiltonian,
    rho: StateLike,
    units: UnitsContext = DEFAULT_UNITS,
) -> np.ndarray:
    """
    dρ_nm/dt = −iω_nm ρ_nm − Γ_nm ρ_nm en la base de estados puntero.

    Raises:
        InvalidParameterError: Γ con entradas negativas, no simétrica o con
            diagonal no nula
    """
    rates = _check_pointer_rates(rates, h_diag.dim)
    arr = _array(rho)
    _check_dim(arr, h_diag.dim)
    return (-1j * _gaps(h_diag) / units.hbar - rates) * arr


def build_rhs(model: EvolutionModel, units: UnitsContext = DEFAULT_UNITS) -> RhsFunction:
    """
    Devuelve f(ρ) para el modelo, con los operadores ya precalculados.

    AdlerEffective y MilburnFirstOrder delegan en rhs_global, por lo que su
    lado derecho coincide bit a bit con el de GlobalDoubleCommutator.
    """
    hbar = units.hbar

    if isinstance(model, GlobalDoubleCommutator):
        return lambda rho: rhs_global(model.h, model.tau, rho, units)

    if isinstance(model, AdlerEffective):
        return lambda rho: rhs_global(model.h_eff, model.tau, rho, units)

    if isinstance(model, MilburnFirstOrder):
        return lambda rho: rhs_global(model.h, model.tau_planck, rho, units)

    if isinstance(model, MilburnExact):
        factors = milburn_factors(model.h, model.tau_planck, hbar)
        h = model.h
        return lambda rho: from_eigenbasis(factors * to_eigenbasis(rho, h), h)

    if isinstance(model, LocalDoubleCommutator):
        require_psd(model.kernel)
        stack = model.parts.stacked()
        weighted = np.tensordot(model.kernel.matrix, stack, axes=(1, 0))
        total = stack.sum(axis=0)

        def _local(rho: np.ndarray) -> np.ndarray:
            return (
                -1j / hbar * _commutator(total, rho)
                - 0.5 / hbar ** 2 * _local_dissipator(stack, weighted, rho)
            )

        return _local

    if isinstance(model, DiosiPenrosePointer):
        return lambda rho: rhs_dp_pointer(model.rates, model.h_diag, rho, units)

    raise InvalidParameterError(f"Modelo de evolución desconocido: {type(model).__name__}")


# ============================================================
# ESCALAS DE TIEMPO
# ============================================================

def _spread(energies: np.ndarray) -> float:
    return float(np.max(energies) - np.min(energies)) if energies.size else 0.0


def model_time_scales(model: EvolutionModel, units: UnitsContext = DEFAULT_UNITS) -> Tuple[float, float]:
    """(frecuencia máxima ω en rad/s, tasa de decoherencia máxima en s⁻¹)."""
    hbar = units.hbar
    if isinstance(model, (GlobalDoubleCommutator, AdlerEffective, MilburnFirstOrder)):
        h = model.h_eff if isinstance(model, AdlerEffective) else model.h
        tau = model.tau_planck if isinstance(model, MilburnFirstOrder) else model.tau
        spread = _spread(h.eigensystem()[0])
        return spread / hbar, tau * spread ** 2 / (2 * hbar ** 2)
    if isinstance(model, MilburnExact):
        factors = milburn_factors(model.h, model.tau_planck, hbar)
        return float(np.max(np.abs(factors.imag))), float(np.max(np.abs(factors.real)))
    if isinstance(model, LocalDoubleCommutator):
        stack = model.parts.stacked()
        norms = np.array([np.linalg.norm(part, 2) for part in stack])
        omega = float(np.linalg.norm(stack.sum(axis=0), 2)) * 2 / hbar
        kernel_norm = float(np.max(np.abs(np.linalg.eigvalsh(model.kernel.matrix))))
        return omega, 2 * kernel_norm * float(np.sum(norms ** 2)) / hbar ** 2
    if isinstance(model, DiosiPenrosePointer):
        return _spread(np.asarray(model.h_diag.eigenvalues)) / hbar, float(np.max(model.rates))
    raise InvalidParameterError(f"Modelo de evolución desconocido: {type(model).__name__}")


def model_dim(model: EvolutionModel) -> int:
    """Dimensión del espacio de Hilbert sobre el que actúa el modelo."""
    if isinstance(model, LocalDoubleCommutator):
        return model.parts.dim
    if isinstance(model, DiosiPenrosePointer):
        return model.h_diag.dim
    if isinstance(model, AdlerEffective):
        return model.h_eff.dim
    return model.h.dim


def recommended_n_steps(
    model: EvolutionModel,
    t_final: float,
    units: UnitsContext = DEFAULT_UNITS,
) -> int:
    """Menor n con paso ≤ min(ℏ/(10‖H‖), t_D/100)."""
    omega, rate = model_time_scales(model, units)
    bounds = []
    if omega > 0:
        bounds.append(1.0 / (10.0 * omega))
    if rate > 0:
        bounds.append(1.0 / (100.0 * rate))
    if not bounds:
        return 1
    return max(1, math.ceil(t_final / min(bounds)))


def decoherence_time(
    delta_e: float,
    tau: float,
    convention: DecoherenceConvention = DecoherenceConvention.NOMINAL,
    units: UnitsContext = DEFAULT_UNITS,
) -> float:
    """
    t_D para una brecha ΔE y una escala τ.

    NOMINAL devuelve ℏ²/(τΔE²); RATE_EXACT devuelve 2ℏ²/(τΔE²), inversa de la
    tasa de la ecuación maestra. El motor usa siempre la segunda como verdad.
    """
    if delta_e <= 0 or tau <= 0:
        raise InvalidParameterError(
            "ΔE y τ deben ser positivos", {"delta_e": delta_e, "tau": tau}
        )
    base = units.hbar ** 2 / (tau * delta_e ** 2)
    if DecoherenceConvention(convention) is DecoherenceConvention.RATE_EXACT:
        return 2.0 * base
    return base


# ============================================================
# INTEGRADOR
# ============================================================

def integrate(
    model: EvolutionModel,
    rho0: DensityMatrix,
    t_final: float,
    n_steps: int,
    units: UnitsContext = DEFAULT_UNITS,
) -> Trajectory:
    """
    RK4 clásico de paso fijo; guarda el estado tras cada paso.

    Cada paso se re-hermitiza; la traza se renormaliza (y se registra) sólo si
    se aparta de 1 en más de 1e-12. La positividad nunca se fuerza.

    Raises:
        InvalidParameterError: n_steps < 1 o t_final ≤ 0
        IntegrationError: deriva de traza > 1e-6 (paso demasiado grande) o
            estado final no positivo dentro de 1e-8
    """
    if n_steps < 1:
        raise InvalidParameterError("n_steps debe ser ≥ 1", {"n_steps": n_steps})
    if t_final <= 0:
        raise InvalidParameterError("t_final debe ser > 0", {"t_final": t_final})

    violations = validate_state(rho0)
    if violations:
        raise IntegrationError(
            "Estado inicial inválido",
            {"violations": [v.invariant for v in violations]},
        )

    f = build_rhs(model, units)
    dt = t_final / n_steps

    suggested = recommended_n_steps(model, t_final, units)
    if n_steps < suggested:
        logger.warning(
            f"n_steps = {n_steps} por debajo del recomendado ({suggested}) para {model.kind}"
        )

    rho = np.array(rho0.entries, dtype=np.complex128)
    _check_dim(rho, model_dim(model))
    states = np.empty((n_steps + 1,) + rho.shape, dtype=np.complex128)
    states[0] = rho
    renormalizations = 0

    for step in range(1, n_steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = hermitize(rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))

        trace = complex(np.trace(rho))
        drift = abs(trace - 1.0)
        if drift > TRACE_ABORT_TOL or not np.isfinite(drift):
            raise IntegrationError(
                "Deriva de traza excesiva: paso de integración demasiado grande",
                {"step": step, "t": step * dt, "trace_drift": drift, "dt": dt},
            )
        if drift > TRACE_RENORM_TOL:
            rho = rho / trace.real
            renormalizations += 1
            logger.debug(f"Traza renormalizada en el paso {step} (deriva {drift:.3e})")
        states[step] = rho

    if renormalizations:
        logger.info(f"{model.kind}: {renormalizations} renormalizaciones de traza")

    final_violations = validate_state(states[-1], positivity_tol=INTEGRATED_POSITIVITY_TOL)
    if final_violations:
        raise IntegrationError(
            "El estado final viola los invariantes de DensityMatrix",
            {v.invariant: v.residual for v in final_violations},
        )

    times = np.linspace(0.0, t_final, n_steps + 1)
    return Trajectory(times=times, rho=states, model=model.kind)


# ============================================================
# AJUSTE DE TASAS
# ============================================================

def fit_offdiag_decay(traj: Trajectory, i: int, j: int) -> Tuple[float, float, float]:
    """
    Ajuste lineal de log|ρ_ij(t)| y de la fase desenrollada.

    Returns:
        (tasa en s⁻¹, velocidad de fase en rad/s, RMS del ajuste logarítmico)

    Raises:
        InvalidParameterError: i == j o |ρ_ij(0)| ≤ 1e-10
    """
    if i == j:
        raise InvalidParameterError("Se requiere un elemento fuera de la diagonal", {"i": i, "j": j})
    values = traj.element(i, j)
    if abs(values[0]) <= 1e-10 or np.any(values == 0):
        raise InvalidParameterError(
            "El elemento fuera de la diagonal es nulo",
            {"i": i, "j": j, "initial": abs(values[0])},
        )

    t0 = traj.times[0]
    span = traj.times[-1] - t0
    x = (traj.times - t0) / span

    log_mag = np.log(np.abs(values))
    slope, intercept = np.polyfit(x, log_mag, 1)
    residual = float(np.sqrt(np.mean((log_mag - (slope * x + intercept)) ** 2)))

    phase = np.unwrap(np.angle(values))
    phase_slope, _ = np.polyfit(x, phase, 1)

    return float(-slope / span), float(phase_slope / span), residual


def balanced_pointer_state(n: int) -> DensityMatrix:
    """Superposición equilibrada de n estados puntero: todas las entradas 1/n."""
    if n < 1:
        raise InvalidParameterError("n debe ser ≥ 1", {"n": n})
    return DensityMatrix(entries=np.full((n, n), 1.0 / n, dtype=np.complex128))
