# src/decolab/services/stochastic.py
"""
Cuadros estocásticos de la incertidumbre del tiempo.

Cada trayectoria es una evolución unitaria con un tiempo (o un ℏ⁻¹) aleatorio;
la matriz densidad es la media M[|ψ⟩⟨ψ|] sobre el conjunto. Los flujos de
números aleatorios son Philox derivados de SeedSequence(seed, spawn_key=(k,)),
por lo que la trayectoria k es la misma sin importar el orden de evaluación.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Union

import numpy as np

from ..core.config import settings
from ..core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    SamplingError,
)
from ..core.quantum import evolve_array, hermitize
from ..core.units import DEFAULT_UNITS, UnitsContext
from ..schemas.evolution import Trajectory
from ..schemas.noise import (
    LOCAL_NOISE_KINDS,
    ComparisonTable,
    EnsembleResult,
    FluctuatingPlanck,
    GaussianGlobalTime,
    GaussianLocalTimeField,
    LocalFluctuatingPlanck,
    NoiseDraw,
    NoiseModel,
    PoissonDiscreteTime,
)
from ..schemas.states import DensityMatrix, HamiltonianSpec
from .kernels import factor_for_sampling

logger = logging.getLogger(__name__)

# cota inferior absoluta del error estándar en los z-scores (entradas sin ruido)
Z_FLOOR = 1e-9
TIME_MATCH_RTOL = 1e-9


# ============================================================
# GENERADORES
# ============================================================

def trajectory_rng(seed: int, k: Optional[int] = None) -> np.random.Generator:
    """
    Generador Philox de la trayectoria k.

    El flujo se deriva de SeedSequence(seed, spawn_key=(k,)); sin k se usa la
    semilla sin derivar (muestras sueltas de sample_state).
    """
    if seed < 0:
        raise InvalidParameterError("La semilla debe ser ≥ 0", {"seed": seed})
    spawn_key = () if k is None else (int(k),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def _check_times(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if times.ndim != 1 or times.size == 0:
        raise InvalidParameterError("Se necesita al menos un tiempo")
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise InvalidParameterError("Los tiempos deben ser finitos y ≥ 0", {"min": float(times.min())})
    if np.any(np.diff(times) <= 0):
        raise InvalidParameterError("Los tiempos deben ser estrictamente crecientes")
    return times


# ============================================================
# MUESTREO DEL RUIDO
# ============================================================

def sample_noise(
    model: NoiseModel,
    times,
    rng: np.random.Generator,
    units: UnitsContext = DEFAULT_UNITS,
    factor: Optional[np.ndarray] = None,
) -> NoiseDraw:
    """
    Variables aleatorias de una trayectoria en los tiempos dados.

    GaussianGlobalTime y PoissonDiscreteTime son procesos en el tiempo
    (incrementos independientes entre instantes consecutivos). Los canales de
    ℏ⁻¹ fluctuante y los campos locales se muestrean por horizonte, con una
    variable independiente para cada tiempo pedido.

    `factor` permite reutilizar el factor L·Lᵀ = τ de los modelos locales
    entre trayectorias.

    Raises:
        SamplingError: FluctuatingPlanck o LocalFluctuatingPlanck en t = 0
    """
    times = _check_times(times)

    if isinstance(model, GaussianGlobalTime):
        increments = np.diff(times, prepend=0.0)
        delta = np.cumsum(np.sqrt(model.tau * increments) * rng.standard_normal(times.size))
        return NoiseDraw(times=times, effective_times=times + delta)

    if isinstance(model, PoissonDiscreteTime):
        if model.tau_pl == 0:
            return NoiseDraw(times=times, effective_times=times)
        increments = np.diff(times, prepend=0.0)
        counts = np.cumsum(rng.poisson(increments / model.tau_pl)).astype(np.float64)
        return NoiseDraw(times=times, effective_times=counts * model.tau_pl, counts=counts)

    if isinstance(model, FluctuatingPlanck):
        _reject_zero_horizon(times, model.kind)
        # δ ~ N(0, ℏ⁻²τ/t); la fase (ℏ⁻¹ + δ)Et equivale al tiempo t(1 + ℏδ)
        shifts = np.sqrt(model.tau / times) / units.hbar * rng.standard_normal(times.size)
        return NoiseDraw(
            times=times,
            effective_times=times * (1.0 + units.hbar * shifts),
            planck_shifts=shifts,
        )

    if isinstance(model, GaussianLocalTimeField):
        factor = factor_for_sampling(model.kernel) if factor is None else factor
        z = rng.standard_normal((times.size, model.kernel.n_cells))
        delta = np.sqrt(times)[:, None] * (z @ factor.T)
        return NoiseDraw(times=times, local_times=times[:, None] + delta)

    if isinstance(model, LocalFluctuatingPlanck):
        _reject_zero_horizon(times, model.kind)
        factor = factor_for_sampling(model.kernel) if factor is None else factor
        z = rng.standard_normal((times.size, model.kernel.n_cells))
        shifts = (z @ factor.T) / (units.hbar * np.sqrt(times)[:, None])
        return NoiseDraw(
            times=times,
            local_times=times[:, None] * (1.0 + units.hbar * shifts),
            planck_shifts=shifts,
        )

    raise InvalidParameterError(f"Modelo de ruido desconocido: {type(model).__name__}")


def _reject_zero_horizon(times: np.ndarray, kind: str) -> None:
    if np.any(times == 0):
        raise SamplingError(
            "La varianza de δℏ⁻¹ diverge en t = 0",
            {"model": kind, "t": 0.0},
        )


# ============================================================
# REALIZACIONES
# ============================================================

def _local_realization(rho0: np.ndarray, stack: np.ndarray, local_times: np.ndarray, hbar: float) -> np.ndarray:
    # exponente hermítico Σ_r H_r t_r por instante, exponenciado por autodescomposición
    exponents = hermitize(np.tensordot(local_times, stack, axes=(1, 0)))
    energies, vectors = np.linalg.eigh(exponents)
    phases = np.exp(-1j * energies / hbar)
    u = (vectors * phases[:, None, :]) @ np.conj(np.swapaxes(vectors, -1, -2))
    return u @ rho0 @ np.conj(np.swapaxes(u, -1, -2))


def realize(
    model: NoiseModel,
    rho0: np.ndarray,
    h: HamiltonianSpec,
    draw: NoiseDraw,
    units: UnitsContext = DEFAULT_UNITS,
) -> np.ndarray:
    """Estados |ψ⟩⟨ψ| de una trayectoria en cada tiempo de `draw`, forma (n_times, d, d)."""
    if model.kind in LOCAL_NOISE_KINDS:
        states = _local_realization(rho0, model.parts.stacked(), draw.local_times, units.hbar)
    else:
        states = evolve_array(rho0, h, draw.effective_times, units.hbar)
    return hermitize(states)


def _model_dim(model: NoiseModel, h: HamiltonianSpec) -> int:
    if model.kind in LOCAL_NOISE_KINDS:
        if model.parts.dim != h.dim:
            raise DimensionMismatchError(
                "Las partes locales y H tienen dimensiones distintas",
                {"parts_dim": model.parts.dim, "h_dim": h.dim},
            )
        return model.parts.dim
    return h.dim


def _check_state(rho0: DensityMatrix, model: NoiseModel, h: HamiltonianSpec) -> np.ndarray:
    dim = _model_dim(model, h)
    if rho0.dim != dim:
        raise DimensionMismatchError(
            "Dimensiones de ρ₀ y del Hamiltoniano no coinciden",
            {"rho_dim": rho0.dim, "h_dim": dim},
        )
    if model.kind in LOCAL_NOISE_KINDS and not model.parts.commuting():
        logger.info(
            f"{model.kind}: partes locales no conmutantes; "
            "la exponencial del generador muestreado se evalúa exactamente"
        )
    return np.asarray(rho0.entries)


def sample_state(
    model: NoiseModel,
    rho0: DensityMatrix,
    h: HamiltonianSpec,
    t: float,
    seed: int,
    units: UnitsContext = DEFAULT_UNITS,
) -> DensityMatrix:
    """
    Una realización del estado en el tiempo t, función determinista de la semilla.

    Para los modelos locales la evolución la fijan las partes H_r del modelo;
    `h` sólo se contrasta en dimensión.
    """
    if t < 0:
        raise InvalidParameterError("El tiempo de evolución debe ser ≥ 0", {"t": t})
    rho = _check_state(rho0, model, h)
    draw = sample_noise(model, [t], trajectory_rng(seed), units)
    return DensityMatrix(entries=realize(model, rho, h, draw, units)[0])


# ============================================================
# CONJUNTOS
# ============================================================

def ensemble_average(
    model: NoiseModel,
    rho0: DensityMatrix,
    h: HamiltonianSpec,
    times: Union[Sequence[float], np.ndarray],
    n_traj: int,
    seed: int,
    units: UnitsContext = DEFAULT_UNITS,
    workers: Optional[int] = None,
) -> EnsembleResult:
    """
    Media aritmética de n_traj realizaciones en cada tiempo.

    La trayectoria k usa trajectory_rng(seed, k). Las muestras se guardan en
    orden de k antes de reducir, así que el resultado es idéntico bit a bit
    con cualquier número de hilos.
    """
    if n_traj < 2:
        raise InvalidParameterError("n_traj debe ser ≥ 2", {"n_traj": n_traj})
    times = _check_times(times)
    rho = _check_state(rho0, model, h)
    workers = settings.ensemble_workers if workers is None else workers
    factor = factor_for_sampling(model.kernel) if model.kind in LOCAL_NOISE_KINDS else None

    def _one(k: int) -> np.ndarray:
        draw = sample_noise(model, times, trajectory_rng(seed, k), units, factor)
        return realize(model, rho, h, draw, units)

    logger.info(f"Conjunto {model.kind}: {n_traj} trayectorias, {times.size} tiempos, {workers} hilos")
    samples = np.empty((n_traj, times.size) + rho.shape, dtype=np.complex128)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k, states in enumerate(pool.map(_one, range(n_traj))):
                samples[k] = states
    else:
        for k in range(n_traj):
            samples[k] = _one(k)

    mean = hermitize(samples.mean(axis=0))
    variance = samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)
    std_error = np.sqrt(variance / n_traj)
    return EnsembleResult(times=times, mean=mean, std_error=std_error, n_traj=n_traj)


def ensemble_from_trajectory(traj: Trajectory, n_traj: int = 1) -> EnsembleResult:
    """Envuelve una trayectoria determinista como conjunto sin error estadístico."""
    return EnsembleResult(
        times=traj.times,
        mean=traj.rho,
        std_error=np.zeros(traj.rho.shape),
        n_traj=n_traj,
    )


def compare_to_master(ens: EnsembleResult, traj: Trajectory) -> tuple[float, ComparisonTable]:
    """
    z = |media − maestra| / error estándar por tiempo y entrada.

    Cada tiempo del conjunto debe coincidir (rtol 1e-9 del intervalo) con
    algún tiempo almacenado de la trayectoria. El error estándar se acota por
    debajo con Z_FLOOR, de modo que las entradas sin ruido sólo comparan redondeo.

    Raises:
        DimensionMismatchError: dimensiones distintas
        InvalidParameterError: malla de tiempos incompatible
    """
    if ens.mean.shape[1:] != traj.rho.shape[1:]:
        raise DimensionMismatchError(
            "El conjunto y la trayectoria tienen dimensiones distintas",
            {"ensemble": ens.mean.shape[1:], "trajectory": traj.rho.shape[1:]},
        )

    span = max(float(traj.times[-1] - traj.times[0]), float(np.max(np.abs(traj.times))), np.finfo(float).tiny)
    positions = np.searchsorted(traj.times, ens.times)
    indices = []
    for t, pos in zip(ens.times, positions):
        candidates = [p for p in (pos - 1, pos) if 0 <= p < traj.times.size]
        best = min(candidates, key=lambda p: abs(traj.times[p] - t))
        if abs(traj.times[best] - t) > TIME_MATCH_RTOL * span:
            raise InvalidParameterError(
                "Las mallas de tiempo no coinciden",
                {"t": float(t), "nearest": float(traj.times[best])},
            )
        indices.append(best)

    master = np.asarray(traj.rho)[indices]
    diff = np.abs(ens.mean - master)
    se = np.asarray(ens.std_error)
    z = diff / np.maximum(se, Z_FLOOR)

    table = ComparisonTable(times=ens.times, z=z, ensemble=ens.mean, master=master, std_error=se)
    logger.info(f"Comparación con {traj.model}: max z = {table.max_z:.3f}")
    return table.max_z, table
