# src/decolab/services/tracedyn.py
"""
Dinámica clásica de trazas sobre matrices hermíticas.

Con coeficientes escalares el Lagrangiano es invariante bajo conjugación
unitaria simultánea de todos los q_r, y la carga C̃ = Σ_r[q_r, p_r] se
conserva. El integrador es leapfrog (kick-drift-kick) y acepta pilas con un
eje de lote delante, (lote, r_cells, n, n), para integrar varias condiciones
iniciales a la vez.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from ..core.exceptions import DimensionMismatchError, InvalidParameterError, TraceDynamicsError
from ..core.quantum import hermitize
from ..schemas.tracedyn import (
    TRACE_HERMITIAN_TOL,
    ConservationRow,
    ConservationRun,
    TraceModelSpec,
    TraceState,
)

logger = logging.getLogger(__name__)

# cada cuántos pasos se comprueba la finitud y se re-hermitiza
FINITE_CHECK_EVERY = 1000


def _check_shapes(spec: TraceModelSpec, state: TraceState) -> None:
    if state.r_cells != spec.r_cells or state.n != spec.n:
        raise DimensionMismatchError(
            "El estado no corresponde al modelo",
            {"state": (state.r_cells, state.n), "model": (spec.r_cells, spec.n)},
        )


def _trace(stack: np.ndarray) -> np.ndarray:
    # Σ_r Tr(·) sobre los dos últimos ejes y el de sitios; conserva el eje de lote
    return np.trace(stack, axis1=-2, axis2=-1).sum(axis=-1)


# ============================================================
# ENERGÍA Y FUERZAS
# ============================================================

def _potential(spec: TraceModelSpec, q: np.ndarray) -> np.ndarray:
    q2 = q @ q
    value = 0.5 * spec.omega2 * _trace(q2) + spec.lam * _trace(q2 @ q2)
    if spec.r_cells > 1 and spec.kappa != 0:
        value = value + spec.kappa * _trace(q[..., :-1, :, :] @ q[..., 1:, :, :])
    if spec.matrix_coefficient is not None:
        value = value + 0.5 * _trace(spec.matrix_coefficient @ q2)
    return np.real(value)


def _forces(spec: TraceModelSpec, q: np.ndarray) -> np.ndarray:
    force = -spec.omega2 * q
    if spec.lam != 0:
        force -= (4.0 * spec.lam) * (q @ q @ q)
    if spec.r_cells > 1 and spec.kappa != 0:
        force[..., :-1, :, :] -= spec.kappa * q[..., 1:, :, :]
        force[..., 1:, :, :] -= spec.kappa * q[..., :-1, :, :]
    if spec.matrix_coefficient is not None:
        a = spec.matrix_coefficient
        force -= 0.5 * (q @ a + a @ q)
    return force


def hamiltonian(spec: TraceModelSpec, state: TraceState) -> float:
    """𝐇 = Tr Σ_r(½p_r² + ½ω²q_r² + λq_r⁴ + κq_r q_{r+1})."""
    _check_shapes(spec, state)
    kinetic = 0.5 * np.real(_trace(state.p @ state.p))
    return float(kinetic + _potential(spec, state.q))


def lagrangian(spec: TraceModelSpec, q: np.ndarray, q_dot: np.ndarray) -> float:
    """𝐋 = Tr Σ_r ½q̇_r² − V(q); usado para contrastar las fuerzas por diferencias finitas."""
    return float(0.5 * np.real(_trace(q_dot @ q_dot)) - _potential(spec, q))


def forces(spec: TraceModelSpec, state: TraceState) -> np.ndarray:
    """ṗ_r = −ω²q_r − 4λq_r³ − κ(q_{r−1} + q_{r+1}), extremos de la cadena abiertos."""
    _check_shapes(spec, state)
    return hermitize(_forces(spec, state.q))


# ============================================================
# INTEGRACIÓN
# ============================================================

def _leapfrog_arrays(
    spec: TraceModelSpec,
    q: np.ndarray,
    p: np.ndarray,
    dt: float,
    n_steps: int,
    t0: float,
) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * dt
    force = _forces(spec, q)
    for step in range(1, n_steps + 1):
        p = p + half * force
        q = q + dt * p
        force = _forces(spec, q)
        p = p + half * force
        if step % FINITE_CHECK_EVERY == 0 or step == n_steps:
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                raise TraceDynamicsError(
                    "Valores no finitos en la integración",
                    {"step": step, "t": t0 + step * dt, "dt": dt, "checked_every": FINITE_CHECK_EVERY},
                )
            q = hermitize(q)
            p = hermitize(p)
            force = _forces(spec, q)
    return q, p


def _check_step(dt: float, n_steps: int) -> None:
    if dt <= 0:
        raise InvalidParameterError("dt debe ser > 0", {"dt": dt})
    if n_steps < 0:
        raise InvalidParameterError("n_steps debe ser ≥ 0", {"n_steps": n_steps})


def leapfrog(spec: TraceModelSpec, state: TraceState, dt: float, n_steps: int) -> TraceState:
    """
    Kick-drift-kick con q̇_r = p_r; re-hermitiza en cada chequeo de finitud
    y al final.

    Raises:
        InvalidParameterError: dt ≤ 0 o n_steps < 0
        TraceDynamicsError: aparición de valores no finitos
    """
    _check_step(dt, n_steps)
    _check_shapes(spec, state)
    if n_steps == 0:
        return state
    q, p = _leapfrog_arrays(spec, np.array(state.q), np.array(state.p), dt, n_steps, state.t)
    return TraceState(q=q, p=p, t=state.t + n_steps * dt)


def reversed_momenta(state: TraceState) -> TraceState:
    """Mismo estado con p → −p, para integrar hacia atrás con dt > 0."""
    return TraceState(q=state.q, p=-state.p, t=state.t)


# ============================================================
# CARGA CONSERVADA E INVARIANCIA
# ============================================================

def per_site_commutators(state: TraceState) -> np.ndarray:
    """[q_r, p_r] por sitio, pila (r_cells, n, n)."""
    return state.q @ state.p - state.p @ state.q


def c_tilde(state: TraceState) -> np.ndarray:
    """C̃ = Σ_r [q_r, p_r], sin proyectar."""
    return per_site_commutators(state).sum(axis=0)


def conjugate_state(state: TraceState, u: np.ndarray) -> TraceState:
    """q_r → U q_r U†, p_r → U p_r U†."""
    u_dag = u.conj().T
    return TraceState(q=hermitize(u @ state.q @ u_dag), p=hermitize(u @ state.p @ u_dag), t=state.t)


def unitary_from_generator(generator: np.ndarray, epsilon: float) -> np.ndarray:
    """e^{iεΛ} para Λ hermítica, por autodescomposición."""
    generator = np.asarray(generator, dtype=np.complex128)
    if generator.ndim != 2 or generator.shape[0] != generator.shape[1]:
        raise InvalidParameterError("El generador debe ser una matriz cuadrada", {"shape": generator.shape})
    scale = max(1.0, float(np.max(np.abs(generator))))
    if float(np.max(np.abs(generator - generator.conj().T))) > TRACE_HERMITIAN_TOL * scale:
        raise InvalidParameterError("El generador Λ no es hermítico")
    energies, vectors = np.linalg.eigh(generator)
    return (vectors * np.exp(1j * epsilon * energies)) @ vectors.conj().T


def unitary_invariance_residual(
    spec: TraceModelSpec,
    state: TraceState,
    generator: np.ndarray,
    epsilon: float,
) -> float:
    """|𝐇(U q U†, U p U†) − 𝐇(q, p)| con U = e^{iεΛ}."""
    _check_shapes(spec, state)
    u = unitary_from_generator(generator, epsilon)
    if u.shape[0] != spec.n:
        raise DimensionMismatchError("Λ y el modelo tienen dimensiones distintas", {"generator": u.shape[0], "n": spec.n})
    return abs(hamiltonian(spec, conjugate_state(state, u)) - hamiltonian(spec, state))


# ============================================================
# ESTADOS ALEATORIOS Y SERIES DE CONSERVACIÓN
# ============================================================

def random_hermitian(rng: np.random.Generator, shape: tuple, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return scale * hermitize(z) / np.sqrt(2.0)


def random_state(spec: TraceModelSpec, rng: np.random.Generator, scale: float = 1.0) -> TraceState:
    """q_r y p_r hermíticos con entradas gaussianas de escala `scale`."""
    shape = (spec.r_cells, spec.n, spec.n)
    return TraceState(q=random_hermitian(rng, shape, scale), p=random_hermitian(rng, shape, scale))


def _max_abs(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr))) if arr.size else 0.0


class _Recorder:
    """Filas de conservación de un miembro del lote, relativas a su estado inicial."""

    def __init__(self, spec: TraceModelSpec, state: TraceState):
        self.spec = spec
        self.c0 = c_tilde(state)
        self.sites0 = per_site_commutators(state)
        self.energy0 = hamiltonian(spec, state)
        self.rows: List[ConservationRow] = []
        self.record(state)

    def record(self, current: TraceState) -> None:
        sites = per_site_commutators(current)
        self.rows.append(
            ConservationRow(
                t=current.t,
                energy=hamiltonian(self.spec, current),
                c_drift=_max_abs(sites.sum(axis=0) - self.c0),
                site_drifts=[_max_abs(s) for s in (sites - self.sites0)],
            )
        )

    def finish(self, final_state: TraceState) -> ConservationRun:
        return ConservationRun(
            rows=self.rows, c0_norm=_max_abs(self.c0), energy0=self.energy0, final_state=final_state
        )


def run_conservation_batch(
    spec: TraceModelSpec,
    states: Sequence[TraceState],
    dt: float,
    n_steps: int,
    record_every: Optional[int] = None,
) -> List[ConservationRun]:
    """
    run_conservation para varias condiciones iniciales integradas juntas:
    cada paso es un único producto matricial sobre la pila (lote, r, n, n).
    """
    if dt <= 0 or n_steps < 1:
        raise InvalidParameterError("dt > 0 y n_steps ≥ 1", {"dt": dt, "n_steps": n_steps})
    if not states:
        raise InvalidParameterError("Se necesita al menos un estado inicial")
    for state in states:
        _check_shapes(spec, state)
    record_every = record_every or max(1, n_steps // 100)

    recorders = [_Recorder(spec, state) for state in states]
    t0 = np.array([state.t for state in states])
    q = np.stack([state.q for state in states])
    p = np.stack([state.p for state in states])

    done = 0
    while done < n_steps:
        chunk = min(record_every, n_steps - done)
        q, p = _leapfrog_arrays(spec, q, p, dt, chunk, float(t0[0]) + done * dt)
        done += chunk
        for k, recorder in enumerate(recorders):
            recorder.record(TraceState(q=q[k], p=p[k], t=float(t0[k]) + done * dt))
        logger.debug(
            f"Trazas: paso {done}/{n_steps}, deriva de C̃ {max(r.rows[-1].c_drift for r in recorders):.3e}"
        )

    runs = [
        recorder.finish(TraceState(q=q[k], p=p[k], t=float(t0[k]) + n_steps * dt))
        for k, recorder in enumerate(recorders)
    ]
    logger.info(
        f"Dinámica de trazas: {len(runs)} estados, {n_steps} pasos, "
        f"max |ΔC̃| = {max(r.max_c_drift for r in runs):.3e}, "
        f"max |Δ𝐇| = {max(r.max_energy_drift for r in runs):.3e}"
    )
    return runs


def run_conservation(
    spec: TraceModelSpec,
    state: TraceState,
    dt: float,
    n_steps: int,
    record_every: Optional[int] = None,
) -> ConservationRun:
    """
    Integra n_steps pasos y registra 𝐇, ‖C̃ − C̃₀‖_max y la deriva de cada
    [q_r, p_r] cada `record_every` pasos.

    La deriva por sitio sólo se informa; no se le exige ninguna cota.
    """
    return run_conservation_batch(spec, [state], dt, n_steps, record_every)[0]
