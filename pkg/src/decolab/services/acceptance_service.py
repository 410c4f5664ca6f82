# src/decolab/services/acceptance_service.py
"""
Batería de aceptación de `decolab check`.

Ocho bloques de chequeos numéricos que se reúnen en un único RunReport. Con
quick=True se reducen conjuntos, pasos y casos para una pasada de humo.
"""

import logging
import math
import time
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from ..core.config import settings
from ..core.quantum import hermitize, make_superposition, pure_state, to_eigenbasis
from ..core.units import DEFAULT_UNITS, UnitsContext, g_per_cm3_to_si
from ..schemas.evolution import (
    AdlerEffective,
    DiosiPenrosePointer,
    GlobalDoubleCommutator,
    LocalDoubleCommutator,
    LocalHamiltonian,
    MilburnExact,
    MilburnFirstOrder,
)
from ..schemas.kernels import CorrelationKernel
from ..schemas.noise import GaussianLocalTimeField
from ..schemas.report import CheckResult, RunReport
from ..schemas.scenario import McCompareParams
from ..schemas.states import DenseHamiltonian, DensityMatrix, DiagonalHamiltonian, SuperpositionSpec
from ..schemas.tracedyn import TraceModelSpec
from .gravity import (
    critical_radius,
    dp_rate_check,
    egrav,
    smeared_ball_pair_energy,
    smeared_ball_self_energy,
)
from .kernels import diagonal_kernel
from .master import (
    DecoherenceConvention,
    build_rhs,
    decoherence_time,
    integrate,
    model_time_scales,
    recommended_n_steps,
    rhs_global,
    rhs_milburn_exact,
)
from .scenario_service import (
    TABLE_REFERENCE,
    build_lump_pair,
    count_crossings,
    engine_versions,
    mc_compare,
    round_significant,
)
from .stochastic import compare_to_master, ensemble_average, trajectory_rng
from .tracedyn import (
    random_hermitian,
    random_state,
    run_conservation,
    run_conservation_batch,
    unitary_invariance_residual,
)

logger = logging.getLogger(__name__)

# Escalas de referencia de los casos SI
DELTA_E = 1e-19  # J

Checks = List[CheckResult]


# ============================================================
# TIEMPOS Y LEYES DE DECAIMIENTO
# ============================================================

def check_milburn_table(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """t_D con τ = τ_Pl para 1 eV, 1 GeV y 1 J, redondeado a dos cifras."""
    checks = []
    for label, (energy, reference) in zip(("1eV", "1GeV", "1J"), TABLE_REFERENCE):
        t_d = decoherence_time(energy, units.tau_planck, DecoherenceConvention.NOMINAL, units)
        checks.append(
            CheckResult.evaluate(
                f"milburn_table.{label}",
                abs(round_significant(t_d) - reference) / reference,
                0.01,
                f"t_D={t_d:.4e} s, referencia {reference:.1e} s",
            )
        )
    return checks


def check_analytic_decay(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """|ρ₀₁(t)| frente a exp(−τΔE²t/2ℏ²) a lo largo de cinco tiempos de decoherencia."""
    tau = units.hbar / DELTA_E
    rate = tau * DELTA_E ** 2 / (2.0 * units.hbar ** 2)
    amplitude = 2 ** -0.5
    rho0, h = make_superposition(SuperpositionSpec(amplitudes=[amplitude, amplitude], energies=[0.0, DELTA_E]))
    traj = integrate(GlobalDoubleCommutator(h=h, tau=tau), rho0, 5.0 / rate, 4000, units)

    expected = 0.5 * np.exp(-rate * traj.times)
    gap = float(np.max(np.abs(np.abs(traj.element(0, 1)) - expected) / expected))
    return [CheckResult.evaluate("analytic_decay", gap, 1e-6, f"rate={rate:.4e} 1/s, 4000 pasos")]


def _milburn_deviation(theta: float, units: UnitsContext) -> float:
    tau_pl = theta * units.hbar / DELTA_E
    rho0, h = make_superposition(SuperpositionSpec(amplitudes=[0.6, 0.8], energies=[0.0, DELTA_E]))
    exact = rhs_milburn_exact(h, tau_pl, rho0, units)
    first = rhs_global(h, tau_pl, rho0, units)
    return float(np.max(np.abs(exact - first)) / np.max(np.abs(exact)))


def check_milburn_expansion(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """La desviación exacto-vs-desarrollo escala como θ² (factor 100 por década)."""
    thetas = (1e-2, 1e-3, 1e-4)
    deviations = [_milburn_deviation(theta, units) for theta in thetas]
    checks = [
        CheckResult.evaluate(
            "milburn_expansion.deviation_at_1e-3",
            deviations[1],
            1e-6,
            f"desviaciones {', '.join(f'{d:.3e}' for d in deviations)}",
        )
    ]
    for k in range(len(thetas) - 1):
        ratio = deviations[k] / deviations[k + 1]
        checks.append(
            CheckResult.evaluate(
                f"milburn_expansion.ratio_{thetas[k]:.0e}_{thetas[k + 1]:.0e}",
                abs(ratio - 100.0),
                10.0,
                f"cociente {ratio:.3f}",
            )
        )
    return checks


# ============================================================
# CONJUNTOS ESTOCÁSTICOS FRENTE A ECUACIONES MAESTRAS
# ============================================================

def _noncommuting_local(n_traj: int, seed: int, units: UnitsContext) -> Tuple[float, str]:
    # H₁ = Eσx, H₂ = Eσz en horizonte corto: Et/ℏ = 0.1, τ = 0.1·t
    t_final = 0.1 * units.hbar / DELTA_E
    tau = 0.1 * t_final
    sigma_x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sigma_z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    parts = LocalHamiltonian(parts=[DELTA_E * sigma_x, DELTA_E * sigma_z])
    kernel = diagonal_kernel([tau, tau])
    rho0 = pure_state([math.cos(0.3), math.sin(0.3)])
    master = LocalDoubleCommutator(parts=parts, kernel=kernel)

    n_times = 4
    n_steps = max(settings.default_n_steps, recommended_n_steps(master, t_final, units))
    n_steps = n_times * math.ceil(n_steps / n_times)
    traj = integrate(master, rho0, t_final, n_steps, units)
    times = traj.times[n_steps // n_times::n_steps // n_times]

    noise = GaussianLocalTimeField(kernel=kernel, parts=parts)
    h = DenseHamiltonian(matrix=parts.total())
    ens = ensemble_average(noise, rho0, h, times, n_traj, seed, units)
    max_z, _ = compare_to_master(ens, traj)
    return max_z, master.kind


def check_stochastic_equivalence(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """Cada modelo de ruido reproduce su ecuación maestra con z máximo ≤ 5."""
    n_traj = 1000 if quick else settings.default_n_traj
    tau = units.hbar / DELTA_E
    cases = (
        ("gaussian_global_time", {}),
        ("poisson_discrete_time", {}),
        ("fluctuating_planck", {}),
        ("gaussian_local_time_field", {"n_cells": 2}),
        ("local_fluctuating_planck", {"n_cells": 2}),
    )
    checks = []
    for offset, (noise, extra) in enumerate(cases):
        params = McCompareParams(noise=noise, delta_e=DELTA_E, tau=tau, n_traj=n_traj, **extra)
        max_z, _, master_kind, _ = mc_compare(params, seed + offset, units)
        checks.append(CheckResult.evaluate(f"stochastic.{noise}", max_z, 5.0, f"frente a {master_kind}, {n_traj} trayectorias"))

    max_z, master_kind = _noncommuting_local(n_traj, seed + len(cases), units)
    checks.append(
        CheckResult.evaluate(
            "stochastic.gaussian_local_time_field_noncommuting",
            max_z,
            5.0,
            f"frente a {master_kind}, ‖H_r‖t/ℏ = 0.1",
        )
    )
    return checks


# ============================================================
# GRAVEDAD
# ============================================================

def _ball_mass(radius: float, density: float) -> float:
    return 4.0 * math.pi / 3.0 * radius ** 3 * density


def check_diosi_penrose(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """Tasa de la ecuación maestra de punteros = E_grav/ℏ, y límite de bolas separadas."""
    radius = 1e-7
    spacing = radius / 8.0
    sigma = spacing
    mass = _ball_mass(radius, 1000.0)
    separations = (0.5, 2.0, 3.0) if quick else (0.25, 0.5, 1.0, 2.0, 3.0)

    checks = []
    for ratio in separations:
        pair = build_lump_pair(mass, radius, ratio * radius, spacing, sigma)
        fitted, expected = dp_rate_check(pair, units)
        checks.append(
            CheckResult.evaluate(
                f"diosi_penrose.rate_d{ratio:g}R",
                abs(fitted - expected) / expected,
                1e-6,
                f"Γ={expected:.4e} 1/s",
            )
        )

    separation = 4.0 * radius
    result = egrav(build_lump_pair(mass, radius, separation, spacing, sigma), units)
    oracle = smeared_ball_self_energy(mass, radius, sigma, units) - smeared_ball_pair_energy(
        mass, radius, mass, radius, separation, sigma, units
    )
    checks.append(
        CheckResult.evaluate(
            "diosi_penrose.egrav_vs_oracle_R8a",
            abs(result.e_grav - oracle) / oracle,
            0.02,
            f"malla {result.e_grav:.5e} J, cuadratura {oracle:.5e} J",
        )
    )

    point_limit = 1.2 * units.G * mass ** 2 / radius
    self_energy = smeared_ball_self_energy(mass, radius, 1e-3 * radius, units)
    checks.append(
        CheckResult.evaluate(
            "diosi_penrose.self_energy_point_limit",
            abs(self_energy - point_limit) / point_limit,
            0.02,
            "(6/5)GM²/R con σ = R/1000",
        )
    )
    return checks


def check_critical_radius(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """r_crit a 1 g/cm³ con σ = R/10, a menos de dos órdenes de 1e-7 m."""
    result = critical_radius(g_per_cm3_to_si(1.0), units, sigma_floor=0.0)
    t_dyn = np.array([s.t_dyn for s in result.table])
    t_d = np.array([s.t_d for s in result.table])
    return [
        CheckResult.evaluate(
            "critical_radius.order_of_magnitude",
            abs(math.log10(result.r_crit / 1e-7)),
            2.0,
            f"r_crit={result.r_crit:.3e} m",
        ),
        CheckResult.evaluate("critical_radius.single_crossing", abs(count_crossings(t_dyn, t_d) - 1), 0.0),
    ]


# ============================================================
# DINÁMICA DE TRAZAS
# ============================================================

def check_trace_dynamics(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """Conservación de C̃ y de 𝐇, invariancia unitaria y control negativo."""
    n_steps = 10_000 if quick else settings.tracedyn_check_steps
    seeds = [seed + k for k in range(2 if quick else 5)]
    dt = 1e-3
    spec = TraceModelSpec(n=4, r_cells=4, omega2=1.0, lam=0.01, kappa=0.1)
    tiny = np.finfo(float).tiny

    rngs = [trajectory_rng(s) for s in seeds]
    states = [random_state(spec, rng, 0.5) for rng in rngs]
    runs = run_conservation_batch(spec, states, dt, n_steps, max(1, n_steps // 10))

    c_drift, e_drift, invariance = [], [], []
    for rng, state, run in zip(rngs, states, runs):
        c_drift.append(run.max_c_drift / (1.0 + run.c0_norm))
        e_drift.append(run.max_energy_drift / max(abs(run.energy0), tiny))
        generator = random_hermitian(rng, (spec.n, spec.n))
        invariance.append(unitary_invariance_residual(spec, state, generator, 0.3) / max(abs(run.energy0), tiny))

    control = TraceModelSpec(
        n=4, r_cells=4, omega2=1.0, lam=0.01, kappa=0.1,
        matrix_coefficient=np.diag([0.0, 0.5, 1.0, 1.5]),
    )
    control_state = random_state(control, trajectory_rng(seed), 0.5)
    control_run = run_conservation(control, control_state, dt, min(n_steps, 100_000))

    detail = f"{len(seeds)} semillas, {n_steps} pasos, dt={dt}"
    return [
        CheckResult.evaluate("trace_dynamics.c_tilde_conservation", max(c_drift), 1e-8, detail),
        CheckResult.evaluate("trace_dynamics.energy_drift", max(e_drift), 1e-6, detail),
        CheckResult.evaluate("trace_dynamics.unitary_invariance", max(invariance), 1e-12, "ε = 0.3"),
        CheckResult.exceeds("trace_dynamics.negative_control_c_drift", control_run.max_c_drift, 1e-4),
    ]


# ============================================================
# INVARIANTES ESTRUCTURALES
# ============================================================

# la parte unitaria no toca la diagonal en la base propia de H
STATIONARY_POPULATION_KINDS = ("global_double_commutator", "milburn_exact", "milburn_first_order", "adler_effective")


def _random_hermitian_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    return hermitize(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))


def _random_density(rng: np.random.Generator, dim: int) -> DensityMatrix:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return DensityMatrix(entries=hermitize(rho / np.trace(rho).real))


def _random_kernel(rng: np.random.Generator, n_cells: int, tau: float) -> CorrelationKernel:
    # suelo 0.1τ·I: autovalores acotados por debajo
    b = rng.standard_normal((n_cells, n_cells))
    matrix = tau * (b @ b.T / n_cells + 0.1 * np.eye(n_cells))
    return CorrelationKernel(matrix=0.5 * (matrix + matrix.T), variant="custom")


def _random_models(rng: np.random.Generator, dim: int):
    h = DenseHamiltonian(matrix=_random_hermitian_matrix(rng, dim))
    tau = float(rng.uniform(0.05, 1.0))
    n_cells = int(rng.integers(1, 4))
    parts = LocalHamiltonian(parts=[_random_hermitian_matrix(rng, dim) for _ in range(n_cells)])
    rates = np.abs(rng.standard_normal((dim, dim)))
    rates = np.triu(rates, 1) + np.triu(rates, 1).T
    return {
        "global_double_commutator": GlobalDoubleCommutator(h=h, tau=tau),
        "milburn_exact": MilburnExact(h=h, tau_planck=tau),
        "milburn_first_order": MilburnFirstOrder(h=h, tau_planck=tau),
        "adler_effective": AdlerEffective(h_eff=h, tau=tau),
        "local_double_commutator": LocalDoubleCommutator(parts=parts, kernel=_random_kernel(rng, n_cells, tau)),
        "diosi_penrose_pointer": DiosiPenrosePointer(
            rates=rates,
            h_diag=DiagonalHamiltonian(eigenvalues=rng.standard_normal(dim)),
        ),
    }


def check_structural_invariants(quick: bool, seed: int, units: UnitsContext) -> Checks:
    """
    Casos aleatorios en unidades ℏ = 1: lados derechos sin traza y hermíticos,
    poblaciones de energía estacionarias y positividad de la ecuación local.
    """
    n_cases = 20 if quick else 100
    n_integrations = 3 if quick else 10
    reduced = UnitsContext(hbar=1.0)
    rng = trajectory_rng(seed)

    trace_res, herm_res, population_res = 0.0, 0.0, 0.0
    for _ in range(n_cases):
        dim = int(rng.integers(2, 5))
        rho = _random_density(rng, dim)
        for kind, model in _random_models(rng, dim).items():
            out = build_rhs(model, reduced)(rho.entries)
            scale = max(float(np.max(np.abs(out))), 1.0)
            trace_res = max(trace_res, abs(complex(np.trace(out))) / scale)
            herm_res = max(herm_res, float(np.max(np.abs(out - out.conj().T))) / scale)
            if kind in STATIONARY_POPULATION_KINDS:
                h = model.h_eff if kind == "adler_effective" else model.h
                diag = np.diag(to_eigenbasis(out, h))
                population_res = max(population_res, float(np.max(np.abs(diag))) / scale)

    min_eig = math.inf
    for _ in range(n_integrations):
        dim = int(rng.integers(2, 4))
        local = _random_models(rng, dim)["local_double_commutator"]
        _, rate = model_time_scales(local, reduced)
        t_final = 10.0 / rate
        n_steps = max(settings.default_n_steps, recommended_n_steps(local, t_final, reduced))
        traj = integrate(local, _random_density(rng, dim), t_final, n_steps, reduced)
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(traj.rho))))

    detail = f"{n_cases} casos aleatorios"
    return [
        CheckResult.evaluate("structural.rhs_traceless", trace_res, 1e-12, detail),
        CheckResult.evaluate("structural.rhs_hermitian", herm_res, 1e-12, detail),
        CheckResult.evaluate("structural.populations_stationary", population_res, 1e-12, detail),
        CheckResult.evaluate(
            "structural.local_positivity",
            max(0.0, -min_eig),
            1e-8,
            f"{n_integrations} integraciones de diez tiempos de decoherencia",
        ),
    ]


# ============================================================
# BATERÍA
# ============================================================

CRITERIA: Tuple[Tuple[str, Callable[[bool, int, UnitsContext], Checks]], ...] = (
    ("milburn_table", check_milburn_table),
    ("analytic_decay", check_analytic_decay),
    ("milburn_expansion", check_milburn_expansion),
    ("stochastic", check_stochastic_equivalence),
    ("diosi_penrose", check_diosi_penrose),
    ("critical_radius", check_critical_radius),
    ("trace_dynamics", check_trace_dynamics),
    ("structural", check_structural_invariants),
)


def run_acceptance(quick: bool = False, seed: int = 0, units: UnitsContext = DEFAULT_UNITS) -> RunReport:
    """
    Ejecuta los ocho bloques y devuelve el informe.

    Los DecolabError de un bloque se propagan: un motor que aborta invalida
    toda la batería.
    """
    logger.info(f"Batería de aceptación ({'rápida' if quick else 'completa'}), semilla {seed}")
    start = time.perf_counter()
    checks: Checks = []
    summary: Dict[str, Any] = {}
    for name, criterion in CRITERIA:
        t0 = time.perf_counter()
        block = criterion(quick, seed, units)
        elapsed = time.perf_counter() - t0
        for check in block:
            level = logging.INFO if check.passed else logging.ERROR
            logger.log(level, f"{check.name}: {'PASS' if check.passed else 'FAIL'} (residuo {check.residual:.3e})")
        checks.extend(block)
        summary[f"{name}_wall_time_s"] = round(elapsed, 3)

    wall = time.perf_counter() - start
    report = RunReport(
        scenario={"name": "acceptance", "command": "check", "quick": quick, "seed": seed},
        wall_time=wall,
        engine_versions=engine_versions(),
        checks=checks,
        summary=summary,
    )
    logger.info(f"Batería terminada en {wall:.1f} s: {sum(c.passed for c in checks)}/{len(checks)} chequeos superados")
    return report
