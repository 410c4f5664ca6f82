# src/decolab/services/scenario_service.py
"""
Ejecución de escenarios: valida el archivo, despacha al motor del comando y
escribe tablas CSV (cabeceras con magnitud y unidad SI) más el RunReport.
"""

import csv
import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
import scipy
from pydantic import ValidationError

from .. import __version__
from ..core.config import settings
from ..core.exceptions import InvalidParameterError, ScenarioError
from ..core.quantum import make_superposition
from ..core.units import DEFAULT_UNITS, EV, UnitsContext
from ..schemas.evolution import (
    AdlerEffective,
    GlobalDoubleCommutator,
    LocalDoubleCommutator,
    LocalHamiltonian,
    MilburnExact,
    MilburnFirstOrder,
)
from ..schemas.gravity import LumpPair
from ..schemas.kernels import CellGrid, NewtonianNoiseSpec
from ..schemas.noise import (
    FluctuatingPlanck,
    GaussianGlobalTime,
    GaussianLocalTimeField,
    LocalFluctuatingPlanck,
    PoissonDiscreteTime,
)
from ..schemas.report import CheckResult, RunReport, format_number
from ..schemas.scenario import (
    PARAMETER_MODELS,
    CriticalRadiusParams,
    DpLumpsParams,
    LocalMeParams,
    McCompareParams,
    MilburnTableParams,
    Scenario,
    ScenarioFile,
    TraceDemoParams,
    TwoLevelDecayParams,
)
from ..schemas.states import DiagonalHamiltonian, SuperpositionSpec
from ..schemas.tracedyn import TraceModelSpec
from .gravity import critical_radius, dp_rate_check, egrav, uniform_ball
from .kernels import diagonal_kernel, global_kernel, newtonian_kernel, require_psd, validate_psd
from .master import (
    DecoherenceConvention,
    balanced_pointer_state,
    decoherence_time,
    fit_offdiag_decay,
    integrate,
    recommended_n_steps,
)
from .stochastic import compare_to_master, ensemble_average, trajectory_rng
from .tracedyn import hamiltonian, random_hermitian, random_state, run_conservation, unitary_invariance_residual

logger = logging.getLogger(__name__)

# t_D de la tabla de Milburn con τ = τ_Pl, a dos cifras significativas
TABLE_REFERENCE: Tuple[Tuple[float, float], ...] = (
    (EV, 8.0e12),
    (1e9 * EV, 8.0e-6),
    (1.0, 2.1e-25),
)

CommandOutcome = Tuple[List[CheckResult], Dict[str, Any]]


# ============================================================
# PARSEO
# ============================================================

def _format_loc(loc: Sequence[Any], prefix: Tuple[str, ...] = ()) -> str:
    return ".".join(str(part) for part in prefix + tuple(loc))


def _scenario_error(exc: ValidationError, prefix: Tuple[str, ...] = ()) -> ScenarioError:
    first = exc.errors()[0]
    key = _format_loc(first["loc"], prefix) or "<raíz>"
    kind = first["type"]
    if kind == "extra_forbidden":
        message = f"Clave desconocida: '{key}'"
    elif kind == "missing":
        message = f"Falta la clave requerida: '{key}'"
    else:
        message = f"Valor inválido para '{key}': {first['msg']}"
    return ScenarioError(message, {"key": key, "error_type": kind, "n_errors": exc.error_count()})


def parse_scenario(text: str) -> Scenario:
    """
    Parseo estricto de un escenario JSON con resolución de unidades.

    Raises:
        ScenarioError: JSON inválido, clave desconocida o faltante, unidad
            incompatible; el mensaje nombra la clave
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError("El escenario no es JSON válido", {"line": e.lineno, "column": e.colno})
    if not isinstance(raw, dict):
        raise ScenarioError("El escenario debe ser un objeto JSON")

    try:
        header = ScenarioFile.model_validate(raw)
    except ValidationError as e:
        raise _scenario_error(e)

    params_model = PARAMETER_MODELS[header.command]
    try:
        params = params_model.model_validate(header.parameters)
    except ValidationError as e:
        raise _scenario_error(e, ("parameters",))

    return Scenario(
        name=header.name,
        command=header.command,
        parameters=params,
        seed=header.seed,
        output=header.output,
    )


def load_scenario(path: Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError("No existe el archivo de escenario", {"path": str(path)})
    return parse_scenario(path.read_text(encoding="utf-8"))


def with_overrides(scenario: Scenario, seed: Optional[int] = None, out: Optional[str] = None) -> Scenario:
    """Aplica --seed y --out de la línea de comandos."""
    update: Dict[str, Any] = {}
    if seed is not None:
        if seed < 0:
            raise ScenarioError("La semilla debe ser ≥ 0", {"key": "seed", "value": seed})
        update["seed"] = seed
    if out is not None:
        update["output"] = scenario.output.model_copy(update={"path": out})
    return scenario.model_copy(update=update) if update else scenario


# ============================================================
# SALIDA CSV
# ============================================================

class CsvSink:
    """Escritor único de las tablas de un escenario."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.paths: List[str] = []

    def write(self, filename: str, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / filename
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(headers)
            for row in rows:
                writer.writerow([format_number(v) for v in row])
        self.paths.append(str(path))
        logger.debug(f"Tabla escrita: {path}")
        return path


def _relative_gap(value: float, reference: float, floor: float) -> float:
    return abs(value - reference) / max(abs(reference), floor)


def _default_horizon(rate: float, delta_e: float, decay_times: float, units: UnitsContext) -> float:
    if rate > 0:
        return decay_times / rate
    return 10.0 * units.hbar / delta_e


def _require_positive_energy(delta_e: float) -> None:
    if delta_e <= 0:
        raise InvalidParameterError("ΔE debe ser > 0", {"key": "parameters.delta_e", "delta_e": delta_e})


def analytic_rate(model_kind: str, delta_e: float, tau: float, units: UnitsContext = DEFAULT_UNITS) -> float:
    """Tasa de decaimiento de ρ₀₁ para un sistema de dos niveles (s⁻¹)."""
    if model_kind in ("milburn_exact", "poisson_discrete_time"):
        if tau == 0:
            return 0.0
        theta = delta_e * tau / units.hbar
        return 2.0 * math.sin(0.5 * theta) ** 2 / tau
    return tau * delta_e ** 2 / (2.0 * units.hbar ** 2)


def _two_level_model(kind: str, h: DiagonalHamiltonian, tau: float):
    if kind == "global_double_commutator":
        return GlobalDoubleCommutator(h=h, tau=tau)
    if kind == "adler_effective":
        return AdlerEffective(h_eff=h, tau=tau)
    if tau <= 0:
        raise InvalidParameterError("Los modelos de Milburn requieren τ_Pl > 0", {"key": "parameters.tau"})
    if kind == "milburn_exact":
        return MilburnExact(h=h, tau_planck=tau)
    return MilburnFirstOrder(h=h, tau_planck=tau)


# ============================================================
# COMANDOS
# ============================================================

def _run_two_level_decay(p: TwoLevelDecayParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    _require_positive_energy(p.delta_e)
    rho0, h = make_superposition(SuperpositionSpec(amplitudes=list(p.amplitudes), energies=[0.0, p.delta_e]))
    model = _two_level_model(p.model, h, p.tau)
    rate = analytic_rate(p.model, p.delta_e, p.tau, units)
    t_final = p.t_final or _default_horizon(rate, p.delta_e, 5.0, units)
    n_steps = p.n_steps or max(settings.default_n_steps, recommended_n_steps(model, t_final, units))

    traj = integrate(model, rho0, t_final, n_steps, units)
    fitted, phase_rate, fit_rms = fit_offdiag_decay(traj, 0, 1)

    rho = np.asarray(traj.rho)
    purity = np.sum(np.abs(rho) ** 2, axis=(1, 2))
    rows = (
        (traj.times[k], rho[k, 0, 1].real, rho[k, 0, 1].imag, abs(rho[k, 0, 1]),
         rho[k, 0, 0].real, rho[k, 1, 1].real, purity[k])
        for k in range(0, len(traj.times), p.record_every)
    )
    sink.write(
        "two_level_decay.csv",
        ["t [s]", "Re rho_01 [1]", "Im rho_01 [1]", "|rho_01| [1]", "rho_00 [1]", "rho_11 [1]", "purity [1]"],
        rows,
    )

    checks = [
        CheckResult.evaluate(
            "rate_vs_analytic",
            _relative_gap(fitted, rate, 1.0 / t_final),
            1e-6,
            f"fitted={fitted:.6e} 1/s analytic={rate:.6e} 1/s",
        )
    ]
    summary = {
        "model": p.model,
        "fitted_rate_per_s": fitted,
        "analytic_rate_per_s": rate,
        "phase_rate_rad_per_s": phase_rate,
        "fit_rms": fit_rms,
        "t_final_s": t_final,
        "n_steps": n_steps,
    }
    return checks, summary


def round_significant(value: float, digits: int = 2) -> float:
    if value == 0 or not math.isfinite(value):
        return value
    return round(value, digits - 1 - int(math.floor(math.log10(abs(value)))))


def _run_milburn_table(p: MilburnTableParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    tau = p.tau or units.tau_planck
    rows = []
    deviations = []
    for energy in p.energies:
        _require_positive_energy(energy)
        nominal = decoherence_time(energy, tau, DecoherenceConvention.NOMINAL, units)
        exact = decoherence_time(energy, tau, DecoherenceConvention.RATE_EXACT, units)
        rows.append((energy, energy / units.ev, nominal, exact))
        if math.isclose(tau, units.tau_planck, rel_tol=1e-12):
            for ref_energy, ref_time in TABLE_REFERENCE:
                if math.isclose(energy, ref_energy, rel_tol=1e-9):
                    deviations.append(abs(round_significant(nominal) - ref_time) / ref_time)
    sink.write(
        "milburn_table.csv",
        ["Delta E [J]", "Delta E [eV]", "t_D nominal [s]", "t_D rate_exact [s]"],
        rows,
    )

    checks = []
    if deviations:
        checks.append(
            CheckResult.evaluate(
                "table_reference",
                max(deviations),
                1e-9,
                f"{len(deviations)} filas contrastadas a dos cifras significativas",
            )
        )
    return checks, {"tau_s": tau, "n_rows": len(rows)}


def _mc_setup(p: McCompareParams, units: UnitsContext):
    _require_positive_energy(p.delta_e)
    if p.noise in ("gaussian_local_time_field", "local_fluctuating_planck"):
        n = p.n_cells
        dim = 2 ** n
        # H_r = ΔE·n_r sobre el qubit r, en la base computacional
        occupations = (np.arange(dim)[:, None] >> np.arange(n)[None, ::-1]) & 1
        parts = [np.diag(p.delta_e * occupations[:, r]).astype(np.complex128) for r in range(n)]
        kernel = global_kernel(n, p.tau) if p.kernel == "global" else diagonal_kernel([p.tau] * n)
        local = LocalHamiltonian(parts=parts)
        h = DiagonalHamiltonian(eigenvalues=np.real(np.diag(local.total())))
        noise_cls = GaussianLocalTimeField if p.noise == "gaussian_local_time_field" else LocalFluctuatingPlanck
        noise = noise_cls(kernel=kernel, parts=local)
        master = LocalDoubleCommutator(parts=local, kernel=kernel)
        return noise, master, balanced_pointer_state(dim), h, analytic_rate(p.noise, p.delta_e, p.tau, units)

    rho0, h = make_superposition(SuperpositionSpec(amplitudes=[2 ** -0.5, 2 ** -0.5], energies=[0.0, p.delta_e]))
    if p.noise == "gaussian_global_time":
        noise, master = GaussianGlobalTime(tau=p.tau), GlobalDoubleCommutator(h=h, tau=p.tau)
    elif p.noise == "poisson_discrete_time":
        if p.tau <= 0:
            raise InvalidParameterError("PoissonDiscreteTime requiere τ_Pl > 0", {"key": "parameters.tau"})
        noise, master = PoissonDiscreteTime(tau_pl=p.tau), MilburnExact(h=h, tau_planck=p.tau)
    else:
        noise, master = FluctuatingPlanck(tau=p.tau), AdlerEffective(h_eff=h, tau=p.tau)
    return noise, master, rho0, h, analytic_rate(p.noise, p.delta_e, p.tau, units)


def mc_compare(p: McCompareParams, seed: int, units: UnitsContext = DEFAULT_UNITS):
    """Conjunto de p.noise frente a su ecuación maestra en n_times instantes equiespaciados."""
    noise, master, rho0, h, rate = _mc_setup(p, units)
    t_final = p.t_final or _default_horizon(rate, p.delta_e, 1.0, units)
    n_steps = p.n_steps or max(settings.default_n_steps, recommended_n_steps(master, t_final, units))
    n_steps = p.n_times * math.ceil(n_steps / p.n_times)

    traj = integrate(master, rho0, t_final, n_steps, units)
    times = traj.times[n_steps // p.n_times::n_steps // p.n_times]
    ens = ensemble_average(noise, rho0, h, times, p.n_traj, seed, units)
    max_z, table = compare_to_master(ens, traj)
    return max_z, table, master.kind, t_final


def _run_mc_compare(p: McCompareParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    max_z, table, master_kind, t_final = mc_compare(p, scenario.seed, units)

    sink.write(
        "mc_compare.csv",
        ["t [s]", "i", "j", "Re ensemble [1]", "Im ensemble [1]", "Re master [1]", "Im master [1]",
         "std_error [1]", "z [1]"],
        (
            (row.t, row.i, row.j, row.ensemble.real, row.ensemble.imag, row.master.real,
             row.master.imag, row.std_error, row.z)
            for row in table.rows()
        ),
    )
    checks = [CheckResult.evaluate("max_z", max_z, p.z_max, f"{p.noise} vs {master_kind}")]
    return checks, {"noise": p.noise, "master": master_kind, "n_traj": p.n_traj, "t_final_s": t_final, "max_z": max_z}


def _local_kernel(p: LocalMeParams, grid: CellGrid, units: UnitsContext):
    if p.kernel == "newtonian":
        spec = NewtonianNoiseSpec(sigma=p.sigma or settings.default_sigma, const=p.const)
        return newtonian_kernel(grid, spec, units)
    if p.tau is None:
        raise ScenarioError(f"El kernel '{p.kernel}' requiere τ", {"key": "parameters.tau"})
    if p.kernel == "global":
        return global_kernel(grid.n_cells, p.tau)
    return diagonal_kernel([p.tau] * grid.n_cells)


def _run_local_me(p: LocalMeParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    _require_positive_energy(p.delta_e)
    grid = CellGrid(spacing=p.grid.spacing, dims=p.grid.dims)
    cells = sorted(set(p.cells))
    if cells[0] < 0 or cells[-1] >= grid.n_cells:
        raise ScenarioError(
            "Índice de celda fuera de la malla",
            {"key": "parameters.cells", "n_cells": grid.n_cells, "cells": cells},
        )
    kernel = _local_kernel(p, grid, units)
    smallest = validate_psd(kernel)
    largest = float(np.max(np.linalg.eigvalsh(kernel.matrix)))
    require_psd(kernel)

    # la rama excitada reparte ΔE por igual entre las celdas elegidas
    share = p.delta_e / len(cells)
    parts = [np.zeros((2, 2), dtype=np.complex128) for _ in range(grid.n_cells)]
    for r in cells:
        parts[r] = np.diag([0.0, share]).astype(np.complex128)
    model = LocalDoubleCommutator(parts=LocalHamiltonian(parts=parts), kernel=kernel)

    tau_eff = float(np.mean(kernel.matrix[np.ix_(cells, cells)]))
    rate = tau_eff * p.delta_e ** 2 / (2.0 * units.hbar ** 2)
    t_final = p.t_final or _default_horizon(rate, p.delta_e, 5.0, units)
    n_steps = p.n_steps or max(settings.default_n_steps, recommended_n_steps(model, t_final, units))

    traj = integrate(model, balanced_pointer_state(2), t_final, n_steps, units)
    fitted, _, _ = fit_offdiag_decay(traj, 0, 1)

    rho = np.asarray(traj.rho)
    trace_drift = np.abs(np.einsum("kii->k", rho) - 1.0)
    min_eig = np.linalg.eigvalsh(rho)[:, 0]
    sink.write(
        "local_me.csv",
        ["t [s]", "Re rho_01 [1]", "Im rho_01 [1]", "|rho_01| [1]", "|Tr rho - 1| [1]", "min eig rho [1]"],
        (
            (traj.times[k], rho[k, 0, 1].real, rho[k, 0, 1].imag, abs(rho[k, 0, 1]), trace_drift[k], min_eig[k])
            for k in range(0, len(traj.times), p.record_every)
        ),
    )

    checks = [
        CheckResult.evaluate("kernel_psd", max(0.0, -smallest) / max(largest, np.finfo(float).tiny), 1e-10),
        CheckResult.evaluate("trace", float(np.max(trace_drift)), 1e-12),
        CheckResult.evaluate("positivity", max(0.0, -float(np.min(min_eig))), 1e-8),
        CheckResult.evaluate(
            "rate_vs_kernel",
            _relative_gap(fitted, rate, 1.0 / t_final),
            1e-6,
            f"fitted={fitted:.6e} 1/s expected={rate:.6e} 1/s",
        ),
    ]
    summary = {
        "kernel": kernel.variant,
        "n_cells": grid.n_cells,
        "tau_eff_s": tau_eff,
        "kernel_min_eigenvalue_s": smallest,
        "t_final_s": t_final,
        "n_steps": n_steps,
    }
    return checks, summary


def lump_pair_grid(radius: float, displacement: float, spacing: float, sigma: float) -> CellGrid:
    """Malla mínima que contiene dos bolas separadas a lo largo de x con margen 3σ."""
    margin = radius + 3.0 * sigma
    nx = math.ceil((displacement + 2.0 * margin) / spacing) + 1
    nyz = math.ceil(2.0 * margin / spacing) + 1
    return CellGrid(spacing=spacing, dims=(nx, nyz, nyz))


def build_lump_pair(
    mass: float,
    radius: float,
    displacement: float,
    spacing: float,
    sigma: float,
) -> LumpPair:
    grid = lump_pair_grid(radius, displacement, spacing, sigma)
    center = np.asarray(grid.origin) + 0.5 * np.asarray(grid.dims) * spacing
    shift = np.array([0.5 * displacement, 0.0, 0.0])
    f1 = uniform_ball(mass, radius, grid, sigma, center - shift)
    f2 = uniform_ball(mass, radius, grid, sigma, center + shift)
    return LumpPair(f1=f1, f2=f2)


def _run_dp_lumps(p: DpLumpsParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    spacing = p.spacing or p.radius / p.resolution
    sigma = p.sigma or max(settings.default_sigma, spacing)
    mass = p.mass or 4.0 * math.pi / 3.0 * p.radius ** 3 * p.density
    pair = build_lump_pair(mass, p.radius, p.displacement, spacing, sigma)

    result = egrav(pair, units)
    fitted, expected = dp_rate_check(pair, units, p.n_steps)
    sink.write(
        "dp_lumps.csv",
        ["D11 [J]", "D22 [J]", "D12 [J]", "E_grav [J]", "t_D [s]", "E_grav single cross [J]",
         "t_D interaction only [s]", "rate master [1/s]", "rate E_grav/hbar [1/s]"],
        [(result.d11, result.d22, result.d12, result.e_grav, result.t_d, result.e_grav_single_cross,
          result.t_d_interaction_only, fitted, expected)],
    )
    checks = [
        CheckResult.evaluate("egrav_identity", result.identity_residual, 1e-12),
        CheckResult.evaluate("dp_rate", abs(fitted - expected) / expected if expected > 0 else abs(fitted), 1e-6),
    ]
    summary = {
        "mass_kg": mass,
        "spacing_m": spacing,
        "sigma_m": sigma,
        "n_cells": pair.f1.grid.n_cells,
        "e_grav_J": result.e_grav,
        "t_d_s": result.t_d,
    }
    return checks, summary


def count_crossings(t_dyn: np.ndarray, t_d: np.ndarray) -> int:
    log_ratio = np.log(t_dyn) - np.log(t_d)
    return int(np.count_nonzero(np.diff(np.sign(log_ratio)) != 0))


def _run_critical_radius(p: CriticalRadiusParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    if p.r_max <= p.r_min:
        raise ScenarioError("r_max debe ser mayor que r_min", {"key": "parameters.r_max"})
    radii = np.logspace(math.log10(p.r_min), math.log10(p.r_max), p.n_radii)
    result = critical_radius(p.density, units, radii, p.sigma_floor)

    sink.write(
        "critical_radius.csv",
        ["R [m]", "M [kg]", "sigma [m]", "t_dyn [s]", "t_D [s]"],
        ((s.radius, s.mass, s.sigma, s.t_dyn, s.t_d) for s in result.table),
    )
    t_dyn = np.array([s.t_dyn for s in result.table])
    t_d = np.array([s.t_d for s in result.table])
    checks = [
        CheckResult.evaluate("single_crossing", abs(count_crossings(t_dyn, t_d) - 1), 0.0),
        CheckResult.evaluate("t_dyn_increasing", int(np.count_nonzero(np.diff(t_dyn) <= 0)), 0.0),
        CheckResult.evaluate("t_d_decreasing", int(np.count_nonzero(np.diff(t_d) >= 0)), 0.0),
    ]
    return checks, {"density_kg_per_m3": p.density, "r_crit_m": result.r_crit}


def _run_trace_demo(p: TraceDemoParams, scenario: Scenario, sink: CsvSink, units: UnitsContext) -> CommandOutcome:
    spec = TraceModelSpec(
        n=p.n,
        r_cells=p.r_cells,
        omega2=p.omega2,
        lam=p.lam,
        kappa=p.kappa,
        matrix_coefficient=p.matrix_coefficient,
    )
    rng = trajectory_rng(scenario.seed)
    state = random_state(spec, rng, p.scale)
    run = run_conservation(spec, state, p.dt, p.n_steps, p.record_every)

    sink.write(
        "trace_demo.csv",
        ["t [1]", "H [1]", "|C - C0|_max [1]"] + [f"site {r} commutator drift [1]" for r in range(p.r_cells)],
        ([row.t, row.energy, row.c_drift] + row.site_drifts for row in run.rows),
    )

    energy0 = abs(run.energy0)
    c_scale = 1.0 + run.c0_norm
    if spec.scalar_coefficients:
        generator = random_hermitian(rng, (p.n, p.n))
        invariance = unitary_invariance_residual(spec, state, generator, 0.3)
        checks = [
            CheckResult.evaluate("c_tilde_conservation", run.max_c_drift / c_scale, 1e-8),
            CheckResult.evaluate("energy_drift", run.max_energy_drift / max(energy0, np.finfo(float).tiny), 1e-6),
            CheckResult.evaluate(
                "unitary_invariance",
                invariance / max(abs(hamiltonian(spec, state)), np.finfo(float).tiny),
                1e-12,
            ),
        ]
    else:
        checks = [CheckResult.exceeds("negative_control_c_drift", run.max_c_drift, 1e-4)]
    summary = {
        "energy0": run.energy0,
        "c0_max": run.c0_norm,
        "max_c_drift": run.max_c_drift,
        "max_energy_drift": run.max_energy_drift,
    }
    return checks, summary


RUNNERS: Dict[str, Callable[..., CommandOutcome]] = {
    "two-level-decay": _run_two_level_decay,
    "milburn-table": _run_milburn_table,
    "mc-compare": _run_mc_compare,
    "local-me": _run_local_me,
    "dp-lumps": _run_dp_lumps,
    "critical-radius": _run_critical_radius,
    "trace-demo": _run_trace_demo,
}


def engine_versions() -> Dict[str, str]:
    return {
        "decolab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def run(scenario: Scenario, units: UnitsContext = DEFAULT_UNITS) -> RunReport:
    """
    Ejecuta el escenario y escribe sus tablas en <output.path>/<name>/.

    Los errores de los motores (DecolabError) se propagan al llamador.
    """
    logger.info(f"Escenario '{scenario.name}' ({scenario.command}), semilla {scenario.seed}")
    start = time.perf_counter()
    sink = CsvSink(Path(scenario.output.path) / scenario.name)
    checks, summary = RUNNERS[scenario.command](scenario.parameters, scenario, sink, units)
    wall = time.perf_counter() - start

    report = RunReport(
        scenario=scenario.resolved(),
        wall_time=wall,
        engine_versions=engine_versions(),
        checks=checks,
        summary=summary,
        outputs=list(sink.paths),
    )
    report_path = sink.directory / "report.txt"
    sink.directory.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.to_text(), encoding="utf-8")
    logger.info(
        f"Escenario '{scenario.name}' terminado en {wall:.2f} s: "
        f"{sum(c.passed for c in checks)}/{len(checks)} chequeos superados"
    )
    return report
