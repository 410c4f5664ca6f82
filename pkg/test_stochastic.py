# test_stochastic.py
"""Pruebas de los cuadros estocásticos y de su contraste con las ecuaciones maestras."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from conftest import DELTA_E
from decolab.core.exceptions import InvalidParameterError, SamplingError
from decolab.core.quantum import pure_state, purity
from decolab.schemas.evolution import GlobalDoubleCommutator, LocalDoubleCommutator, LocalHamiltonian
from decolab.schemas.noise import (
    FluctuatingPlanck,
    GaussianGlobalTime,
    GaussianLocalTimeField,
    LocalFluctuatingPlanck,
    PoissonDiscreteTime,
)
from decolab.schemas.scenario import McCompareParams
from decolab.schemas.states import DenseHamiltonian, DensityMatrix, DiagonalHamiltonian
from decolab.services.kernels import diagonal_kernel, global_kernel
from decolab.services.master import integrate
from decolab.services.scenario_service import mc_compare
from decolab.services.stochastic import (
    compare_to_master,
    ensemble_average,
    ensemble_from_trajectory,
    sample_noise,
    sample_state,
    trajectory_rng,
)

NOISE_KINDS = [
    "gaussian_global_time",
    "poisson_discrete_time",
    "fluctuating_planck",
    "gaussian_local_time_field",
    "local_fluctuating_planck",
]


def _local_parts() -> LocalHamiltonian:
    return LocalHamiltonian(parts=[np.diag([0.0, DELTA_E]), np.diag([0.0, 0.5 * DELTA_E])])


# ===============================
# GENERADORES
# ===============================

def test_trajectory_rng_is_reproducible():
    a = trajectory_rng(7, 3).standard_normal(5)
    b = trajectory_rng(7, 3).standard_normal(5)
    c = trajectory_rng(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_trajectory_rng_rejects_negative_seed():
    with pytest.raises(InvalidParameterError):
        trajectory_rng(-1)


# ===============================
# MUESTREO DEL RUIDO
# ===============================

def test_gaussian_time_without_noise_is_identity(rng, units):
    draw = sample_noise(GaussianGlobalTime(tau=0.0), [1e-15, 2e-15], rng, units)
    assert np.array_equal(draw.effective_times, [1e-15, 2e-15])


def test_gaussian_time_variance_grows_linearly(rng, units):
    tau, t = 1e-16, 4e-15
    deltas = np.array([
        sample_noise(GaussianGlobalTime(tau=tau), [t], rng, units).effective_times[0] - t
        for _ in range(4000)
    ])
    assert np.var(deltas) == pytest.approx(tau * t, rel=0.1)


def test_poisson_counts_are_cumulative_integers(rng, units):
    tau_pl = 1e-16
    times = np.linspace(1e-15, 1e-14, 10)
    draw = sample_noise(PoissonDiscreteTime(tau_pl=tau_pl), times, rng, units)
    assert np.all(draw.counts == np.round(draw.counts))
    assert np.all(np.diff(draw.counts) >= 0)
    assert np.allclose(draw.effective_times, draw.counts * tau_pl)


def test_poisson_with_zero_tick_is_continuous_time(rng, units):
    draw = sample_noise(PoissonDiscreteTime(tau_pl=0.0), [1.0, 2.0], rng, units)
    assert np.array_equal(draw.effective_times, [1.0, 2.0])


@pytest.mark.parametrize("local", [False, True])
def test_planck_channels_reject_zero_horizon(rng, units, local):
    if local:
        model = LocalFluctuatingPlanck(kernel=diagonal_kernel([1e-16, 1e-16]), parts=_local_parts())
    else:
        model = FluctuatingPlanck(tau=1e-16)
    with pytest.raises(SamplingError):
        sample_noise(model, [0.0, 1e-15], rng, units)


def test_sample_noise_rejects_decreasing_times(rng, units):
    with pytest.raises(InvalidParameterError):
        sample_noise(GaussianGlobalTime(tau=1e-16), [2.0, 1.0], rng, units)


def test_local_field_shares_noise_under_global_kernel(rng, units):
    model = GaussianLocalTimeField(kernel=global_kernel(2, 1e-16), parts=_local_parts())
    draw = sample_noise(model, [1e-15, 3e-15], rng, units)
    assert np.allclose(draw.local_times[:, 0], draw.local_times[:, 1], rtol=1e-12, atol=0.0)


# ===============================
# REALIZACIONES Y CONJUNTOS
# ===============================

def test_sample_state_is_pure_and_deterministic(two_level, units):
    rho, h = two_level
    model = GaussianGlobalTime(tau=1e-16)
    a = sample_state(model, rho, h, 5e-15, seed=11, units=units)
    b = sample_state(model, rho, h, 5e-15, seed=11, units=units)
    assert np.array_equal(a.entries, b.entries)
    assert purity(a) == pytest.approx(1.0, abs=1e-12)


def test_sample_state_rejects_negative_time(two_level, units):
    rho, h = two_level
    with pytest.raises(InvalidParameterError):
        sample_state(GaussianGlobalTime(tau=1e-16), rho, h, -1.0, seed=0, units=units)


def test_ensemble_requires_two_trajectories(two_level, units):
    rho, h = two_level
    with pytest.raises(InvalidParameterError):
        ensemble_average(GaussianGlobalTime(tau=1e-16), rho, h, [1e-15], 1, 0, units)


def test_ensemble_is_independent_of_worker_count(two_level, units):
    rho, h = two_level
    model = FluctuatingPlanck(tau=1e-16)
    times = [1e-15, 2e-15, 3e-15]
    serial = ensemble_average(model, rho, h, times, 64, 5, units, workers=1)
    threaded = ensemble_average(model, rho, h, times, 64, 5, units, workers=4)
    assert np.array_equal(serial.mean, threaded.mean)
    assert np.array_equal(serial.std_error, threaded.std_error)


def test_ensemble_without_noise_reproduces_unitary_evolution(two_level, units):
    rho, h = two_level
    ens = ensemble_average(GaussianGlobalTime(tau=0.0), rho, h, [1e-15], 4, 0, units)
    phase = np.exp(1j * DELTA_E * 1e-15 / units.hbar)
    assert ens.mean[0, 0, 1] == pytest.approx(0.5 * phase, rel=1e-12)
    assert np.all(ens.std_error < 1e-15)


# ===============================
# CONTRASTE CON LA ECUACIÓN MAESTRA
# ===============================

@pytest.mark.parametrize("noise", NOISE_KINDS)
def test_ensemble_agrees_with_master(noise, units):
    params = McCompareParams(
        noise=noise,
        delta_e=DELTA_E,
        tau=units.hbar / DELTA_E,
        n_traj=2000,
        n_cells=2,
    )
    max_z, table, _, _ = mc_compare(params, seed=3, units=units)
    assert max_z <= 5.0
    assert table.z.shape[0] == 5


def test_compare_to_master_with_itself_gives_zero(two_level, units):
    rho, h = two_level
    traj = integrate(GlobalDoubleCommutator(h=h, tau=1e-16), rho, 1e-14, 200, units)
    max_z, table = compare_to_master(ensemble_from_trajectory(traj), traj)
    assert max_z == 0.0
    assert len(list(table.rows())) == traj.times.size * 4


def test_compare_to_master_rejects_foreign_times(two_level, units):
    rho, h = two_level
    traj = integrate(GlobalDoubleCommutator(h=h, tau=1e-16), rho, 1e-14, 200, units)
    ens = ensemble_average(GaussianGlobalTime(tau=1e-16), rho, h, [1.234e-16], 4, 0, units)
    with pytest.raises(InvalidParameterError):
        compare_to_master(ens, traj)


# ===============================
# ESTADÍSTICA DE LOS CUADROS DE RUIDO
# ===============================

def test_poisson_mean_count_is_horizon_over_tick(units):
    tau_pl, t = 1e-16, 5e-15
    model = PoissonDiscreteTime(tau_pl=tau_pl)
    counts = np.array([
        sample_noise(model, [t], trajectory_rng(0, k), units).counts[0]
        for k in range(10_000)
    ])
    expected = t / tau_pl
    assert counts.mean() == pytest.approx(expected, abs=5.0 * np.sqrt(expected / counts.size))
    assert counts.var(ddof=1) == pytest.approx(expected, rel=0.1)


def test_fluctuating_planck_time_shift_matches_gaussian_time(units):
    tau, t = 1e-16, 4e-15
    planck_rng, gaussian_rng = trajectory_rng(1), trajectory_rng(2)
    planck = np.array([
        sample_noise(FluctuatingPlanck(tau=tau), [t], planck_rng, units).effective_times[0] - t
        for _ in range(4000)
    ])
    gaussian = np.array([
        sample_noise(GaussianGlobalTime(tau=tau), [t], gaussian_rng, units).effective_times[0] - t
        for _ in range(4000)
    ])
    assert ks_2samp(planck, gaussian).pvalue > 1e-3
    assert np.var(planck) == pytest.approx(tau * t, rel=0.1)


def test_std_error_halves_when_trajectories_quadruple(two_level, units):
    rho, h = two_level
    model = GaussianGlobalTime(tau=units.hbar / DELTA_E)
    times = [units.hbar / DELTA_E]
    small = ensemble_average(model, rho, h, times, 500, 9, units)
    large = ensemble_average(model, rho, h, times, 2000, 9, units)
    ratio = small.std_error[0, 0, 1] / large.std_error[0, 0, 1]
    assert ratio == pytest.approx(2.0, rel=0.15)


def test_local_field_with_global_kernel_matches_global_time(units):
    tau = units.hbar / DELTA_E
    parts = _local_parts()
    h = DiagonalHamiltonian(eigenvalues=np.real(np.diag(parts.total())))
    rho = DensityMatrix(entries=np.full((2, 2), 0.5, dtype=np.complex128))
    times = [0.5 * tau, tau]

    local = ensemble_average(
        GaussianLocalTimeField(kernel=global_kernel(2, tau), parts=parts), rho, h, times, 2000, 4, units
    )
    global_ = ensemble_average(GaussianGlobalTime(tau=tau), rho, h, times, 2000, 5, units)
    combined = np.sqrt(local.std_error ** 2 + global_.std_error ** 2)
    z = np.abs(local.mean - global_.mean) / np.maximum(combined, 1e-9)
    assert float(np.max(z)) <= 5.0


def test_noncommuting_local_field_agrees_with_local_master_at_short_times(units):
    t_final = 0.1 * units.hbar / DELTA_E
    tau = 0.1 * t_final
    sigma_x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sigma_z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    parts = LocalHamiltonian(parts=[DELTA_E * sigma_x, DELTA_E * sigma_z])
    assert not parts.commuting()
    kernel = diagonal_kernel([tau, tau])
    rho0 = pure_state([np.cos(0.3), np.sin(0.3)])

    traj = integrate(LocalDoubleCommutator(parts=parts, kernel=kernel), rho0, t_final, 2000, units)
    times = traj.times[500::500]
    ens = ensemble_average(
        GaussianLocalTimeField(kernel=kernel, parts=parts),
        rho0,
        DenseHamiltonian(matrix=parts.total()),
        times,
        1000,
        7,
        units,
    )
    max_z, _ = compare_to_master(ens, traj)
    assert max_z <= 5.0
