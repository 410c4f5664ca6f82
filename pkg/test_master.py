# test_master.py
"""Pruebas de las ecuaciones maestras, del integrador RK4 y del ajuste de tasas."""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from pydantic import ValidationError

from conftest import DELTA_E, random_density, random_hermitian_matrix
from decolab.core.exceptions import DimensionMismatchError, IntegrationError, InvalidParameterError
from decolab.core.quantum import as_hamiltonian
from decolab.core.units import UnitsContext
from decolab.schemas.evolution import (
    AdlerEffective,
    DiosiPenrosePointer,
    GlobalDoubleCommutator,
    LocalDoubleCommutator,
    LocalHamiltonian,
    MilburnExact,
    MilburnFirstOrder,
    Trajectory,
)
from decolab.schemas.kernels import CorrelationKernel
from decolab.schemas.states import DensityMatrix, DiagonalHamiltonian
from decolab.services.kernels import diagonal_kernel, global_kernel
from decolab.services.master import (
    DecoherenceConvention,
    balanced_pointer_state,
    build_rhs,
    decoherence_time,
    fit_offdiag_decay,
    integrate,
    recommended_n_steps,
    rhs_dp_pointer,
    rhs_global,
    rhs_local,
    rhs_milburn_exact,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
REDUCED = UnitsContext(hbar=1.0)


# ===============================
# PROPIEDADES ESTRUCTURALES
# ===============================

@hyp_settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 5), tau=st.floats(0.0, 3.0))
def test_global_rhs_is_traceless_and_hermitian(seed, dim, tau):
    rng = np.random.default_rng(seed)
    h = as_hamiltonian(random_hermitian_matrix(rng, dim))
    out = rhs_global(h, tau, random_density(rng, dim), REDUCED)
    assert abs(np.trace(out)) < 1e-12 * max(1.0, np.max(np.abs(out)))
    assert np.max(np.abs(out - out.conj().T)) < 1e-12 * max(1.0, np.max(np.abs(out)))


@hyp_settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n_parts=st.integers(1, 3))
def test_local_rhs_is_traceless_and_hermitian(seed, n_parts):
    rng = np.random.default_rng(seed)
    parts = LocalHamiltonian(parts=[random_hermitian_matrix(rng, 3) for _ in range(n_parts)])
    b = rng.standard_normal((n_parts, n_parts))
    kernel = CorrelationKernel(matrix=b @ b.T / n_parts + 0.1 * np.eye(n_parts), variant="custom")
    out = rhs_local(parts, kernel, random_density(rng, 3), REDUCED)
    scale = max(1.0, float(np.max(np.abs(out))))
    assert abs(np.trace(out)) < 1e-12 * scale
    assert np.max(np.abs(out - out.conj().T)) < 1e-12 * scale


def test_global_rhs_rejects_negative_tau(two_level, units):
    rho, h = two_level
    with pytest.raises(InvalidParameterError):
        rhs_global(h, -1.0, rho, units)


def test_first_order_and_adler_share_global_rhs(rng, reduced_units):
    h = as_hamiltonian(random_hermitian_matrix(rng, 3))
    rho = random_density(rng, 3)
    reference = build_rhs(GlobalDoubleCommutator(h=h, tau=0.2), reduced_units)(rho)
    first_order = build_rhs(MilburnFirstOrder(h=h, tau_planck=0.2), reduced_units)(rho)
    adler = build_rhs(AdlerEffective(h_eff=h, tau=0.2), reduced_units)(rho)
    assert np.array_equal(first_order, reference)
    assert np.array_equal(adler, reference)


def test_local_with_global_kernel_matches_global_total(rng, reduced_units):
    blocks = [np.diag(rng.standard_normal(3)).astype(np.complex128) for _ in range(3)]
    parts = LocalHamiltonian(parts=blocks)
    rho = random_density(rng, 3)
    local = rhs_local(parts, global_kernel(3, 0.4), rho, reduced_units)
    total = as_hamiltonian(parts.total())
    assert np.allclose(local, rhs_global(total, 0.4, rho, reduced_units), atol=1e-13)


def test_local_rhs_rejects_kernel_of_wrong_size(reduced_units):
    parts = LocalHamiltonian(parts=[SIGMA_X, SIGMA_Z])
    with pytest.raises(DimensionMismatchError):
        rhs_local(parts, diagonal_kernel([1.0, 1.0, 1.0]), np.eye(2) / 2, reduced_units)


def test_local_model_validates_sizes():
    with pytest.raises(ValidationError):
        LocalDoubleCommutator(parts=LocalHamiltonian(parts=[SIGMA_X]), kernel=diagonal_kernel([1.0, 1.0]))


# ===============================
# DESARROLLO DE MILBURN
# ===============================

def _milburn_relative_deviation(theta: float, units) -> float:
    h = DiagonalHamiltonian(eigenvalues=[0.0, 1.0])
    rho = np.full((2, 2), 0.5, dtype=np.complex128)
    exact = rhs_milburn_exact(h, theta, rho, units)
    first = rhs_global(h, theta, rho, units)
    return float(np.max(np.abs(exact - first)) / np.max(np.abs(first)))


def test_milburn_exact_approaches_first_order(reduced_units):
    assert _milburn_relative_deviation(1e-3, reduced_units) < 1e-6


def test_milburn_deviation_scales_quadratically(reduced_units):
    ratio = _milburn_relative_deviation(1e-2, reduced_units) / _milburn_relative_deviation(1e-3, reduced_units)
    assert ratio == pytest.approx(100.0, rel=0.1)


def test_milburn_exact_rate_is_one_minus_cosine(reduced_units):
    theta = 0.5
    model = MilburnExact(h=DiagonalHamiltonian(eigenvalues=[0.0, 1.0]), tau_planck=theta)
    expected = (1.0 - math.cos(theta)) / theta
    traj = integrate(model, balanced_pointer_state(2), 5.0 / expected, 4000, reduced_units)
    rate, phase, residual = fit_offdiag_decay(traj, 0, 1)
    assert rate == pytest.approx(expected, rel=1e-6)
    assert abs(phase) == pytest.approx(math.sin(theta) / theta, rel=1e-6)
    assert residual < 1e-6


# ===============================
# DECAIMIENTO ANALÍTICO
# ===============================

@pytest.fixture
def decay_run(two_level, units):
    rho, h = two_level
    tau = 1e-16
    model = GlobalDoubleCommutator(h=h, tau=tau)
    rate = tau * DELTA_E ** 2 / (2 * units.hbar ** 2)
    t_final = 3.0 / rate
    n_steps = 8 * recommended_n_steps(model, t_final, units)
    return integrate(model, rho, t_final, n_steps, units), rate


def test_global_decay_matches_analytic(decay_run, units):
    traj, rate = decay_run
    expected = 0.5 * np.exp(-rate * traj.times)
    assert np.allclose(np.abs(traj.element(0, 1)), expected, rtol=1e-7, atol=0.0)
    fitted, phase, _ = fit_offdiag_decay(traj, 0, 1)
    assert fitted == pytest.approx(rate, rel=1e-6)
    assert phase == pytest.approx(DELTA_E / units.hbar, rel=1e-6)


def test_global_decay_keeps_populations(decay_run):
    traj, _ = decay_run
    assert np.allclose(traj.element(0, 0), 0.5, atol=1e-12)
    assert np.allclose(traj.element(1, 1), 0.5, atol=1e-12)


def test_zero_tau_is_purely_unitary(two_level, units):
    rho, h = two_level
    t_final = 10 * units.hbar / DELTA_E
    traj = integrate(GlobalDoubleCommutator(h=h, tau=0.0), rho, t_final, 2000, units)
    assert np.allclose(np.abs(traj.element(0, 1)), 0.5, rtol=1e-9)


def test_local_evolution_stays_positive(reduced_units):
    model = LocalDoubleCommutator(
        parts=LocalHamiltonian(parts=[SIGMA_X, SIGMA_Z]),
        kernel=diagonal_kernel([0.3, 0.3]),
    )
    rho0 = DensityMatrix(entries=[[0.8, 0.3], [0.3, 0.2]])
    traj = integrate(model, rho0, 20.0, 4000, reduced_units)
    smallest = min(float(np.linalg.eigvalsh(r)[0]) for r in traj.rho)
    assert smallest > -1e-8
    # ambos generadores desfasan: el estado tiende al máximamente mezclado
    assert np.allclose(traj.rho[-1], np.eye(2) / 2, atol=1e-3)


# ===============================
# ESCALAS DE TIEMPO
# ===============================

def test_decoherence_time_conventions(units):
    nominal = decoherence_time(DELTA_E, 1e-16, DecoherenceConvention.NOMINAL, units)
    exact = decoherence_time(DELTA_E, 1e-16, "rate_exact", units)
    assert nominal == pytest.approx(units.hbar ** 2 / (1e-16 * DELTA_E ** 2))
    assert exact == 2 * nominal


@pytest.mark.parametrize("delta_e, tau", [(0.0, 1e-16), (DELTA_E, 0.0), (-DELTA_E, 1e-16)])
def test_decoherence_time_rejects_non_positive_inputs(delta_e, tau):
    with pytest.raises(InvalidParameterError):
        decoherence_time(delta_e, tau)


# ===============================
# ERRORES DEL INTEGRADOR
# ===============================

@pytest.mark.parametrize("t_final, n_steps", [(1.0, 0), (0.0, 10), (-1.0, 10)])
def test_integrate_rejects_bad_grid(two_level, reduced_units, t_final, n_steps):
    rho, h = two_level
    with pytest.raises(InvalidParameterError):
        integrate(GlobalDoubleCommutator(h=h, tau=0.0), rho, t_final, n_steps, reduced_units)


def test_integrate_rejects_invalid_initial_state(reduced_units):
    h = DiagonalHamiltonian(eigenvalues=[0.0, 1.0])
    bad = DensityMatrix(entries=[[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(IntegrationError) as exc:
        integrate(GlobalDoubleCommutator(h=h, tau=0.1), bad, 1.0, 10, reduced_units)
    assert "trace" in exc.value.details["violations"]


def test_integrate_aborts_when_step_is_too_large(reduced_units):
    model = GlobalDoubleCommutator(h=DiagonalHamiltonian(eigenvalues=[0.0, 1.0]), tau=200.0)
    with pytest.raises(IntegrationError):
        integrate(model, balanced_pointer_state(2), 1.0, 1, reduced_units)


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValidationError):
        Trajectory(times=[0.0, 0.0], rho=np.zeros((2, 2, 2)), model="global_double_commutator")


# ===============================
# DESFASE EN BASE PUNTERO
# ===============================

def test_pointer_model_decays_at_given_rate(units):
    gamma = 3.0e13
    model = DiosiPenrosePointer(
        rates=[[0.0, gamma], [gamma, 0.0]],
        h_diag=DiagonalHamiltonian(eigenvalues=[0.0, 0.0]),
    )
    traj = integrate(model, balanced_pointer_state(2), 4.0 / gamma, 2000, units)
    rate, _, _ = fit_offdiag_decay(traj, 0, 1)
    assert rate == pytest.approx(gamma, rel=1e-6)


def test_pointer_model_rejects_non_zero_diagonal():
    with pytest.raises(ValidationError):
        DiosiPenrosePointer(rates=[[1.0, 0.0], [0.0, 0.0]], h_diag=DiagonalHamiltonian(eigenvalues=[0.0, 0.0]))


def test_fit_requires_off_diagonal_element(decay_run):
    traj, _ = decay_run
    with pytest.raises(InvalidParameterError):
        fit_offdiag_decay(traj, 1, 1)


def test_balanced_pointer_state():
    rho = balanced_pointer_state(3)
    assert np.allclose(rho.entries, 1 / 3)
    with pytest.raises(InvalidParameterError):
        balanced_pointer_state(0)


def test_pointer_rhs_matches_built_generator(units):
    gamma = 2.5e12
    model = DiosiPenrosePointer(
        rates=[[0.0, gamma], [gamma, 0.0]],
        h_diag=DiagonalHamiltonian(eigenvalues=[0.0, DELTA_E]),
    )
    rho = balanced_pointer_state(2)
    direct = rhs_dp_pointer(model.rates, model.h_diag, rho, units)
    assert np.array_equal(build_rhs(model, units)(rho.entries), direct)
    assert direct[0, 1] == pytest.approx(0.5 * (1j * DELTA_E / units.hbar - gamma), rel=1e-14)
    assert np.allclose(np.diag(direct), 0.0, atol=0.0)


def test_two_pointer_coherence_decays_exponentially(units):
    gamma = 2.5e12
    model = DiosiPenrosePointer(
        rates=[[0.0, gamma], [gamma, 0.0]],
        h_diag=DiagonalHamiltonian(eigenvalues=[0.0, 0.0]),
    )
    traj = integrate(model, balanced_pointer_state(2), 3.0 / gamma, 2000, units)
    assert np.allclose(traj.element(0, 1), 0.5 * np.exp(-gamma * traj.times), rtol=1e-9, atol=0.0)
    assert np.allclose(traj.element(0, 0), 0.5, atol=1e-15)


@pytest.mark.parametrize(
    "rates, invariant",
    [
        ([[0.0, -1.0], [-1.0, 0.0]], "nonnegative"),
        ([[0.0, 1.0], [2.0, 0.0]], "symmetric"),
        ([[1.0, 0.0], [0.0, 0.0]], "zero_diagonal"),
    ],
)
def test_pointer_rhs_rejects_invalid_rates(reduced_units, rates, invariant):
    h_diag = DiagonalHamiltonian(eigenvalues=[0.0, 1.0])
    with pytest.raises(InvalidParameterError) as exc:
        rhs_dp_pointer(np.array(rates), h_diag, balanced_pointer_state(2), reduced_units)
    assert exc.value.details["invariant"] == invariant


def test_pointer_rhs_rejects_rates_of_wrong_size(reduced_units):
    h_diag = DiagonalHamiltonian(eigenvalues=[0.0, 1.0])
    with pytest.raises(DimensionMismatchError):
        rhs_dp_pointer(np.ones((3, 3)) - np.eye(3), h_diag, balanced_pointer_state(2), reduced_units)


# ===============================
# LEYES DE CONSERVACIÓN Y FORMAS CERRADAS
# ===============================

@hyp_settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 5), tau=st.floats(0.01, 2.0))
def test_energy_basis_dissipators_conserve_mean_energy(seed, dim, tau):
    rng = np.random.default_rng(seed)
    h = as_hamiltonian(random_hermitian_matrix(rng, dim))
    rho = random_density(rng, dim)
    h_matrix = h.as_matrix()
    h_scale = max(1.0, float(np.max(np.abs(h_matrix))))
    models = (
        GlobalDoubleCommutator(h=h, tau=tau),
        MilburnExact(h=h, tau_planck=tau),
        MilburnFirstOrder(h=h, tau_planck=tau),
        AdlerEffective(h_eff=h, tau=tau),
    )
    for model in models:
        out = build_rhs(model, REDUCED)(rho)
        scale = max(1.0, float(np.max(np.abs(out)))) * h_scale
        assert abs(np.trace(h_matrix @ out)) < 1e-11 * scale, model.kind


def test_milburn_exact_at_half_period_kills_coherence_at_rate_two_over_tau(reduced_units):
    h = DiagonalHamiltonian(eigenvalues=[0.0, 1.0])
    tau_pl = math.pi
    rho = balanced_pointer_state(2).entries
    out = rhs_milburn_exact(h, tau_pl, rho, reduced_units)
    assert out[0, 1] == pytest.approx(-2.0 / tau_pl * rho[0, 1], abs=1e-15)
    assert out[1, 0] == pytest.approx(-2.0 / tau_pl * rho[1, 0], abs=1e-15)
    assert np.allclose(np.diag(out), 0.0, atol=1e-15)


def test_local_rhs_closed_form_for_commuting_diagonal_parts(rng, reduced_units):
    taus = np.array([0.2, 0.5, 0.9])
    energies = rng.standard_normal((3, 4))
    parts = LocalHamiltonian(parts=[np.diag(e).astype(np.complex128) for e in energies])
    rho = random_density(rng, 4)

    total = energies.sum(axis=0)
    omega = total[:, None] - total[None, :]
    gaps = energies[:, :, None] - energies[:, None, :]
    gamma = 0.5 * np.einsum("r,rnm->nm", taus, gaps ** 2)
    expected = (-1j * omega - gamma) * rho

    out = rhs_local(parts, diagonal_kernel(list(taus)), rho, reduced_units)
    assert np.allclose(out, expected, rtol=0.0, atol=1e-13)
