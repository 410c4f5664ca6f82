# test_kernels.py
"""Pruebas de kernels de correlación y mallas de celdas."""

import numpy as np
import pytest
from pydantic import ValidationError

from decolab.core.exceptions import GridTooLargeError, InvalidParameterError, KernelNotPSDError
from decolab.schemas.kernels import CellGrid, CorrelationKernel, NewtonianNoiseSpec
from decolab.services.kernels import (
    diagonal_kernel,
    factor_for_sampling,
    global_kernel,
    newtonian_kernel,
    require_psd,
    smeared_coulomb,
    validate_psd,
)


# ===============================
# MALLAS
# ===============================

def test_grid_centers_follow_c_order():
    grid = CellGrid(spacing=1.0, dims=[2, 2, 1])
    centers = grid.centers()
    assert centers.shape == (4, 3)
    assert np.allclose(centers[0], [0.5, 0.5, 0.5])
    assert np.allclose(centers[1], [0.5, 1.5, 0.5])
    assert np.allclose(centers[2], [1.5, 0.5, 0.5])


def test_grid_pads_dimensions_and_volume():
    grid = CellGrid(spacing=(1e-7, 2e-7, 3e-7), dims=[3])
    assert grid.dims == (3, 1, 1)
    assert grid.cell_volume == pytest.approx(6e-21)


def test_grid_over_cap_raises():
    with pytest.raises(GridTooLargeError) as exc:
        CellGrid(spacing=1.0, dims=[10, 10, 10], cell_cap=999)
    assert exc.value.details["n_cells"] == 1000


def test_grid_rejects_non_positive_spacing():
    with pytest.raises(ValidationError):
        CellGrid(spacing=0.0, dims=[2, 1, 1])


# ===============================
# KERNEL DE COULOMB SUAVIZADO
# ===============================

def test_smeared_coulomb_limits():
    sigma = 1e-7
    near = smeared_coulomb([0.0, 1e-12 * sigma], sigma)
    assert near[0] == pytest.approx(1.0 / (sigma * np.sqrt(np.pi)))
    assert near[1] == pytest.approx(near[0], rel=1e-9)
    far = smeared_coulomb([50 * sigma], sigma)
    assert far[0] == pytest.approx(1.0 / (50 * sigma), rel=1e-12)


def test_smeared_coulomb_is_decreasing():
    d = np.linspace(0.0, 1e-6, 200)
    values = smeared_coulomb(d, 1e-7)
    assert np.all(np.diff(values) < 0)


# ===============================
# CONSTRUCTORES
# ===============================

def test_global_kernel_is_rank_one():
    k = global_kernel(3, 2e-16)
    assert k.variant == "global"
    assert np.allclose(k.matrix, 2e-16)
    assert np.linalg.matrix_rank(k.matrix / 2e-16) == 1


def test_global_kernel_rejects_negative_tau():
    with pytest.raises(InvalidParameterError):
        global_kernel(2, -1.0)


def test_diagonal_kernel():
    k = diagonal_kernel([1.0, 2.0, 3.0])
    assert np.array_equal(k.matrix, np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(InvalidParameterError):
        diagonal_kernel([1.0, -1.0])


def test_newtonian_kernel_is_symmetric_and_psd(units):
    grid = CellGrid(spacing=1e-7, dims=[3, 2, 2])
    k = newtonian_kernel(grid, NewtonianNoiseSpec(sigma=1e-7, const=1.0), units)
    assert k.variant == "newtonian"
    assert k.symmetry_residual() == 0.0
    require_psd(k)
    prefactor = units.G * units.hbar / units.c ** 4
    assert k.matrix[0, 0] == pytest.approx(prefactor / (1e-7 * np.sqrt(np.pi)))
    assert validate_psd(k) > -1e-10 * k.scale


def test_newtonian_kernel_scales_with_const(units):
    grid = CellGrid(spacing=1e-7, dims=[2, 1, 1])
    k1 = newtonian_kernel(grid, NewtonianNoiseSpec(sigma=1e-7, const=1.0), units)
    k5 = newtonian_kernel(grid, NewtonianNoiseSpec(sigma=1e-7, const=5.0), units)
    assert np.allclose(k5.matrix, 5.0 * k1.matrix, rtol=1e-14, atol=0.0)


# ===============================
# VALIDACIÓN Y FACTORIZACIÓN
# ===============================

def test_require_psd_rejects_indefinite_kernel():
    k = CorrelationKernel(matrix=[[1.0, 2.0], [2.0, 1.0]], variant="custom")
    with pytest.raises(KernelNotPSDError) as exc:
        require_psd(k)
    assert exc.value.details["invariant"] == "psd"


def test_asymmetric_kernel_is_rejected():
    k = CorrelationKernel(matrix=[[1.0, 0.5], [0.4, 1.0]], variant="custom")
    with pytest.raises(KernelNotPSDError) as exc:
        validate_psd(k)
    assert exc.value.details["invariant"] == "symmetric"


@pytest.mark.parametrize("n", [1, 2, 5])
def test_factor_reproduces_kernel(rng, n):
    b = rng.standard_normal((n, n))
    tau = 1e-16 * (b @ b.T + 0.1 * np.eye(n))
    k = CorrelationKernel(matrix=0.5 * (tau + tau.T), variant="custom")
    factor = factor_for_sampling(k)
    assert np.allclose(np.triu(factor, 1), 0.0)
    assert np.allclose(factor @ factor.T, k.matrix, rtol=1e-10, atol=1e-12 * k.scale)


def test_factor_of_global_kernel_has_rank_one():
    k = global_kernel(4, 3e-16)
    factor = factor_for_sampling(k)
    assert np.allclose(factor @ factor.T, k.matrix, rtol=1e-10, atol=1e-12 * k.scale)
    assert np.linalg.matrix_rank(factor, tol=1e-8 * np.max(np.abs(factor))) == 1


def test_factor_rejects_indefinite_kernel():
    k = CorrelationKernel(matrix=[[1.0, 2.0], [2.0, 1.0]], variant="custom")
    with pytest.raises(KernelNotPSDError):
        factor_for_sampling(k)
