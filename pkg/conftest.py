# conftest.py
"""Fixtures compartidas por las pruebas del laboratorio."""

import numpy as np
import pytest

from decolab.core.quantum import make_superposition
from decolab.core.units import DEFAULT_UNITS, UnitsContext
from decolab.schemas.states import SuperpositionSpec

# ===============================
# CONSTANTES DE PRUEBA
# ===============================
DELTA_E = 1e-19  # J


@pytest.fixture
def units() -> UnitsContext:
    return DEFAULT_UNITS


@pytest.fixture
def reduced_units() -> UnitsContext:
    """ℏ = 1 para casos adimensionales."""
    return UnitsContext(hbar=1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def two_level():
    """Superposición equilibrada con brecha ΔE = 1e-19 J."""
    amplitude = 2 ** -0.5
    return make_superposition(SuperpositionSpec(amplitudes=[amplitude, amplitude], energies=[0.0, DELTA_E]))


def random_hermitian_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
