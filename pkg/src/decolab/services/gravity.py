# src/decolab/services/gravity.py
"""
Energías gravitatorias regularizadas entre distribuciones de masa, tiempos de
decaimiento de Penrose/Diósi y estimación del radio crítico.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.spatial.distance import cdist

from ..core.config import settings
from ..core.exceptions import (
    BallDoesNotFitError,
    GridMismatchError,
    InvalidParameterError,
    NoCrossingError,
)
from ..core.units import DEFAULT_UNITS, UnitsContext
from ..schemas.evolution import DiosiPenrosePointer
from ..schemas.gravity import (
    CriticalRadiusResult,
    GravResult,
    LumpPair,
    MassDensityField,
    RadiusSample,
)
from ..schemas.kernels import CellGrid
from ..schemas.states import DiagonalHamiltonian
from .kernels import smeared_coulomb
from .master import balanced_pointer_state, fit_offdiag_decay, integrate

logger = logging.getLogger(__name__)

PAIR_CHUNK = 1024
FOURIER_X_MAX = 2000.0
GAUSS_CUTOFF = 6.0

SWEEP_R_MIN = 1e-9
SWEEP_R_MAX = 1e-3
SWEEP_POINTS = 61


# ============================================================
# SUMAS DOBLES SOBRE CELDAS
# ============================================================

def _weighted_sum(
    centers_a: np.ndarray,
    weights_a: np.ndarray,
    centers_b: np.ndarray,
    weights_b: np.ndarray,
    sigma: float,
) -> float:
    # Σ_r Σ_r′ w_r K_σ(|r−r′|) w′_r′ por bloques de filas, en orden fijo
    total = 0.0
    for start in range(0, len(weights_a), PAIR_CHUNK):
        stop = start + PAIR_CHUNK
        block = smeared_coulomb(cdist(centers_a[start:stop], centers_b), sigma)
        total += float(weights_a[start:stop] @ block @ weights_b)
    return total


def _require_compatible(f: MassDensityField, g: MassDensityField) -> None:
    if not f.compatible_with(g):
        raise GridMismatchError(
            "Los campos no comparten malla y σ",
            {"dims": (f.grid.dims, g.grid.dims), "sigma": (f.sigma, g.sigma)},
        )


def _field_sum(f_values: np.ndarray, g_values: np.ndarray, f: MassDensityField) -> float:
    volume = f.grid.cell_volume
    centers = f.centers()
    f_idx = np.flatnonzero(f_values)
    g_idx = np.flatnonzero(g_values)
    if f_idx.size == 0 or g_idx.size == 0:
        return 0.0
    return volume ** 2 * _weighted_sum(
        centers[f_idx], f_values[f_idx], centers[g_idx], g_values[g_idx], f.sigma
    )


def pair_energy(
    f: MassDensityField,
    g: MassDensityField,
    units: UnitsContext = DEFAULT_UNITS,
) -> float:
    """
    D_fg = G Σ_r Σ_r′ f_r g_r′ a⁶ K_σ(|r−r′|) en J.

    Sólo se suman las celdas con densidad no nula de cada campo.

    Raises:
        GridMismatchError: mallas o σ distintos
    """
    _require_compatible(f, g)
    return max(units.G * _field_sum(f.values, g.values, f), 0.0)


def _difference_energy(f: MassDensityField, g: MassDensityField, units: UnitsContext) -> float:
    # G∬(f−g)(f′−g′)K_σ, forma cuadrática con kernel definido positivo
    diff = f.values - g.values
    if not np.any(diff):
        return 0.0
    return max(units.G * _field_sum(diff, diff, f), 0.0)


def _decay_time(energy: float, hbar: float) -> float:
    return hbar / energy if energy > 0 else math.inf


def egrav(pair: LumpPair, units: UnitsContext = DEFAULT_UNITS) -> GravResult:
    """
    E_grav = (G/2)∬(f₁−f₂)(f₁′−f₂′)K_σ y t_D = ℏ/E_grav.

    E_grav se evalúa sobre el campo diferencia; la identidad con
    ½(D₁₁+D₂₂−2D₁₂) se informa como residuo relativo.
    """
    _require_compatible(pair.f1, pair.f2)
    d11 = pair_energy(pair.f1, pair.f1, units)
    d22 = pair_energy(pair.f2, pair.f2, units)
    d12 = pair_energy(pair.f1, pair.f2, units)
    e_grav = 0.5 * _difference_energy(pair.f1, pair.f2, units)

    from_parts = 0.5 * (d11 + d22 - 2.0 * d12)
    scale = max(d11, d22, np.finfo(float).tiny)
    residual = abs(e_grav - from_parts) / scale
    single_cross = 0.5 * abs(d11 + d22 - d12)

    logger.debug(
        f"D11={d11:.4e} J, D22={d22:.4e} J, D12={d12:.4e} J, E_grav={e_grav:.4e} J "
        f"(residuo {residual:.1e})"
    )
    return GravResult(
        d11=d11,
        d22=d22,
        d12=d12,
        e_grav=e_grav,
        t_d=_decay_time(e_grav, units.hbar),
        e_grav_single_cross=single_cross,
        t_d_interaction_only=_decay_time(d12, units.hbar),
        identity_residual=residual,
    )


def pointer_rates(fields: Sequence[MassDensityField], units: UnitsContext = DEFAULT_UNITS) -> np.ndarray:
    """Γ_nm = E_grav(f_n, f_m)/ℏ para N ≥ 2 estados puntero."""
    if len(fields) < 2:
        raise InvalidParameterError("Se necesitan al menos dos grumos", {"n": len(fields)})
    n = len(fields)
    rates = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            _require_compatible(fields[a], fields[b])
            rates[a, b] = rates[b, a] = 0.5 * _difference_energy(fields[a], fields[b], units) / units.hbar
    return rates


def dp_rate_check(
    pair: LumpPair,
    units: UnitsContext = DEFAULT_UNITS,
    n_steps: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Cierra el lazo Penrose ↔ Diósi: integra el modelo de dos estados puntero
    con Γ₀₁ = E_grav/ℏ y ajusta la tasa de decaimiento de ρ₀₁.

    Returns:
        (tasa ajustada a la ecuación maestra, E_grav/ℏ) en s⁻¹
    """
    rate = egrav(pair, units).e_grav / units.hbar
    if rate == 0:
        return 0.0, 0.0

    model = DiosiPenrosePointer(
        rates=np.array([[0.0, rate], [rate, 0.0]]),
        h_diag=DiagonalHamiltonian(eigenvalues=[0.0, 0.0]),
    )
    n_steps = n_steps or settings.default_n_steps
    traj = integrate(model, balanced_pointer_state(2), 2.0 / rate, n_steps, units)
    fitted, _, _ = fit_offdiag_decay(traj, 0, 1)
    logger.info(f"Tasa ajustada {fitted:.6e} s⁻¹ frente a E_grav/ℏ = {rate:.6e} s⁻¹")
    return fitted, rate


# ============================================================
# GEOMETRÍA
# ============================================================

def grid_center(grid: CellGrid) -> np.ndarray:
    return np.asarray(grid.origin) + 0.5 * np.asarray(grid.dims) * np.asarray(grid.spacing)


def uniform_ball(
    mass: float,
    radius: float,
    grid: CellGrid,
    sigma: float,
    center: Optional[Sequence[float]] = None,
) -> MassDensityField:
    """
    Bola rígida uniforme: ρ = M/(4πR³/3) en las celdas con centro dentro de R.

    La masa discretizada se renormaliza a `mass`. Por defecto la bola se
    centra en la malla.

    Raises:
        BallDoesNotFitError: la bola más un margen 3σ sale de la malla, o
            ningún centro de celda cae dentro de R
    """
    if mass <= 0 or radius <= 0:
        raise InvalidParameterError("Masa y radio deben ser > 0", {"mass": mass, "radius": radius})
    center = grid_center(grid) if center is None else np.asarray(center, dtype=np.float64)
    lower = np.asarray(grid.origin)
    upper = lower + np.asarray(grid.dims) * np.asarray(grid.spacing)
    reach = radius + 3.0 * sigma
    if np.any(center - reach < lower) or np.any(center + reach > upper):
        raise BallDoesNotFitError(
            "La bola con margen 3σ no cabe en la malla",
            {"center": center.tolist(), "reach": reach, "lower": lower.tolist(), "upper": upper.tolist()},
        )

    centers = grid.centers()
    inside = np.linalg.norm(centers - center, axis=1) <= radius
    if not np.any(inside):
        raise BallDoesNotFitError(
            "Ningún centro de celda cae dentro de la bola",
            {"radius": radius, "spacing": grid.min_spacing},
        )

    density = mass / (4.0 * math.pi * radius ** 3 / 3.0)
    values = np.where(inside, density, 0.0)
    values *= mass / (np.sum(values) * grid.cell_volume)
    return MassDensityField(grid=grid, values=values, sigma=sigma, nominal_density=density)


# ============================================================
# ORÁCULO DE CUADRATURA
# ============================================================

def _ball_form_factor(x: np.ndarray) -> np.ndarray:
    # 3(sin x − x cos x)/x³, con el límite 1 − x²/10 cerca de cero
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = 1.0 - xs ** 2 / 10.0 + xs ** 4 / 280.0
    xl = x[~small]
    out[~small] = 3.0 * (np.sin(xl) - xl * np.cos(xl)) / xl ** 3
    return out


def smeared_ball_pair_energy(
    mass_1: float,
    radius_1: float,
    mass_2: float,
    radius_2: float,
    separation: float,
    sigma: float,
    units: UnitsContext = DEFAULT_UNITS,
) -> float:
    """
    D entre dos bolas uniformes suavizadas con σ, por cuadratura en Fourier:

        D = (2G/π) M₁M₂ ∫₀^∞ F(kR₁) F(kR₂) e^{−k²σ²} j₀(kd) dk

    con F el factor de forma de la bola y j₀(x) = sin x / x.
    """
    if min(mass_1, mass_2, radius_1, radius_2) <= 0 or sigma < 0 or separation < 0:
        raise InvalidParameterError(
            "Parámetros de bola no válidos",
            {"radius_1": radius_1, "radius_2": radius_2, "sigma": sigma, "separation": separation},
        )
    length = max(radius_1, radius_2)
    x_max = FOURIER_X_MAX if sigma == 0 else min(FOURIER_X_MAX, GAUSS_CUTOFF * length / sigma)
    s1, s2, sd, ss = radius_1 / length, radius_2 / length, separation / length, sigma / length

    def integrand(x: float) -> float:
        arr = np.array([x])
        value = _ball_form_factor(s1 * arr) * _ball_form_factor(s2 * arr) * math.exp(-(x * ss) ** 2)
        return float(value[0] * np.sinc(x * sd / math.pi))

    # paneles de unas pocas oscilaciones cada uno
    panel = 8.0 * math.pi / max(1.0, sd)
    edges = np.append(np.arange(0.0, x_max, panel), x_max)
    integral = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = quad(integrand, lo, hi, limit=200, epsabs=0.0, epsrel=1e-11)
        integral += value
    return 2.0 * units.G / math.pi * mass_1 * mass_2 / length * integral


def smeared_ball_self_energy(
    mass: float,
    radius: float,
    sigma: float,
    units: UnitsContext = DEFAULT_UNITS,
) -> float:
    """D de una bola uniforme suavizada; tiende a (6/5)GM²/R cuando σ/R → 0."""
    return smeared_ball_pair_energy(mass, radius, mass, radius, 0.0, sigma, units)


# ============================================================
# RADIO CRÍTICO
# ============================================================

def critical_radius(
    density: float,
    units: UnitsContext = DEFAULT_UNITS,
    radii: Optional[Sequence[float]] = None,
    sigma_floor: Optional[float] = None,
) -> CriticalRadiusResult:
    """
    Radio en el que el tiempo dinámico MR²/ℏ iguala a t_D = ℏ/E_grav de dos
    copias de la bola desplazadas 2R (σ = R/10, acotado por debajo).

    El cruce se interpola en log-log entre puntos del barrido.

    Raises:
        NoCrossingError: t_dyn − t_D no cambia de signo en el barrido
    """
    if density <= 0:
        raise InvalidParameterError("La densidad debe ser > 0", {"density": density})
    sigma_floor = settings.default_sigma if sigma_floor is None else sigma_floor
    if radii is None:
        radii = np.logspace(math.log10(SWEEP_R_MIN), math.log10(SWEEP_R_MAX), SWEEP_POINTS)
    radii = np.sort(np.asarray(radii, dtype=np.float64))

    table: List[RadiusSample] = []
    for radius in radii:
        mass = 4.0 * math.pi / 3.0 * radius ** 3 * density
        sigma = max(radius / 10.0, sigma_floor)
        d_self = smeared_ball_self_energy(mass, radius, sigma, units)
        d_cross = smeared_ball_pair_energy(mass, radius, mass, radius, 2.0 * radius, sigma, units)
        e_grav = max(d_self - d_cross, 0.0)
        table.append(
            RadiusSample(
                radius=float(radius),
                mass=mass,
                sigma=sigma,
                t_dyn=mass * radius ** 2 / units.hbar,
                t_d=_decay_time(e_grav, units.hbar),
            )
        )

    log_ratio = np.array([math.log(s.t_dyn) - math.log(s.t_d) for s in table])
    crossings = np.flatnonzero(np.diff(np.sign(log_ratio)) != 0)
    if crossings.size == 0:
        raise NoCrossingError(
            "t_dyn y t_D no se cruzan en el barrido",
            {
                "r_min": float(radii[0]),
                "r_max": float(radii[-1]),
                "log_ratio_min": float(log_ratio[0]),
                "log_ratio_max": float(log_ratio[-1]),
            },
        )

    k = int(crossings[0])
    x0, x1 = math.log(radii[k]), math.log(radii[k + 1])
    y0, y1 = log_ratio[k], log_ratio[k + 1]
    r_crit = math.exp(x0 - y0 * (x1 - x0) / (y1 - y0))
    logger.info(f"Radio crítico para ρ = {density:.3e} kg/m³: {r_crit:.3e} m")
    return CriticalRadiusResult(density=density, r_crit=r_crit, table=table)
