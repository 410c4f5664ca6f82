# src/decolab/schemas/noise.py
"""Modelos de ruido (cuadros estocásticos) y resultados de conjunto."""

from typing import Annotated, Iterator, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .arrays import ComplexArray, RealArray
from .evolution import LocalHamiltonian
from .kernels import CorrelationKernel
from .states import DensityMatrix


class GaussianGlobalTime(BaseModel):
    """t → t + δt con M[δt²] = τt."""
    kind: Literal["gaussian_global_time"] = "gaussian_global_time"
    tau: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)


class PoissonDiscreteTime(BaseModel):
    """Tiempo discreto nτ_Pl con n ~ Poisson(t/τ_Pl)."""
    kind: Literal["poisson_discrete_time"] = "poisson_discrete_time"
    tau_pl: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)


class FluctuatingPlanck(BaseModel):
    """ℏ⁻¹ → ℏ⁻¹ + δ con M[δ²] = ℏ⁻²τ/t (promedio sobre el periodo t)."""
    kind: Literal["fluctuating_planck"] = "fluctuating_planck"
    tau: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)


class _LocalNoise(BaseModel):
    kernel: CorrelationKernel
    parts: LocalHamiltonian

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _sizes(self):
        if self.kernel.n_cells != self.parts.n_parts:
            raise ValueError("el kernel y las partes locales tienen tamaños distintos")
        return self


class GaussianLocalTimeField(_LocalNoise):
    """t_r = t + δt_r con M[δt_r δt_r′] = τ_rr′ t."""
    kind: Literal["gaussian_local_time_field"] = "gaussian_local_time_field"


class LocalFluctuatingPlanck(_LocalNoise):
    """ℏ⁻¹ → ℏ⁻¹ + δ_r por celda con M[δ_r δ_r′] = ℏ⁻²τ_rr′/t."""
    kind: Literal["local_fluctuating_planck"] = "local_fluctuating_planck"


NoiseModel = Annotated[
    Union[
        GaussianGlobalTime,
        PoissonDiscreteTime,
        FluctuatingPlanck,
        GaussianLocalTimeField,
        LocalFluctuatingPlanck,
    ],
    Field(discriminator="kind"),
]

LOCAL_NOISE_KINDS = ("gaussian_local_time_field", "local_fluctuating_planck")


class NoiseDraw(BaseModel):
    """
    Variables aleatorias de una trayectoria en cada tiempo pedido.

    Los modelos globales se reducen a un tiempo efectivo s (la evolución es
    e^{−iHs/ℏ}); los locales a un vector de tiempos locales t_r por instante.
    """
    times: RealArray
    effective_times: Optional[RealArray] = None
    counts: Optional[RealArray] = None
    planck_shifts: Optional[RealArray] = None
    local_times: Optional[RealArray] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class EnsembleResult(BaseModel):
    """Media estocástica M[|ψ⟩⟨ψ|] y su error estadístico por entrada."""
    times: RealArray
    mean: ComplexArray
    std_error: RealArray
    n_traj: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _shapes(self) -> "EnsembleResult":
        if self.mean.ndim != 3 or self.mean.shape != self.std_error.shape:
            raise ValueError("mean y std_error deben tener forma (n_times, d, d)")
        if self.mean.shape[0] != self.times.shape[0]:
            raise ValueError("mean y times tienen longitudes distintas")
        return self

    @property
    def mean_state(self) -> List[DensityMatrix]:
        return [DensityMatrix(entries=m) for m in self.mean]


class ComparisonRow(BaseModel):
    t: float
    i: int
    j: int
    ensemble: complex
    master: complex
    std_error: float
    z: float


class ComparisonTable(BaseModel):
    """z-scores |media − maestra| / error estándar por tiempo y entrada."""
    times: RealArray
    z: RealArray
    ensemble: ComplexArray
    master: ComplexArray
    std_error: RealArray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def max_z(self) -> float:
        return float(np.max(self.z)) if self.z.size else 0.0

    def rows(self) -> Iterator[ComparisonRow]:
        n_times, dim, _ = self.z.shape
        for k in range(n_times):
            for i in range(dim):
                for j in range(dim):
                    yield ComparisonRow(
                        t=float(self.times[k]),
                        i=i,
                        j=j,
                        ensemble=complex(self.ensemble[k, i, j]),
                        master=complex(self.master[k, i, j]),
                        std_error=float(self.std_error[k, i, j]),
                        z=float(self.z[k, i, j]),
                    )
