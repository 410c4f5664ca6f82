# src/decolab/schemas/report.py
"""Informe de ejecución: eco del escenario, tiempos, versiones y chequeos."""

import json
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CheckResult(BaseModel):
    """Resultado de un chequeo: pasa si residual ≤ tolerance."""
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    model_config = ConfigDict(frozen=True)

    @classmethod
    def evaluate(cls, name: str, residual: float, tolerance: float, detail: str = "") -> "CheckResult":
        passed = math.isfinite(residual) and residual <= tolerance
        return cls(name=name, passed=passed, residual=residual, tolerance=tolerance, detail=detail)

    @classmethod
    def exceeds(cls, name: str, value: float, minimum: float, detail: str = "") -> "CheckResult":
        """Chequeo de control negativo: pasa si value > minimum."""
        passed = math.isfinite(value) and value > minimum
        return cls(name=name, passed=passed, residual=value, tolerance=minimum, detail=detail or "requiere residual > tolerance")


def format_number(value: Any) -> str:
    """Texto reproducible para CSV e informes; ±∞ como "inf"/"-inf"."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


class RunReport(BaseModel):
    scenario: Dict[str, Any]
    wall_time: float = Field(..., ge=0, description="s")
    engine_versions: Dict[str, str]
    checks: List[CheckResult] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    error: Optional[str] = None

    @field_validator("checks")
    @classmethod
    def _unique(cls, checks: List[CheckResult]) -> List[CheckResult]:
        names = [c.name for c in checks]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ValueError(f"chequeos repetidos: {duplicated}")
        return checks

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def to_text(self) -> str:
        """Texto clave = valor, una entrada por línea."""
        lines = [
            f"scenario = {json.dumps(self.scenario, sort_keys=True, default=format_number)}",
            f"wall_time_s = {self.wall_time:.3f}",
        ]
        for name, version in sorted(self.engine_versions.items()):
            lines.append(f"version.{name} = {version}")
        for key, value in self.summary.items():
            lines.append(f"summary.{key} = {format_number(value)}")
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(
                f"check.{check.name} = {status} residual={format_number(check.residual)} "
                f"tolerance={format_number(check.tolerance)}"
                + (f" ({check.detail})" if check.detail else "")
            )
        for path in self.outputs:
            lines.append(f"output = {path}")
        if self.error:
            lines.append(f"error = {self.error}")
        lines.append(f"status = {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"
