# src/decolab/core/exceptions.py
"""
Jerarquía de excepciones del laboratorio.

Cada error lleva un mensaje legible y un diccionario `details` con el
invariante violado y el residuo medido, para que la CLI pueda reportarlo
sin inspeccionar el traceback.
"""

from typing import Optional


class DecolabError(Exception):
    """Excepción base para errores de los motores numéricos."""

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        if not self.details:
            return self.message
        extra = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.message} ({extra})"


class NormalizationError(DecolabError):
    """Amplitudes o estados que no están normalizados."""


class DimensionMismatchError(DecolabError):
    """Dimensiones de matrices incompatibles."""


class InvalidParameterError(DecolabError):
    """Parámetro físico fuera de su dominio (tiempos negativos, tasas < 0, ...)."""


class KernelNotPSDError(DecolabError):
    """Kernel de correlación asimétrico o no semidefinido positivo."""


class GridTooLargeError(DecolabError):
    """La malla supera el límite de celdas configurado."""


class IntegrationError(DecolabError):
    """El integrador abortó (deriva de traza, positividad perdida)."""


class SamplingError(DecolabError):
    """Un modelo de ruido no puede muestrearse con los parámetros dados."""


class GridMismatchError(DecolabError):
    """Dos distribuciones de masa no comparten malla o suavizado."""


class BallDoesNotFitError(DecolabError):
    """La bola no cabe en la malla con el margen requerido."""


class NoCrossingError(DecolabError):
    """No hay cruce t_dyn = t_D dentro del rango de barrido."""


class TraceDynamicsError(DecolabError):
    """Forma incompatible o explosión numérica en la dinámica de trazas."""


class ScenarioError(DecolabError):
    """Archivo de escenario inválido: clave desconocida, faltante o unidad errónea."""
