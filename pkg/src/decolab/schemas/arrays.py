# src/decolab/schemas/arrays.py
"""Tipos anotados para admitir arreglos numpy dentro de los modelos pydantic."""

from typing import Annotated

import numpy as np
from pydantic import BeforeValidator


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def to_complex_array(value) -> np.ndarray:
    return _frozen(np.asarray(value, dtype=np.complex128))


def to_real_array(value) -> np.ndarray:
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        if np.any(np.abs(arr.imag) > 0):
            raise ValueError("se esperaba un arreglo real")
        arr = arr.real
    return _frozen(arr.astype(np.float64))


def to_square_complex(value) -> np.ndarray:
    arr = to_complex_array(value)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"se esperaba una matriz cuadrada, forma {arr.shape}")
    return arr


def to_square_real(value) -> np.ndarray:
    arr = to_real_array(value)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"se esperaba una matriz cuadrada, forma {arr.shape}")
    return arr


ComplexArray = Annotated[np.ndarray, BeforeValidator(to_complex_array)]
RealArray = Annotated[np.ndarray, BeforeValidator(to_real_array)]
SquareComplex = Annotated[np.ndarray, BeforeValidator(to_square_complex)]
SquareReal = Annotated[np.ndarray, BeforeValidator(to_square_real)]
