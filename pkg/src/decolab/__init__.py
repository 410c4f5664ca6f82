# src/decolab/__init__.py
"""Laboratorio numérico de decoherencia energética y gravitatoria."""

__version__ = "0.1.0"
