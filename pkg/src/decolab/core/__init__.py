# src/decolab/core/__init__.py
