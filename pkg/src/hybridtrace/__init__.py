"""Numerical laboratory for the hybrid Selberg trace formula on Hilbert modular groups of real quadratic fields."""
from __future__ import annotations

__version__ = "0.1.0"
