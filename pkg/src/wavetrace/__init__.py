"""Numerics for Schottky surfaces: length spectra, Selberg zeta, trace formulas."""

__version__ = "0.1.0"
