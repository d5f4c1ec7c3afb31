"""Quantum deletion-correcting codes: construction, verification, simulation."""

__version__ = "0.1.0"
