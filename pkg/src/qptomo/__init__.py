"""Simulated two-qubit state tomography with product and SIC measurements."""

__version__ = "0.1.0"
