"""Numerical ratio tests for quasiradial Fourier multipliers."""

__version__ = "0.1.0"
