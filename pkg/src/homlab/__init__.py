"""Numerical cell formulas for stochastic homogenisation of free-discontinuity energies."""

__version__ = "0.1.0"
