"""Weighted-graph exponent calculus and Monte Carlo checks for fBm functionals."""

__version__ = "0.1.0"
