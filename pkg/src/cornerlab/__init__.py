"""Exact corner combinatorics, Bohr sets, uniformity norms and density increments."""

__version__ = "0.1.0"
