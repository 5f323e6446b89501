"""Numerical and exact verification of Petersson's trace formula, Voronoi summation and the functional equation of holomorphic cusp forms."""

__version__ = "0.1.0"
