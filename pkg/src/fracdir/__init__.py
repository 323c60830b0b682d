"""Exterior-value problems for the fractional Laplacian: kernels, Monte Carlo,
weighted norms and a verification harness."""

__version__ = "0.1.0"
