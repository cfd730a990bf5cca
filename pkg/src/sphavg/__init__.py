"""Exponent geometry and numerical experiments for multilinear spherical averages."""

__version__ = "0.1.0"
