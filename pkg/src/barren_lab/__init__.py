"""Gradient statistics of layered rotation circuits: moments, light cones, sweeps."""

__version__ = "0.1.0"
