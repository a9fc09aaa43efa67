"""Nonlinear Landau-Zener tunneling: levels, phase space, and sweep dynamics."""

__version__ = "0.1.0"
