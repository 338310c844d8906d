"""Boundary symplectic geometry of the 2D wave equation."""

__version__ = "0.1.0"
