"""Pseudospectral simulation and verification toolkit for the kinetic derivative NLS on the torus."""

__version__ = "0.1.0"
