"""Killing nullity, intersection counts and tightness checks for Lagrangian surfaces of S^2 x S^2."""

__version__ = "0.1.0"
