"""Stability of nonlinear modes of a compressed, hinged beam."""

__version__ = "0.1.0"
