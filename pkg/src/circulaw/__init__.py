"""Numerical laboratory for the local circular law."""

__version__ = "0.1.0"
