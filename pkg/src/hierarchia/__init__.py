"""Exact and numerical tools for the NLS, GP and KdV integrable hierarchies."""

__version__ = "0.1.0"
