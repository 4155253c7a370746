"""Numerical laboratory for variance-based uncertainty relations assisted by quantum control."""

__version__ = "0.1.0"
