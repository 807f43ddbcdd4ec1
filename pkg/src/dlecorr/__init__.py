"""Correspondence calculus for normal distributive lattice expansions."""

__version__ = "0.1.0"
