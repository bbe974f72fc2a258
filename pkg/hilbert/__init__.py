"""Polynomial law discovery with Positivstellensatz certificates."""

__version__ = "0.1.0"
