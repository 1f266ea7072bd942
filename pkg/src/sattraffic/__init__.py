"""Deterministic traffic and channel simulator for multibeam GEO satellites."""

__version__ = "0.1.0"
