"""Behavioural simulator of a QAHE crosspoint compute-in-memory array."""

__version__ = "0.1.0"
