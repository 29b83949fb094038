"""Decimal-comparison misconception diagnosis engine."""

__version__ = "0.1.0"
