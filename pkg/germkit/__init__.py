"""Exact formal-series toolkit for superattracting germs of (C^2, 0)."""

__version__ = "1.0.0"
