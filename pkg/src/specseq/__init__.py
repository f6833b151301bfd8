"""Exact second-quadrant spectral sequence engine for section algebras."""

__version__ = "0.1.0"
