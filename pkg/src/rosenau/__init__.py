"""Rosenau: existence boundary of monotone travelling waves for the generalised Rosenau-KdV equation."""

__version__ = "0.1.0"
