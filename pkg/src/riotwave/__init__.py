"""Rioting activity / social tension reaction-diffusion laboratory."""

__version__ = "0.1.0"
