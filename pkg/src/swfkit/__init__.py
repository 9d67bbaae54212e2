"""Spherical wavelet framework vs. Ambisonics: rendering and objective evaluation."""

__version__ = "0.1.0"
