"""Regularity of laws of smooth maps on Gaussian space: numerical toolkit."""

__version__ = "0.1.0"
