"""Cavity-mediated effective interactions between low-energy matter excitations."""
__version__ = "0.1.0"
