"""Casimir-Polder forces and mirror-induced noise for a harmonic atom."""
__version__ = "0.1.0"
