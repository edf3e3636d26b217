"""Finite subdivision rules from critically finite rational maps."""

__version__ = "0.1.0"
