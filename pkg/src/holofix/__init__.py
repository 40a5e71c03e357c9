"""Holomorphic self-maps with prescribed discrete fixed-point sets."""

__version__ = "0.1.0"
