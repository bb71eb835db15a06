"""Quasi-cyclic spatially coupled LDPC codes with circulant reuse."""

__version__ = "0.1.0"
