"""Fractional discrete NLS on the periodic lattice: solver, oracles and verification experiments."""

__version__ = "0.1.0"
