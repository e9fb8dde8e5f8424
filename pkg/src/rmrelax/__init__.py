"""Random-matrix models of two-level relaxation."""

__version__ = "0.1.0"
