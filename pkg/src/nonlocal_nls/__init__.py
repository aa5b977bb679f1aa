"""Pseudospectral laboratory for the PT-symmetric nonlocal cubic Schrodinger equation."""

__version__ = "0.1.0"
