"""Automatic generation of CHR constraint solvers from constraint logic
programs."""

__version__ = "0.1.0"
