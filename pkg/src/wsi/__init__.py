"""Wage sentiment indices from survey comments, evaluated as leading indicators."""

__version__ = "0.1.0"
