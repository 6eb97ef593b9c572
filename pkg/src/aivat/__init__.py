"""Variance-reduced agent evaluation for extensive-form games."""

__version__ = "0.1.0"
