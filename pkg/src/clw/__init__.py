"""Continuous-logic workbench: formulas, finite metric structures, exact
evaluation, nets of compact spaces and reproducible experiments."""

__version__ = "0.1.0"
