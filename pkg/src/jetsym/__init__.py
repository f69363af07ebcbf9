"""Symmetry-based non-observability analysis for second-order evolution PDEs."""

__version__ = "0.1.0"
