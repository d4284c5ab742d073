"""Hierarchical LaTeX formula analysis, sub-formula decomposition, fair
evaluation metrics and a small numerical fusion model."""

__version__ = "0.1.0"
